"""Synthetic multichannel generators with piecewise-constant class dynamics.

Three trivariate presets cover the dependence structures of interest:

* ``mvn3``  - independent Gaussian vectors, class = cross-channel covariance
* ``vma3``  - order-2 moving average of unit Gaussian noise, class = MA taps
* ``var3``  - order-2 autoregression with correlated innovations

A scenario fixes the segment lengths between class switches; the class of
each segment is drawn uniformly, never repeating the previous one.  The
recursion state (lagged values and innovations) carries across switches so
the signal has no artificial restart; a 50-sample burn-in with the first
class is generated and discarded to wash out the zero initial state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabelledSeries, MultivariateSeries
from .errors import StabilityError, ValidationError

BURN_IN = 50


def make_rng(seed: int | np.random.Generator) -> np.random.Generator:
    """Philox-backed generator; pass through an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _arr(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ClassDynamics:
    """One class of the generating process: X_t = sum_a ar[a] X_{t-1-a}
    + eps_t + sum_b ma[b] eps_{t-1-b}, eps ~ N(0, noise_cov)."""

    ar: tuple[np.ndarray, ...]
    ma: tuple[np.ndarray, ...]
    noise_cov: np.ndarray
    noise_chol: np.ndarray = field(init=False)

    def __post_init__(self):
        cov = np.asarray(self.noise_cov, dtype=np.float64)
        object.__setattr__(self, "noise_chol", _arr(np.linalg.cholesky(cov)))


@dataclass(frozen=True)
class GeneratorPreset:
    name: str
    classes: tuple[ClassDynamics, ...]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def channels(self) -> int:
        return self.classes[0].noise_cov.shape[0]


_I3 = _arr(np.eye(3))

PRESETS: dict[str, GeneratorPreset] = {
    "mvn3": GeneratorPreset(
        "mvn3",
        (
            ClassDynamics((), (), _arr([[1, 0, 0.3], [0, 1, 0.7], [0.3, 0.7, 1]])),
            ClassDynamics((), (), _arr([[1, 0.6, 0.1], [0.6, 1, -0.4], [0.1, -0.4, 1]])),
            ClassDynamics((), (), _arr([[1, -0.5, -0.2], [-0.5, 1, 0.1], [-0.2, 0.1, 1]])),
        ),
    ),
    "vma3": GeneratorPreset(
        "vma3",
        (
            ClassDynamics(
                (),
                (
                    _arr([[1, 0, 0.6], [0, 1, 0.3], [0.6, 0.3, 1]]),
                    _arr([[1, 0.2, 0.9], [0.2, 1, 0.5], [0.9, 0.5, 1]]),
                ),
                _I3,
            ),
            ClassDynamics(
                (),
                (
                    _arr([[1, -0.7, -0.3], [-0.7, 1, 0.4], [-0.3, 0.4, 1]]),
                    _arr([[1, 0.9, -0.3], [0.9, 1, 0], [-0.3, 0, 1]]),
                ),
                _I3,
            ),
            ClassDynamics(
                (),
                (
                    _arr([[1, -0.4, 0.2], [-0.4, 1, -0.6], [0.2, -0.6, 1]]),
                    _arr([[1, 0.1, -0.5], [0.1, 1, -0.3], [-0.5, -0.3, 1]]),
                ),
                _I3,
            ),
        ),
    ),
    "var3": GeneratorPreset(
        "var3",
        (
            ClassDynamics(
                (
                    _arr([[0.2, 0.3, 0], [0.3, 0.5, 0], [0, 0, 0]]),
                    _arr([[0.6, -0.1, 0], [-0.1, -0.3, 0], [0, 0, 0]]),
                ),
                (),
                _arr([[3, 0.3, 0.9], [0.3, 3, 1.4], [0.9, 1.4, 3]]),
            ),
            ClassDynamics(
                (
                    _arr([[0, 0, 0], [0, 0.4, -0.4], [0, -0.4, 0.4]]),
                    _arr([[0, 0, 0], [0, -0.6, 0.2], [0, 0.2, 0.3]]),
                ),
                (),
                _arr([[2, 1.3, 0.4], [1.3, 1.8, 0.3], [0.4, 0.3, 2]]),
            ),
            ClassDynamics(
                (
                    _arr([[-0.1, 0, 0.4], [0, 0, 0], [0.4, 0, -0.5]]),
                    _arr([[0.2, 0, -0.2], [0, 0, 0], [-0.2, 0, -0.3]]),
                ),
                (),
                _arr([[5, 3.3, 2.5], [3.3, 4.5, 2.8], [2.5, 2.8, 3.5]]),
            ),
        ),
    ),
}


def get_preset(name: str) -> GeneratorPreset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class Scenario:
    """Segment lengths between class switches."""

    name: str
    segment_lengths: tuple[int, ...]

    def __post_init__(self):
        if not self.segment_lengths or any(s < 1 for s in self.segment_lengths):
            raise ValidationError(f"segment lengths must be positive, got {self.segment_lengths}")

    @property
    def total_length(self) -> int:
        return sum(self.segment_lengths)

    @property
    def n_changes(self) -> int:
        return len(self.segment_lengths) - 1


_SCENARIOS = {
    1: Scenario("scenario1", (100,) * 9 + (124,)),
    2: Scenario("scenario2", (100, 300, 100, 300, 100, 124)),
    3: Scenario("scenario3", (300,) * 6 + (248,)),
}


def scenario(number: int) -> Scenario:
    """The studied switching patterns: 1 = short segments (T=1024, 9
    changes), 2 = alternating long/short (T=1024, 5 changes), 3 = long
    segments (T=2048, 6 changes)."""
    try:
        return _SCENARIOS[number]
    except KeyError:
        raise ValidationError(f"scenario must be 1, 2 or 3, got {number}") from None


def spectral_radius_of_companion(ar: tuple[np.ndarray, ...]) -> float:
    """Largest eigenvalue magnitude of the VAR companion matrix."""
    p = len(ar)
    d = ar[0].shape[0]
    comp = np.zeros((p * d, p * d))
    for a, phi in enumerate(ar):
        comp[:d, a * d : (a + 1) * d] = phi
    if p > 1:
        comp[d:, : (p - 1) * d] = np.eye((p - 1) * d)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def check_stability(preset: GeneratorPreset) -> None:
    for c, cls in enumerate(preset.classes, start=1):
        if cls.ar:
            radius = spectral_radius_of_companion(cls.ar)
            if radius >= 1.0:
                raise StabilityError(
                    f"preset {preset.name!r} class {c} is explosive "
                    f"(companion spectral radius {radius:.4f})"
                )


def class_sequence(scn: Scenario, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    """One class per segment; first uniform, switches avoid repeats."""
    if n_classes < 2:
        raise ValidationError("need at least two classes to switch between")
    classes = np.empty(len(scn.segment_lengths), dtype=np.int64)
    classes[0] = rng.integers(1, n_classes + 1)
    for i in range(1, len(classes)):
        draw = int(rng.integers(1, n_classes))
        classes[i] = draw + 1 if draw >= classes[i - 1] else draw
    return classes


def _simulate_segments(
    preset: GeneratorPreset,
    segments: list[tuple[int, int]],
    rng: np.random.Generator,
) -> np.ndarray:
    """Run the switching recursion over (length, class) segments.

    Returns all samples concatenated, shape (P, sum of lengths).
    """
    p_chan = preset.channels
    max_ar = max((len(c.ar) for c in preset.classes), default=0)
    max_ma = max((len(c.ma) for c in preset.classes), default=0)
    x_hist = np.zeros((max(max_ar, 1), p_chan))  # newest first
    e_hist = np.zeros((max(max_ma, 1), p_chan))
    out = []
    for length, label in segments:
        cls = preset.classes[label - 1]
        eps = rng.standard_normal((length, p_chan)) @ cls.noise_chol.T
        if not cls.ar and not cls.ma:
            block = eps
        elif not cls.ar:
            ext = np.vstack([e_hist[len(cls.ma) - 1 :: -1], eps])
            block = ext[len(cls.ma) :].copy()
            for b, theta in enumerate(cls.ma):
                lag = len(cls.ma) - 1 - b
                block += ext[lag : lag + length] @ theta.T
        else:
            block = np.empty((length, p_chan))
            for t in range(length):
                x = eps[t].copy()
                for a, phi in enumerate(cls.ar):
                    x += phi @ x_hist[a]
                for b, theta in enumerate(cls.ma):
                    x += theta @ e_hist[b]
                x_hist = np.vstack([x[None, :], x_hist[:-1]])
                block[t] = x
        if max_ma:
            tail = min(max_ma, length)
            e_hist = np.vstack([eps[length - tail :][::-1], e_hist[: max_ma - tail]])
        if max_ar and not cls.ar:
            tail = min(max_ar, length)
            x_hist = np.vstack([block[length - tail :][::-1], x_hist[: max_ar - tail]])
        out.append(block)
    return np.vstack(out).T


def generate(
    preset: GeneratorPreset | str,
    scn: Scenario | int,
    rng: int | np.random.Generator,
) -> LabelledSeries:
    """One labelled test signal for a preset/scenario pair."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    if isinstance(scn, int):
        scn = scenario(scn)
    rng = make_rng(rng)
    check_stability(preset)
    classes = class_sequence(scn, preset.n_classes, rng)
    segments = [(BURN_IN, int(classes[0]))] + [
        (length, int(c)) for length, c in zip(scn.segment_lengths, classes)
    ]
    values = _simulate_segments(preset, segments, rng)[:, BURN_IN:]
    labels = np.repeat(classes, scn.segment_lengths)
    return LabelledSeries(MultivariateSeries(values), labels)


def make_training_set(
    preset: GeneratorPreset | str,
    window: int,
    rng: int | np.random.Generator,
) -> list[LabelledSeries]:
    """Ten labelled signals of one window length: two pure signals per
    class, then four that cycle through every class with rotated segment
    lengths (w/4 and w/2 blocks)."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    rng = make_rng(rng)
    check_stability(preset)
    n = preset.n_classes
    signals: list[LabelledSeries] = []

    def _one(segments: list[tuple[int, int]]) -> LabelledSeries:
        first = segments[0][1]
        values = _simulate_segments(preset, [(BURN_IN, first)] + segments, rng)[:, BURN_IN:]
        labels = np.repeat([c for _, c in segments], [length for length, _ in segments])
        return LabelledSeries(MultivariateSeries(values), labels)

    for c in range(1, n + 1):
        for _ in range(2):
            signals.append(_one([(window, c)]))
    base = [window // 4] * (n - 1) + [window - (n - 1) * (window // 4)]
    for m in range(4):
        r = m % n
        lengths = base[r:] + base[:r]
        signals.append(_one(list(zip(lengths, range(1, n + 1)))))
    return signals
