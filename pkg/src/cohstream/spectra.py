"""Wavelet periodograms, their unbiasing, and time-localised coherence.

The raw periodogram of a window is the rank-one outer product of the detail
vectors at each scale/location.  It is biased across scales; multiplying by
the inverse inner-product matrix of the autocorrelation wavelets and
averaging over a short time window gives a consistent spectral estimate

    S[j, k] = (2M+1)^-1 sum_{|m-k|<=M} sum_l Ainv[j, l] I[l, m]

with periodic wrap inside the window.  Coherence then normalises the
cross-spectra by the channel powers, with two guards: powers are floored at
``eps_power`` before the division (the correction can push them to zero or
below) and off-diagonal coherences are clamped to |rho| <= 1 - eps_rho so
the Fisher transform stays finite.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError


def default_bandwidth(window: int) -> int:
    """Half-width of the time smoother: floor(w**0.7 / 2).

    Rounded to 9 decimals first so exact powers (e.g. 1024**0.7 = 128) are
    not pushed below the integer by floating-point representation.
    """
    return max(0, int(np.floor(round(window**0.7 / 2.0, 9))))


def default_max_scale(levels: int) -> int:
    """Coarsest scale kept for classification: the two coarsest levels of a
    full pyramid see too few effective replicates in one window."""
    return max(1, levels - 2)


@dataclass(frozen=True)
class SmootherConfig:
    """Knobs of the unbias-and-smooth step and coherence guards."""

    bandwidth: int
    eps_power: float = 1e-10
    eps_rho: float = 1e-6

    def __post_init__(self):
        if self.bandwidth < 0:
            raise ValidationError(f"bandwidth must be >= 0, got {self.bandwidth}")
        if not (0 < self.eps_power <= 1e-3) or not (0 < self.eps_rho <= 1e-3):
            raise ValidationError("both epsilons must lie in (0, 1e-3]")


@dataclass(frozen=True)
class SpectralTensor:
    """A (J, w, P, P) stack of matrices indexed by scale and location."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 4 or v.shape[2] != v.shape[3]:
            raise ValidationError(f"expected shape (J, w, P, P), got {v.shape}")
        if not v.flags.writeable:
            object.__setattr__(self, "values", v)
        else:
            v = v.copy()
            v.setflags(write=False)
            object.__setattr__(self, "values", v)

    @property
    def levels(self) -> int:
        return self.values.shape[0]

    @property
    def window(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


def raw_periodogram(detail) -> np.ndarray:
    """Outer products of detail vectors: (J, P, w) -> (J, w, P, P).

    Accepts the detail array of a multichannel pyramid or the pyramid
    itself (built from a (P, w) input).
    """
    if hasattr(detail, "detail"):
        detail = detail.detail
    detail = np.asarray(detail, dtype=np.float64)
    if detail.ndim == 2:  # single channel (J, w)
        detail = detail[:, None, :]
    if detail.ndim != 3:
        raise ValidationError(f"detail must be (J, P, w), got shape {detail.shape}")
    return np.einsum("jpk,jqk->jkpq", detail, detail)


def _periodic_boxcar(x: np.ndarray, half_width: int, axis: int = 1) -> np.ndarray:
    """Mean over a centred window of 2*half_width+1 with circular wrap."""
    w = x.shape[axis]
    m = half_width
    if 2 * m + 1 > w:
        raise ValidationError(f"smoother span {2 * m + 1} exceeds window {w}")
    x = np.moveaxis(x, axis, 0)
    padded = np.concatenate([x[w - m :], x, x[:m]], axis=0)
    cs = np.cumsum(padded, axis=0)
    out = np.empty_like(x)
    span = 2 * m + 1
    out[0] = cs[span - 1]
    out[1:] = cs[span:] - cs[: w - 1]
    out /= span
    return np.moveaxis(out, 0, axis)


def correct_and_smooth(
    periodogram: np.ndarray, a_inv: np.ndarray, bandwidth: int
) -> np.ndarray:
    """Unbias across scales, then smooth over time.

    ``a_inv`` may keep only the rows of the scales wanted in the output, but
    must retain all J columns.
    """
    periodogram = np.asarray(periodogram, dtype=np.float64)
    a_inv = np.asarray(a_inv, dtype=np.float64)
    if a_inv.ndim != 2 or a_inv.shape[1] != periodogram.shape[0]:
        raise ValidationError(
            f"a_inv columns ({a_inv.shape}) must match periodogram scales "
            f"({periodogram.shape[0]})"
        )
    corrected = np.tensordot(a_inv, periodogram, axes=(1, 0))
    return _periodic_boxcar(corrected, bandwidth, axis=1)


@dataclass(frozen=True)
class CoherenceResult:
    """Coherence values plus counts of the numerical guards that fired."""

    values: np.ndarray  # (J, w, P, P), diagonal exactly 1
    power_floor_hits: int
    clamp_hits: int


def coherence(spectra: np.ndarray, config: SmootherConfig) -> CoherenceResult:
    """Normalise cross-spectra to coherences in [-1+eps, 1-eps]."""
    s = np.asarray(spectra, dtype=np.float64)
    power = np.einsum("jkpp->jkp", s)
    floor_hits = int(np.count_nonzero(power < config.eps_power))
    power = np.maximum(power, config.eps_power)
    denom = np.sqrt(power[..., :, None] * power[..., None, :])
    rho = s / denom
    limit = 1.0 - config.eps_rho
    off = ~np.eye(s.shape[-1], dtype=bool)
    clamp_hits = int(np.count_nonzero(np.abs(rho[..., off]) > limit))
    np.clip(rho, -limit, limit, out=rho)
    idx = np.arange(s.shape[-1])
    rho[..., idx, idx] = 1.0
    return CoherenceResult(rho, floor_hits, clamp_hits)


def fisher_z(rho: np.ndarray) -> np.ndarray:
    """arctanh of the off-diagonal coherences; diagonal mapped to 0."""
    rho = np.asarray(rho, dtype=np.float64)
    idx = np.arange(rho.shape[-1])
    z = np.arctanh(np.where(np.abs(rho) < 1.0, rho, 0.0))
    z[..., idx, idx] = 0.0
    return z


def write_spectral_csv(tensor: SpectralTensor | np.ndarray, path: str | Path) -> None:
    """Dump a spectral tensor as rows ``j,k,p,q,value``.

    j, p, q are 1-based (scale and channel numbering), k is the 0-based
    location inside the window.  Values use shortest round-trip decimals.
    """
    values = tensor.values if isinstance(tensor, SpectralTensor) else np.asarray(tensor)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "k", "p", "q", "value"])
        levels, window, channels, _ = values.shape
        for j in range(levels):
            for k in range(window):
                for p in range(channels):
                    for q in range(channels):
                        writer.writerow(
                            [j + 1, k, p + 1, q + 1, repr(float(values[j, k, p, q]))]
                        )


def read_spectral_csv(path: str | Path) -> SpectralTensor:
    """Inverse of :func:`write_spectral_csv`."""
    path = Path(path)
    entries: dict[tuple[int, int, int, int], float] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["j", "k", "p", "q", "value"]:
            raise ParseError(f"{path}: expected header j,k,p,q,value, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            try:
                j, k, p, q = (int(c) for c in row[:4])
                value = float(row[4])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed row {row!r}") from None
            entries[(j, k, p, q)] = value
    if not entries:
        raise ParseError(f"{path}: no data rows")
    js = {j for j, _, _, _ in entries}
    ks = {k for _, k, _, _ in entries}
    ps = {p for _, _, p, _ in entries}
    levels, window, channels = max(js), max(ks) + 1, max(ps)
    values = np.full((levels, window, channels, channels), np.nan)
    for (j, k, p, q), value in entries.items():
        values[j - 1, k, p - 1, q - 1] = value
    if np.any(np.isnan(values)):
        raise ParseError(f"{path}: incomplete tensor (missing j,k,p,q combinations)")
    return SpectralTensor(values)
