"""Online Bayesian classification of coherence features.

Training estimates, per class, a Gaussian model of the Fisher-transformed
coherence at a small set of discriminative (scale, channel-pair) indices.
The indices are ranked by the discrepancy score

    Delta_j^(p,q) = sum over unordered class pairs (c,g) of
                    |mean_c - mean_g| / sqrt(var_c + var_g)

pooled over every labelled time point of every training signal, and the top
ceil(proportion * N) are kept.

Classification slides a window over the stream, maintains the wavelet
pyramid incrementally, re-estimates the transformed coherence at the chosen
indices for every location in the window, evaluates the per-class Gaussian
posterior at each location, and averages the posteriors that each global
time point receives from the windows covering it.  Points near the stream
edges are covered by fewer than w windows and are divided by their actual
cover count so probability vectors stay normalised everywhere.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .data import LabelledSeries, MultivariateSeries
from .errors import MissingClassError, ParseError, ValidationError
from .online import DEFAULT_REBUILD_EVERY, SlidingTransformState
from .spectra import (
    SmootherConfig,
    _periodic_boxcar,
    coherence,
    correct_and_smooth,
    default_bandwidth,
    default_max_scale,
    fisher_z,
    raw_periodogram,
)
from .wavelet import (
    WaveletFilter,
    _check_window,
    inner_product_matrix,
    invert_inner_product,
    ndwt,
)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassifierConfig:
    """Everything the training stage needs to know.

    ``max_scale`` caps the scales entering classification (default: two
    below the full pyramid depth); ``bandwidth`` defaults to
    floor(w**0.7 / 2).  ``priors`` default to uniform over the classes
    found in training.
    """

    window: int
    max_scale: int | None = None
    proportion: float = 0.1
    bandwidth: int | None = None
    eps_power: float = 1e-10
    eps_rho: float = 1e-6
    filter_name: str = "haar"
    ridge_scale: float = 1e-6
    cond_limit: float = 1e8
    priors: tuple[float, ...] | None = None

    def __post_init__(self):
        levels = _check_window(self.window)
        if self.max_scale is not None and not (1 <= self.max_scale <= levels):
            raise ValidationError(
                f"max_scale must lie in 1..log2(w)={levels}, got {self.max_scale}"
            )
        if not (0 < self.proportion <= 1):
            raise ValidationError(f"proportion must lie in (0, 1], got {self.proportion}")
        if self.priors is not None:
            pr = np.asarray(self.priors, dtype=np.float64)
            if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-9:
                raise ValidationError("priors must be nonnegative and sum to 1")
        # constructing the smoother validates bandwidth and the epsilons
        _ = self.smoother

    @property
    def levels(self) -> int:
        return _check_window(self.window)

    @property
    def scale_cap(self) -> int:
        return self.max_scale if self.max_scale is not None else default_max_scale(self.levels)

    @property
    def smoother(self) -> SmootherConfig:
        m = self.bandwidth if self.bandwidth is not None else default_bandwidth(self.window)
        return SmootherConfig(m, self.eps_power, self.eps_rho)


@dataclass(frozen=True)
class IndexSet:
    """The retained (scale, channel pair) indices, 1-based, p < q."""

    entries: tuple[tuple[int, int, int], ...]
    proportion: float

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("index set must be nonempty")
        clean = []
        seen = set()
        for j, p, q in self.entries:
            j, p, q = int(j), int(p), int(q)
            if j < 1:
                raise ValidationError(f"scale must be >= 1, got {j}")
            if not (1 <= p < q):
                raise ValidationError(f"channel pair must satisfy 1 <= p < q, got ({p}, {q})")
            if (j, p, q) in seen:
                raise ValidationError(f"duplicate index (j={j}, p={p}, q={q})")
            seen.add((j, p, q))
            clean.append((j, p, q))
        object.__setattr__(self, "entries", tuple(clean))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def transformed_coherence(
    values: np.ndarray, config: ClassifierConfig, a_inv: np.ndarray | None = None
) -> np.ndarray:
    """Fisher-z coherence tensor (scale_cap, w, P, P) of one window."""
    values = np.asarray(values, dtype=np.float64)
    filt = WaveletFilter.from_name(config.filter_name)
    if a_inv is None:
        a_inv = invert_inner_product(inner_product_matrix(filt, config.levels))
    pyr = ndwt(values, config.levels, filt)
    i_raw = raw_periodogram(pyr.detail)
    s = correct_and_smooth(i_raw, a_inv[: config.scale_cap], config.smoother.bandwidth)
    rho = coherence(s, config.smoother).values
    return fisher_z(rho)


def _training_samples(
    train: list[LabelledSeries], config: ClassifierConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Pool Fisher-z tensors over every labelled window position.

    Signals longer than one window are cut into non-overlapping windows
    (any remainder shorter than w is dropped).  Returns (n, scale_cap, P, P)
    samples and their (n,) labels.
    """
    if not train:
        raise ValidationError("need at least one training signal")
    w = config.window
    channels = train[0].series.channels
    filt = WaveletFilter.from_name(config.filter_name)
    a_inv = invert_inner_product(inner_product_matrix(filt, config.levels))
    zs, labs = [], []
    for s, sig in enumerate(train):
        if sig.series.channels != channels:
            raise ValidationError(
                f"training signal {s} has {sig.series.channels} channels, expected {channels}"
            )
        if sig.series.length < w:
            raise ValidationError(
                f"training signal {s} is shorter than the window ({sig.series.length} < {w})"
            )
        for start in range(0, sig.series.length - w + 1, w):
            z = transformed_coherence(sig.series.values[:, start : start + w], config, a_inv)
            zs.append(np.moveaxis(z, 1, 0))
            labs.append(sig.labels[start : start + w])
    return np.concatenate(zs), np.concatenate(labs)


def _class_moments(z: np.ndarray, labels: np.ndarray):
    """Per-class sample mean and variance of pooled tensors."""
    n_classes = int(labels.max())
    for c in range(1, n_classes + 1):
        if not np.any(labels == c):
            raise MissingClassError(c)
    means, variances, counts = [], [], []
    for c in range(1, n_classes + 1):
        sel = z[labels == c]
        mu = sel.mean(axis=0)
        if sel.shape[0] > 1:
            var = ((sel - mu) ** 2).sum(axis=0) / (sel.shape[0] - 1)
        else:
            var = np.zeros_like(mu)
        means.append(mu)
        variances.append(var)
        counts.append(sel.shape[0])
    return np.stack(means), np.stack(variances), counts


def discrepancy(
    train: list[LabelledSeries], config: ClassifierConfig
) -> dict[tuple[int, int, int], float]:
    """Separation score of every candidate (scale, channel-pair) index."""
    z, labels = _training_samples(train, config)
    return _discrepancy_from_samples(z, labels)


def _discrepancy_from_samples(z: np.ndarray, labels: np.ndarray) -> dict:
    means, variances, _ = _class_moments(z, labels)
    n_classes = means.shape[0]
    total = np.zeros(means.shape[1:])
    degenerate = 0
    for c in range(n_classes):
        for g in range(c + 1, n_classes):
            num = np.abs(means[c] - means[g])
            den = np.sqrt(variances[c] + variances[g])
            with np.errstate(divide="ignore", invalid="ignore"):
                term = num / den
            zero_den = den == 0
            term[zero_den & (num == 0)] = 0.0
            term[zero_den & (num > 0)] = np.inf
            degenerate += int(np.count_nonzero(zero_den & (num > 0)))
            total += term
    if degenerate:
        warnings.warn(
            f"{degenerate} class-pair terms had zero pooled variance; "
            "treated as infinitely discriminative"
        )
    levels, channels = total.shape[0], total.shape[1]
    return {
        (j, p, q): float(total[j - 1, p - 1, q - 1])
        for j in range(1, levels + 1)
        for p in range(1, channels + 1)
        for q in range(p + 1, channels + 1)
    }


def select_indices(table: dict[tuple[int, int, int], float], proportion: float) -> IndexSet:
    """Keep the ceil(proportion * N) highest-scoring indices.

    Ties broken towards finer scales, then lexicographic channel pairs.
    """
    if not table:
        raise ValidationError("empty discrepancy table")
    if not (0 < proportion <= 1):
        raise ValidationError(f"proportion must lie in (0, 1], got {proportion}")
    keep = math.ceil(proportion * len(table))
    order = sorted(table.items(), key=lambda item: (-item[1], item[0]))
    return IndexSet(tuple(key for key, _ in order[:keep]), proportion)


@dataclass(frozen=True)
class ClassModel:
    """Per-class Gaussians over the selected coherence features."""

    n_classes: int
    index_set: IndexSet
    means: np.ndarray  # (N_c, m)
    covariances: np.ndarray  # (N_c, m, m), positive definite
    priors: np.ndarray  # (N_c,)
    window_length: int
    levels: int
    smoother: SmootherConfig
    filter_name: str
    regularization: tuple[float, ...]
    precisions: np.ndarray = field(init=False, repr=False)
    log_dets: np.ndarray = field(init=False, repr=False)
    log_priors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = len(self.index_set)
        means = np.asarray(self.means, dtype=np.float64)
        covs = np.asarray(self.covariances, dtype=np.float64)
        priors = np.asarray(self.priors, dtype=np.float64)
        if means.shape != (self.n_classes, m) or covs.shape != (self.n_classes, m, m):
            raise ValidationError(
                f"means/covariances shapes {means.shape}/{covs.shape} do not match "
                f"{self.n_classes} classes with {m} features"
            )
        if priors.shape != (self.n_classes,) or np.any(priors < 0) or abs(priors.sum() - 1) > 1e-9:
            raise ValidationError("priors must be nonnegative and sum to 1")
        levels = _check_window(self.window_length)
        if self.levels != levels:
            raise ValidationError(f"levels must equal log2(w)={levels}, got {self.levels}")
        if any(j > levels for j, _, _ in self.index_set):
            raise ValidationError("index set references a scale beyond the pyramid depth")
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            raise ValidationError("covariance matrices must be positive definite") from None
        precisions = np.linalg.inv(covs)
        log_dets = 2.0 * np.log(np.einsum("cii->ci", chol)).sum(axis=1)
        with np.errstate(divide="ignore"):
            log_priors = np.log(priors)
        for name, value in (
            ("means", means),
            ("covariances", covs),
            ("priors", priors),
            ("precisions", precisions),
            ("log_dets", log_dets),
            ("log_priors", log_priors),
        ):
            value = np.ascontiguousarray(value)
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_features(self) -> int:
        return len(self.index_set)


def train(train_signals: list[LabelledSeries], config: ClassifierConfig) -> ClassModel:
    """Fit the per-class Gaussians at the most discriminative indices."""
    z, labels = _training_samples(train_signals, config)
    table = _discrepancy_from_samples(z, labels)
    index_set = select_indices(table, config.proportion)
    js = np.array([j for j, _, _ in index_set]) - 1
    ps = np.array([p for _, p, _ in index_set]) - 1
    qs = np.array([q for _, _, q in index_set]) - 1
    feats = z[:, js, ps, qs]  # (n, m)
    n_classes = int(labels.max())
    m = len(index_set)
    means, covs, lams = [], [], []
    for c in range(1, n_classes + 1):
        xc = feats[labels == c]
        mu = xc.mean(axis=0)
        if xc.shape[0] > 1:
            centred = xc - mu
            cov = centred.T @ centred / (xc.shape[0] - 1)
        else:
            cov = np.zeros((m, m))
        if xc.shape[0] < m + 1:
            warnings.warn(
                f"class {c}: {xc.shape[0]} samples for {m} features; "
                "covariance singular before regularization"
            )
        lam = config.ridge_scale * (np.trace(cov) / m if np.trace(cov) > 0 else 1.0)
        reg = cov + lam * np.eye(m)
        while np.linalg.cond(reg) > config.cond_limit:
            lam *= 10.0
            reg = cov + lam * np.eye(m)
        means.append(mu)
        covs.append(reg)
        lams.append(float(lam))
    if config.priors is not None:
        if len(config.priors) != n_classes:
            raise ValidationError(
                f"{len(config.priors)} priors given for {n_classes} classes"
            )
        priors = np.asarray(config.priors, dtype=np.float64)
    else:
        priors = np.full(n_classes, 1.0 / n_classes)
    return ClassModel(
        n_classes=n_classes,
        index_set=index_set,
        means=np.stack(means),
        covariances=np.stack(covs),
        priors=priors,
        window_length=config.window,
        levels=config.levels,
        smoother=config.smoother,
        filter_name=config.filter_name,
        regularization=tuple(lams),
    )


def _log_scores(model: ClassModel, feats: np.ndarray) -> np.ndarray:
    """Unnormalised log posterior scores; feats (m, K) -> (N_c, K)."""
    diffs = feats[None, :, :] - model.means[:, :, None]
    tmp = np.einsum("cmn,cnk->cmk", model.precisions, diffs)
    maha = np.einsum("cmk,cmk->ck", tmp, diffs)
    return model.log_priors[:, None] - 0.5 * model.log_dets[:, None] - 0.5 * maha


def _normalize_posterior(logp: np.ndarray) -> tuple[np.ndarray, int]:
    """Softmax over classes; columns with no finite score fall back to
    uniform (count returned)."""
    lse = logsumexp(logp, axis=0)
    with np.errstate(invalid="ignore"):
        post = np.exp(logp - lse)
    bad = ~np.isfinite(lse)
    n_bad = int(np.count_nonzero(bad))
    if n_bad:
        post[:, bad] = 1.0 / logp.shape[0]
    return post, n_bad


def window_posterior(zeta_hat: np.ndarray, model: ClassModel) -> np.ndarray:
    """Class probabilities for one feature vector."""
    z = np.asarray(zeta_hat, dtype=np.float64)
    if z.shape != (model.n_features,):
        raise ValidationError(f"expected {model.n_features} features, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValidationError("feature vector contains non-finite values")
    post, n_bad = _normalize_posterior(_log_scores(model, z[:, None]))
    if n_bad:
        warnings.warn("all class scores vanished; returning a uniform posterior")
    return post[:, 0]


@dataclass(frozen=True)
class ProbabilitySeries:
    """Per-time-point class probabilities and their argmax labels."""

    probabilities: np.ndarray  # (T, N_c)
    labels: np.ndarray  # (T,), 1-based
    uniform_fallbacks: int = 0

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        labs = np.asarray(self.labels)
        if probs.ndim != 2 or labs.shape != (probs.shape[0],):
            raise ValidationError(
                f"probabilities must be (T, N_c) with matching labels, got "
                f"{probs.shape} and {labs.shape}"
            )
        if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("probability rows must be nonnegative and sum to 1")
        probs = np.ascontiguousarray(probs)
        probs.setflags(write=False)
        labs = np.ascontiguousarray(labs.astype(np.int64))
        labs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "labels", labs)

    @property
    def length(self) -> int:
        return self.probabilities.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probabilities.shape[1]


def classify_online(
    x: MultivariateSeries | np.ndarray,
    model: ClassModel,
    mode: str = "incremental",
    rebuild_every: int | None = DEFAULT_REBUILD_EVERY,
) -> ProbabilitySeries:
    """Slide a window over the stream and average per-window posteriors.

    ``mode="incremental"`` maintains the pyramid with constant-size slide
    updates; ``mode="recompute"`` runs the full transform on every window
    (the reference path the incremental one must reproduce).
    """
    values = x.values if isinstance(x, MultivariateSeries) else np.asarray(x, dtype=np.float64)
    if values.ndim != 2:
        raise ValidationError(f"series must be (P, T), got shape {values.shape}")
    channels, length = values.shape
    w = model.window_length
    if length < w:
        raise ValidationError(f"stream length {length} is shorter than the window {w}")
    needed = max(q for _, _, q in model.index_set)
    if channels < needed:
        raise ValidationError(
            f"model indexes channel {needed} but the stream has only {channels}"
        )
    if mode not in ("incremental", "recompute"):
        raise ValidationError(f"mode must be 'incremental' or 'recompute', got {mode!r}")

    filt = WaveletFilter.from_name(model.filter_name)
    levels = model.levels
    a_inv = invert_inner_product(inner_product_matrix(filt, levels))
    js = np.array([j for j, _, _ in model.index_set])
    ps = np.array([p for _, p, _ in model.index_set]) - 1
    qs = np.array([q for _, _, q in model.index_set]) - 1
    scales = np.unique(js)
    rows = a_inv[scales - 1]  # (n_scales, J)
    srow = np.searchsorted(scales, js)
    bandwidth = model.smoother.bandwidth
    eps_power = model.smoother.eps_power
    limit = 1.0 - model.smoother.eps_rho

    state = SlidingTransformState(values[:, :w], levels, filt, rebuild_every=rebuild_every)
    n_windows = length - w + 1
    prob_sum = np.zeros((model.n_classes, length))
    base = np.arange(w)
    fallbacks = 0
    for i in range(n_windows):
        if i:
            state.slide(values[:, i + w - 1])
            if mode == "recompute":
                state.rebuild()
        detail = state.detail
        i_raw = np.einsum("jpk,jqk->jkpq", detail, detail)
        s = _periodic_boxcar(np.tensordot(rows, i_raw, axes=(1, 0)), bandwidth, axis=1)
        num = s[srow, :, ps, qs]
        dpp = np.maximum(s[srow, :, ps, ps], eps_power)
        dqq = np.maximum(s[srow, :, qs, qs], eps_power)
        feats = np.arctanh(np.clip(num / np.sqrt(dpp * dqq), -limit, limit))
        post, n_bad = _normalize_posterior(_log_scores(model, feats))
        fallbacks += n_bad
        t_map = i + ((base - state.offset) & (w - 1))
        prob_sum[:, t_map] += post
    t = np.arange(length)
    cover = np.minimum(t, length - w) - np.maximum(t - w + 1, 0) + 1
    probs = (prob_sum / cover).T
    labels = np.argmax(probs, axis=1) + 1
    return ProbabilitySeries(probs, labels, fallbacks)


def count_class_changes(labels: np.ndarray, min_duration: int = 4) -> int:
    """Number of class switches whose new run outlasts ``min_duration``.

    Runs of ``min_duration`` or fewer points are treated as blips: they
    neither count nor reset the accepted class.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValidationError("labels must be a nonempty 1-D sequence")
    boundaries = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [labels.size]])
    accepted = labels[0]
    changes = 0
    for start, end in zip(starts[1:], ends[1:]):
        value = labels[start]
        if value != accepted and end - start > min_duration:
            changes += 1
            accepted = value
    return changes


def model_to_dict(model: ClassModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "w": model.window_length,
        "J": model.levels,
        "n_classes": model.n_classes,
        "index_set": [{"j": j, "p": p, "q": q} for j, p, q in model.index_set],
        "proportion": model.index_set.proportion,
        "priors": [float(v) for v in model.priors],
        "classes": [
            {
                "mean": [float(v) for v in model.means[c]],
                "covariance": [[float(v) for v in row] for row in model.covariances[c]],
            }
            for c in range(model.n_classes)
        ],
        "smoother": {
            "M": model.smoother.bandwidth,
            "eps_power": model.smoother.eps_power,
            "eps_rho": model.smoother.eps_rho,
        },
        "filter": model.filter_name,
        "regularization": list(model.regularization),
    }


def model_from_dict(doc: dict) -> ClassModel:
    try:
        version = doc["version"]
        if version != MODEL_FORMAT_VERSION:
            raise ValidationError(f"unsupported model version {version}")
        index_set = IndexSet(
            tuple((e["j"], e["p"], e["q"]) for e in doc["index_set"]),
            float(doc["proportion"]),
        )
        smoother = SmootherConfig(
            int(doc["smoother"]["M"]),
            float(doc["smoother"]["eps_power"]),
            float(doc["smoother"]["eps_rho"]),
        )
        return ClassModel(
            n_classes=int(doc["n_classes"]),
            index_set=index_set,
            means=np.array([c["mean"] for c in doc["classes"]], dtype=np.float64),
            covariances=np.array([c["covariance"] for c in doc["classes"]], dtype=np.float64),
            priors=np.asarray(doc["priors"], dtype=np.float64),
            window_length=int(doc["w"]),
            levels=int(doc["J"]),
            smoother=smoother,
            filter_name=str(doc["filter"]),
            regularization=tuple(float(v) for v in doc["regularization"]),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed model document: {exc!r}") from None


def save_model(model: ClassModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: str | Path) -> ClassModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


def write_probability_csv(series: ProbabilitySeries, path: str | Path) -> None:
    """Rows ``t, p_1..p_Nc, label`` with t the 0-based time index."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"p_{c}" for c in range(1, series.n_classes + 1)] + ["label"])
        for t in range(series.length):
            writer.writerow(
                [t]
                + [repr(float(v)) for v in series.probabilities[t]]
                + [int(series.labels[t])]
            )


def read_probability_csv(path: str | Path) -> ProbabilitySeries:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t" or header[-1] != "label":
            raise ParseError(f"{path}: expected header t,p_1..p_Nc,label, got {header}")
        n_classes = len(header) - 2
        if n_classes < 1 or header[1 : 1 + n_classes] != [
            f"p_{c}" for c in range(1, n_classes + 1)
        ]:
            raise ParseError(f"{path}: malformed probability header {header}")
        probs, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} columns")
            try:
                probs.append([float(v) for v in row[1 : 1 + n_classes]])
                labels.append(int(row[-1]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed row {row!r}") from None
    if not probs:
        raise ParseError(f"{path}: no data rows")
    return ProbabilitySeries(np.asarray(probs), np.asarray(labels))
