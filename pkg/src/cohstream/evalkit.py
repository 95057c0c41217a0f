"""Scoring, replication studies, and the runtime-scaling benchmark.

Classifier output is scored against ground truth with three measures: the
number of detected class changes (shared persistence rule from the
classifier module), the V-measure of the induced segmentation, and the
true positive rate (fraction of correctly labelled points).  ``run_study``
repeats simulate/train/classify over fresh replications and aggregates
mean/sd per measure; ``bench_scaling`` times classification alone across
stream lengths.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierConfig, classify_online, count_class_changes, train
from .errors import ValidationError
from .simgen import Scenario, generate, get_preset, make_rng, make_training_set, scenario

MEASURES = ("changes_detected", "v_measure", "true_positive_rate")


def _as_labels(x) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError(f"labels must be a nonempty 1-D sequence, got shape {a.shape}")
    return a


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def v_measure(truth, predicted) -> float:
    """Harmonic mean of homogeneity and completeness (natural-log entropy).

    h = 1 when the truth has a single class, c = 1 when the prediction
    does; V = 0 when h + c = 0.
    """
    t = _as_labels(truth)
    p = _as_labels(predicted)
    if t.shape != p.shape:
        raise ValidationError(f"label lengths differ: {t.shape} vs {p.shape}")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    joint = np.zeros((ti.max() + 1, pi.max() + 1))
    np.add.at(joint, (ti, pi), 1.0)
    n = joint.sum()
    h_truth = _entropy(joint.sum(axis=1))
    h_pred = _entropy(joint.sum(axis=0))
    mask = joint > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_t = -(joint / n * np.log(joint / joint.sum(axis=0, keepdims=True)))[mask].sum()
        cond_p = -(joint / n * np.log(joint / joint.sum(axis=1, keepdims=True)))[mask].sum()
    h = 1.0 if h_truth == 0 else 1.0 - cond_t / h_truth
    c = 1.0 if h_pred == 0 else 1.0 - cond_p / h_pred
    if h + c == 0:
        return 0.0
    return float(2.0 * h * c / (h + c))


def true_positive_rate(truth, predicted) -> float:
    """Fraction of points whose predicted label matches the truth."""
    t = _as_labels(truth)
    p = _as_labels(predicted)
    if t.shape != p.shape:
        raise ValidationError(f"label lengths differ: {t.shape} vs {p.shape}")
    return float(np.mean(t == p))


@dataclass(frozen=True)
class EvaluationReport:
    """Aggregated measures over the successful replications."""

    n_replications: int
    values: dict[str, list[float]]  # per measure, one value per successful rep
    runtimes: list[float]  # seconds per successful rep
    failures: list[tuple[int, str]]  # (replication index, error)

    def mean(self, measure: str) -> float:
        return float(np.mean(self.values[measure]))

    def sd(self, measure: str) -> float | None:
        vals = self.values[measure]
        if len(vals) < 2:
            return None
        return float(np.std(vals, ddof=1))

    def to_dict(self) -> dict:
        out = {
            "n_replications": self.n_replications,
            "n_failures": len(self.failures),
            "measures": {},
            "runtime_seconds": {
                "mean": float(np.mean(self.runtimes)) if self.runtimes else None,
                "sd": float(np.std(self.runtimes, ddof=1)) if len(self.runtimes) > 1 else None,
            },
            "failures": [{"replication": i, "error": msg} for i, msg in self.failures],
        }
        for m in MEASURES:
            out["measures"][m] = {
                "mean": self.mean(m),
                "sd": self.sd(m),
                "values": list(self.values[m]),
            }
        return out

    def to_json(self, config: dict | None = None) -> str:
        doc = self.to_dict()
        if config is not None:
            doc["config"] = config
        return json.dumps(doc, indent=2)

    def render_table(self, title: str = "") -> str:
        lines = []
        if title:
            lines.append(title)
        lines.append(f"{'measure':<22}mean (sd)")
        for m in MEASURES:
            sd = self.sd(m)
            sd_text = f"{sd:.2f}" if sd is not None else "n/a"
            lines.append(f"{m:<22}{self.mean(m):.2f} ({sd_text})")
        if self.failures:
            lines.append(f"failed replications: {len(self.failures)}/{self.n_replications}")
        return "\n".join(lines)


def _replicate(preset_name: str, scn: Scenario, config: ClassifierConfig, seed_seq) -> dict:
    """One replication: fresh training set and test signal, train, classify,
    score.  Takes a SeedSequence so pool workers derive identical streams."""
    rng = np.random.Generator(np.random.Philox(seed_seq))
    started = time.perf_counter()
    training = make_training_set(preset_name, config.window, rng)
    test = generate(preset_name, scn, rng)
    model = train(training, config)
    result = classify_online(test.series, model)
    elapsed = time.perf_counter() - started
    return {
        "changes_detected": float(count_class_changes(result.labels)),
        "v_measure": v_measure(test.labels, result.labels),
        "true_positive_rate": true_positive_rate(test.labels, result.labels),
        "seconds": elapsed,
    }


def run_study(
    preset,
    scn: Scenario | int,
    n_replications: int,
    config: ClassifierConfig,
    seed: int,
    n_jobs: int = 1,
) -> EvaluationReport:
    """Repeat simulate/train/classify ``n_replications`` times.

    Per-replication seeds are spawned from the master seed, so reports are
    identical for any ``n_jobs``.  Failed replications are recorded and the
    study continues.
    """
    preset_name = preset if isinstance(preset, str) else preset.name
    get_preset(preset_name)
    if isinstance(scn, int):
        scn = scenario(scn)
    if n_replications < 1:
        raise ValidationError(f"need at least one replication, got {n_replications}")
    children = np.random.SeedSequence(seed).spawn(n_replications)
    results: list[dict | None] = [None] * n_replications
    failures: list[tuple[int, str]] = []
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = {
                i: pool.submit(_replicate, preset_name, scn, config, children[i])
                for i in range(n_replications)
            }
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - recorded, study continues
                    failures.append((i, repr(exc)))
    else:
        for i in range(n_replications):
            try:
                results[i] = _replicate(preset_name, scn, config, children[i])
            except Exception as exc:  # noqa: BLE001
                failures.append((i, repr(exc)))
    values = {m: [r[m] for r in results if r is not None] for m in MEASURES}
    runtimes = [r["seconds"] for r in results if r is not None]
    return EvaluationReport(n_replications, values, runtimes, sorted(failures))


@dataclass(frozen=True)
class BenchReport:
    """Wall-time of classify_online per stream length."""

    rows: list[dict]  # length, reps, mean_seconds, sd_seconds, per_point_seconds

    def to_dict(self) -> dict:
        return {"rows": self.rows}

    def to_json(self, config: dict | None = None) -> str:
        doc = self.to_dict()
        if config is not None:
            doc["config"] = config
        return json.dumps(doc, indent=2)

    def render_table(self) -> str:
        lines = [f"{'length':>8}  {'mean s':>10}  {'sd s':>10}  {'s/point':>12}"]
        for row in self.rows:
            sd = row["sd_seconds"]
            sd_text = f"{sd:10.4f}" if sd is not None else f"{'n/a':>10}"
            lines.append(
                f"{row['length']:>8}  {row['mean_seconds']:10.4f}  {sd_text}"
                f"  {row['per_point_seconds']:12.3e}"
            )
        return "\n".join(lines)


def _bench_scenario(length: int, segment: int = 300) -> Scenario:
    """Class switches every ``segment`` points, padded to exactly ``length``."""
    if length < 2 * segment:
        return Scenario(f"bench{length}", (length,))
    n_full = length // segment - 1
    rest = length - n_full * segment
    return Scenario(f"bench{length}", (segment,) * n_full + (rest,))


def bench_scaling(
    lengths: tuple[int, ...],
    n: int,
    config: ClassifierConfig,
    seed: int,
    preset: str = "mvn3",
) -> BenchReport:
    """Time classify_online on fresh test series of each length.

    One model is trained up front and reused; training is excluded from
    every timing.
    """
    if not lengths or any(t < config.window for t in lengths):
        raise ValidationError(f"every length must be >= the window {config.window}")
    if n < 1:
        raise ValidationError(f"need at least one repetition, got {n}")
    get_preset(preset)
    root = np.random.SeedSequence(seed)
    train_seq, data_seq = root.spawn(2)
    model = train(make_training_set(preset, config.window, make_rng_from(train_seq)), config)
    rng = make_rng_from(data_seq)
    rows = []
    for length in lengths:
        scn = _bench_scenario(length)
        times = []
        for _ in range(n):
            test = generate(preset, scn, rng)
            started = time.perf_counter()
            classify_online(test.series, model)
            times.append(time.perf_counter() - started)
        mean_s = float(np.mean(times))
        rows.append(
            {
                "length": int(length),
                "reps": n,
                "mean_seconds": mean_s,
                "sd_seconds": float(np.std(times, ddof=1)) if n > 1 else None,
                "per_point_seconds": mean_s / length,
            }
        )
    return BenchReport(rows)


def make_rng_from(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_seq))
