"""Command-line front end: simulate / train / classify / evaluate / bench.

Every command reads an optional JSON config file (``--config``) whose keys
mirror the long flag names; explicit flags win over config values.  The
effective configuration is echoed into each artifact: CSV outputs get a
``<out>.meta.json`` sidecar, JSON reports embed it under ``"config"``.

Exit codes: 0 success, 2 usage, 3 malformed data or invalid configuration,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import (
    ClassifierConfig,
    classify_online,
    load_model,
    save_model,
    train,
    write_probability_csv,
)
from .data import LabelledSeries, detrend_first_difference, read_csv, write_csv
from .errors import CohstreamError, ConditioningError, ParseError, ValidationError
from .evalkit import bench_scaling, run_study
from .simgen import PRESETS, generate, make_rng, make_training_set, scenario
from .wavelet import _check_window

_CONFIG_KEYS = {
    "window",
    "proportion",
    "bandwidth",
    "max_scale",
    "eps_power",
    "eps_rho",
    "priors",
    "reps",
    "lengths",
    "jobs",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohstream",
        description="Online classification of multivariate time series via "
        "sliding-window wavelet coherence.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, seed_required):
        p.add_argument("--config", type=Path, help="JSON file with default option values")
        p.add_argument("--seed", type=int, required=seed_required, help="master RNG seed")
        p.add_argument("-w", "--window", type=int, help="sliding window length (power of two)")
        p.add_argument("--proportion", type=float, help="fraction of indices kept")
        p.add_argument("--bandwidth", type=int, help="smoother half-width M")
        p.add_argument("--max-scale", type=int, dest="max_scale", help="coarsest scale used")

    p_sim = sub.add_parser("simulate", help="generate labelled test or training data")
    add_common(p_sim, seed_required=True)
    p_sim.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p_sim.add_argument("--scenario", type=int, choices=(1, 2, 3))
    p_sim.add_argument("--training", action="store_true", help="emit the 10-signal training set")
    p_sim.add_argument("--out", type=Path, required=True, help="output CSV (training mode: stem)")

    p_train = sub.add_parser("train", help="fit a class model from labelled CSVs")
    add_common(p_train, seed_required=False)
    p_train.add_argument("data", type=Path, nargs="+", help="labelled training CSVs")
    p_train.add_argument("--out", type=Path, required=True, help="output model JSON")

    p_cls = sub.add_parser("classify", help="classify a stream with a trained model")
    add_common(p_cls, seed_required=False)
    p_cls.add_argument("model", type=Path, help="model JSON from `train`")
    p_cls.add_argument("data", type=Path, help="test CSV (label column ignored if present)")
    p_cls.add_argument("--detrend", action="store_true", help="first-difference before classifying")
    p_cls.add_argument("--out", type=Path, required=True, help="output probability CSV")

    p_eval = sub.add_parser("evaluate", help="replicate the simulation study")
    add_common(p_eval, seed_required=True)
    p_eval.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p_eval.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3))
    p_eval.add_argument("--reps", type=int, help="number of replications (default 100)")
    p_eval.add_argument("--jobs", type=int, help="parallel workers (default 1)")
    p_eval.add_argument("--out", type=Path, help="report JSON path")

    p_bench = sub.add_parser("bench", help="time classify_online across stream lengths")
    add_common(p_bench, seed_required=True)
    p_bench.add_argument("--preset", default="mvn3", choices=sorted(PRESETS))
    p_bench.add_argument("--lengths", type=str, help="comma-separated lengths (default 1024,2048,4096,8192)")
    p_bench.add_argument("--reps", type=int, help="repetitions per length (default 25)")
    p_bench.add_argument("--out", type=Path, help="report JSON path")

    return parser


def _load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _opt(args, cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cfg.get(key, default)


def _classifier_config(args, cfg: dict) -> ClassifierConfig:
    window = int(_opt(args, cfg, "window", 256))
    _check_window(window)
    if window < 8:
        raise ValidationError(f"window must be a power of two >= 8, got {window}")
    priors = _opt(args, cfg, "priors")
    return ClassifierConfig(
        window=window,
        max_scale=_opt(args, cfg, "max_scale"),
        proportion=float(_opt(args, cfg, "proportion", 0.1)),
        bandwidth=_opt(args, cfg, "bandwidth"),
        eps_power=float(_opt(args, cfg, "eps_power", 1e-10)),
        eps_rho=float(_opt(args, cfg, "eps_rho", 1e-6)),
        priors=tuple(priors) if priors is not None else None,
    )


def _config_echo(config: ClassifierConfig, **extra) -> dict:
    doc = {
        "window": config.window,
        "max_scale": config.scale_cap,
        "proportion": config.proportion,
        "bandwidth": config.smoother.bandwidth,
        "eps_power": config.smoother.eps_power,
        "eps_rho": config.smoother.eps_rho,
        "filter": config.filter_name,
        "version": __version__,
    }
    doc.update(extra)
    return doc


def _write_meta(out: Path, doc: dict) -> None:
    Path(str(out) + ".meta.json").write_text(json.dumps(doc, indent=2) + "\n")


def cmd_simulate(args) -> int:
    cfg = _load_config_file(args.config)
    config = _classifier_config(args, cfg)
    rng = make_rng(args.seed)
    out: Path = args.out
    if args.training:
        signals = make_training_set(args.preset, config.window, rng)
        paths = []
        for i, sig in enumerate(signals, start=1):
            path = out.with_name(f"{out.stem}_{i:02d}{out.suffix or '.csv'}")
            write_csv(sig, path)
            paths.append(str(path))
        _write_meta(
            out,
            _config_echo(
                config,
                command="simulate",
                preset=args.preset,
                training=True,
                seed=args.seed,
                outputs=paths,
            ),
        )
        print(f"wrote {len(paths)} training signals of length {config.window}")
    else:
        if args.scenario is None:
            raise ValidationError("simulate needs --scenario (or --training)")
        series = generate(args.preset, scenario(args.scenario), rng)
        write_csv(series, out)
        _write_meta(
            out,
            _config_echo(
                config,
                command="simulate",
                preset=args.preset,
                scenario=args.scenario,
                seed=args.seed,
                outputs=[str(out)],
            ),
        )
        print(f"wrote {out} (T={series.series.length}, P={series.series.channels})")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config_file(args.config)
    config = _classifier_config(args, cfg)
    signals = []
    for path in args.data:
        loaded = read_csv(path, has_labels=True)
        signals.append(loaded)
    model = train(signals, config)
    save_model(model, args.out)
    _write_meta(
        args.out,
        _config_echo(
            config,
            command="train",
            inputs=[str(p) for p in args.data],
            outputs=[str(args.out)],
        ),
    )
    print(f"selected indices (scale, p, q): {list(model.index_set)}")
    counts = {c: 0 for c in range(1, model.n_classes + 1)}
    for sig in signals:
        for c in counts:
            counts[c] += int(np.count_nonzero(sig.labels == c))
    for c, count in counts.items():
        print(f"class {c}: {count} training samples")
    print(f"wrote {args.out}")
    return 0


def cmd_classify(args) -> int:
    cfg = _load_config_file(args.config)
    model = load_model(args.model)
    loaded = read_csv(args.data)
    series = loaded.series if isinstance(loaded, LabelledSeries) else loaded
    if args.detrend:
        series = detrend_first_difference(series)
    result = classify_online(series, model)
    write_probability_csv(result, args.out)
    _write_meta(
        args.out,
        {
            "command": "classify",
            "model": str(args.model),
            "input": str(args.data),
            "detrend": bool(args.detrend),
            "window": model.window_length,
            "outputs": [str(args.out)],
            "version": __version__,
        },
    )
    print(f"wrote {args.out} (T={result.length}, classes={result.n_classes})")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config_file(args.config)
    config = _classifier_config(args, cfg)
    reps = int(_opt(args, cfg, "reps", 100))
    jobs = int(_opt(args, cfg, "jobs", 1))
    report = run_study(args.preset, args.scenario, reps, config, args.seed, n_jobs=jobs)
    echo = _config_echo(
        config,
        command="evaluate",
        preset=args.preset,
        scenario=args.scenario,
        seed=args.seed,
        reps=reps,
    )
    if args.out:
        Path(args.out).write_text(report.to_json(echo) + "\n")
    print(report.render_table(f"{args.preset} scenario {args.scenario}, {reps} replications"))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config_file(args.config)
    config = _classifier_config(args, cfg)
    reps = int(_opt(args, cfg, "reps", 25))
    lengths_raw = _opt(args, cfg, "lengths", "1024,2048,4096,8192")
    if isinstance(lengths_raw, str):
        try:
            lengths = tuple(int(part) for part in lengths_raw.split(",") if part.strip())
        except ValueError:
            raise ValidationError(f"--lengths must be comma-separated integers, got {lengths_raw!r}") from None
    else:
        lengths = tuple(int(v) for v in lengths_raw)
    report = bench_scaling(lengths, reps, config, args.seed, preset=args.preset)
    echo = _config_echo(
        config,
        command="bench",
        preset=args.preset,
        seed=args.seed,
        reps=reps,
        lengths=list(lengths),
    )
    if args.out:
        Path(args.out).write_text(report.to_json(echo) + "\n")
    print(report.render_table())
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConditioningError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CohstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
