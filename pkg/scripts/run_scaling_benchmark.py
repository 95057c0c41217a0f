#!/usr/bin/env python3
"""Time classify_online across stream lengths to check near-constant
per-point cost.

Trains one model up front (training excluded from all timings), then times
classification of fresh streams at each length.

Usage:
    python3 scripts/run_scaling_benchmark.py [--lengths 1024,2048,4096,8192]
        [--reps 25] [--window 256] [--out bench.json]
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cohstream.classifier import ClassifierConfig
from cohstream.evalkit import bench_scaling


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lengths", default="1024,2048,4096,8192",
                        help="comma-separated stream lengths")
    parser.add_argument("--reps", type=int, default=25, help="repetitions per length")
    parser.add_argument("--window", type=int, default=256, help="sliding window length")
    parser.add_argument("--preset", default="mvn3", help="generator preset")
    parser.add_argument("--seed", type=int, default=404, help="master RNG seed")
    parser.add_argument("--out", type=Path, help="JSON report path")
    args = parser.parse_args()

    lengths = tuple(int(part) for part in args.lengths.split(",") if part.strip())
    config = ClassifierConfig(window=args.window)
    report = bench_scaling(lengths, args.reps, config, args.seed, preset=args.preset)
    print(report.render_table())
    base = report.rows[0]["per_point_seconds"]
    for row in report.rows[1:]:
        ratio = row["per_point_seconds"] / base
        print(f"per-point ratio {row['length']}/{report.rows[0]['length']}: {ratio:.3f}")
    if args.out:
        echo = {
            "preset": args.preset,
            "window": args.window,
            "lengths": list(lengths),
            "reps": args.reps,
            "seed": args.seed,
        }
        args.out.write_text(report.to_json(echo) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
