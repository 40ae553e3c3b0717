#!/usr/bin/env python3
"""Sample-efficiency sweep: train on nested {10,20,30,40,50}-demo subsets and
plot success rate vs demonstration count."""

import argparse
from pathlib import Path

from surgibench.datasets.store import DemonstrationSet
from surgibench.evalharness import emit_report, run_sample_efficiency
from surgibench.policies.training import train_act


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True)
    ap.add_argument("--out", default="sample_eff")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=80)
    ap.add_argument("--space", default="single_camera")
    args = ap.parse_args()

    ds = DemonstrationSet.open(args.data)
    results = run_sample_efficiency(
        ds,
        lambda subset, out: train_act(subset, args.space, out, epochs=args.epochs),
        ds.task_spec(), Path(args.out) / "checkpoints",
        trials=args.trials, model="ACT-S",
    )
    files = emit_report(results, args.out)
    for r in results:
        print(f"n={r.detail.get('n_demos')}: {r.success_rate:.2f}")
    print(f"report: {files['markdown']}")


if __name__ == "__main__":
    main()
