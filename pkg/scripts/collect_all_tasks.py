#!/usr/bin/env python3
"""Collect 50 scripted expert demonstrations for every task."""

import argparse
from pathlib import Path

from surgibench.experts import collect
from surgibench.sim.tasks import get_task_spec
from surgibench.sim.types import TASK_NAMES


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data", help="output root directory")
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=0.0)
    args = ap.parse_args()

    for task in TASK_NAMES:
        out = Path(args.out) / f"{task}_{args.count}"
        spec = get_task_spec(task)
        ds = collect(spec, args.count, seed=args.seed, noise_scale=args.noise,
                     out=str(out))
        report = ds.validate()
        print(f"{task}: {len(ds)} episodes at {out} "
              f"(valid={report['valid']}, max_deviation={report['max_deviation']})")


if __name__ == "__main__":
    main()
