#!/usr/bin/env python3
"""Instance-generalization (unseen needles N2-N5) and viewpoint-robustness
protocols for a trained checkpoint."""

import argparse

from surgibench.evalharness import (
    emit_report,
    run_instance_generalization,
    run_viewpoint_robustness,
)
from surgibench.policies.training import load_policy
from surgibench.sim.tasks import get_task_spec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--task", default="needle_lift")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--out", default="generalization")
    args = ap.parse_args()

    policy = load_policy(args.checkpoint)
    spec = get_task_spec(args.task)

    table = run_instance_generalization(policy, spec, trials=args.trials)
    results = list(table["rows"].values())
    for name, res in table["rows"].items():
        print(f"{name}: {res.success_rate:.2f}")
    print(f"average (N2-N5): {table['average_unseen']:.2f}")

    for mode in ("train", "view1", "view2"):
        res = run_viewpoint_robustness(policy, spec, mode, trials=20)
        results.append(res)
        print(f"viewpoint {mode}: {res.success_rate:.2f}")

    files = emit_report(results, args.out)
    print(f"report: {files['markdown']}")


if __name__ == "__main__":
    main()
