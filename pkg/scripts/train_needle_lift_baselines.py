#!/usr/bin/env python3
"""Train the ACT single-camera and point-cloud diffusion baselines on
needle_lift demonstrations, then evaluate each over 20 trials."""

import argparse
from pathlib import Path

from surgibench.datasets.store import DemonstrationSet
from surgibench.evalharness import emit_report, run_success_eval
from surgibench.policies.training import load_policy, train_act, train_diffusion


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="demonstration set directory")
    ap.add_argument("--out", default="checkpoints")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--act-epochs", type=int, default=80)
    ap.add_argument("--dp3-epochs", type=int, default=250)
    args = ap.parse_args()

    ds = DemonstrationSet.open(args.data)
    out = Path(args.out)
    results = []

    ckpt = train_act(ds, "single_camera", out / "act_s", epochs=args.act_epochs)
    policy = load_policy(ckpt)
    results.append(run_success_eval(policy, ds.task_spec(), args.trials,
                                    rig=ds.rig(), model="ACT-S"))
    print(f"ACT-S: {results[-1].success_rate:.2f}")

    ckpt = train_diffusion(ds, out / "dp3", epochs=args.dp3_epochs)
    policy = load_policy(ckpt)
    results.append(run_success_eval(policy, ds.task_spec(), args.trials,
                                    rig=ds.rig(), model="DP3"))
    print(f"DP3: {results[-1].success_rate:.2f}")

    files = emit_report(results, out / "report")
    print(f"report: {files['markdown']}")


if __name__ == "__main__":
    main()
