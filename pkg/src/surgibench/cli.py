"""Command-line entry points: collect, train, eval, teleop-server."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .sim.tasks import get_task_spec
from .sim.types import TASK_NAMES


def _add_collect(sub):
    p = sub.add_parser("collect", help="record scripted expert demonstrations")
    p.add_argument("--task", required=True, choices=TASK_NAMES)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--needle", default="N1")
    p.add_argument("--n-points", type=int, default=512)
    p.add_argument("--no-frames", action="store_true", help="skip camera rendering")
    p.add_argument("--out", required=True)


def _add_train(sub):
    p = sub.add_parser("train", help="train a policy on a demonstration set")
    p.add_argument("--task", choices=TASK_NAMES, help="checked against the dataset")
    p.add_argument("--space", default="single_camera",
                   choices=["single_camera", "multi_camera", "point_cloud"])
    p.add_argument("--model", required=True, choices=["act", "dp3"])
    p.add_argument("--demos", type=int, help="train on a nested subset of this size")
    p.add_argument("--subsample-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--data", required=True, help="demonstration set directory")
    p.add_argument("--out", required=True, help="checkpoint directory")


def _add_eval(sub):
    p = sub.add_parser("eval", help="run an evaluation protocol")
    p.add_argument("--checkpoint", help="policy checkpoint dir; omit for the scripted expert")
    p.add_argument("--task", required=True, choices=TASK_NAMES)
    p.add_argument("--protocol", default="table1",
                   choices=["table1", "sample-eff", "instance-gen", "viewpoint"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=100_000)
    p.add_argument("--mode", default="view1", choices=["train", "view1", "view2"],
                   help="viewpoint protocol mode")
    p.add_argument("--data", help="demonstration set dir (sample-eff protocol)")
    p.add_argument("--model-name", default=None)
    p.add_argument("--out", required=True)


def _add_teleop(sub):
    p = sub.add_parser("teleop-server", help="serve a live teleoperation session")
    p.add_argument("--task", required=True, choices=TASK_NAMES)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--rate", type=float, default=6.0, help="frame stream rate (Hz)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--dataset", help="directory for recorded episodes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surgibench",
        description="Deterministic surgical manipulation benchmark tooling",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_collect(sub)
    _add_train(sub)
    _add_eval(sub)
    _add_teleop(sub)
    return parser


def cmd_collect(args) -> int:
    from .experts import collect

    spec = get_task_spec(args.task, needle_name=args.needle)
    ds = collect(
        spec, args.count, seed=args.seed, noise_scale=args.noise,
        out=args.out, n_points=args.n_points, record_frames=not args.no_frames,
    )
    report = ds.validate()
    print(f"collected {len(ds)} episodes at {args.out}; "
          f"valid={report['valid']} max_deviation={report['max_deviation']}")
    return 0 if report["valid"] else 1


def cmd_train(args) -> int:
    from .datasets.store import DemonstrationSet
    from .policies.training import train_act, train_diffusion

    ds = DemonstrationSet.open(args.data)
    if args.task and ds.manifest["task"]["name"] != args.task:
        print(f"dataset task {ds.manifest['task']['name']!r} != --task {args.task}",
              file=sys.stderr)
        return 1
    if args.demos:
        ds = ds.subsample(args.demos, args.subsample_seed)
    kwargs = {k: v for k, v in (("epochs", args.epochs), ("batch_size", args.batch_size),
                                ("lr", args.lr)) if v is not None}
    if args.model == "act":
        ckpt = train_act(ds, args.space, args.out, seed=args.seed, **kwargs)
    else:
        if args.space != "point_cloud":
            print("dp3 requires --space point_cloud", file=sys.stderr)
            return 1
        ckpt = train_diffusion(ds, args.out, seed=args.seed, **kwargs)
    print(f"checkpoint written to {ckpt}")
    return 0


def cmd_eval(args) -> int:
    from . import evalharness as eh
    from .experts import ExpertPolicy

    spec = get_task_spec(args.task)
    if args.checkpoint:
        from .policies.training import load_policy

        policy = load_policy(args.checkpoint)
        model_name = args.model_name or json.loads(
            (Path(args.checkpoint) / "checkpoint.json").read_text()
        )["model_type"]
    else:
        policy = ExpertPolicy(spec)
        model_name = args.model_name or "expert"

    results = []
    if args.protocol == "table1":
        trials = args.trials or 50
        results.append(eh.run_success_eval(policy, spec, trials, args.seed, model=model_name))
    elif args.protocol == "viewpoint":
        trials = args.trials or 20
        results.append(eh.run_viewpoint_robustness(
            policy, spec, args.mode, trials, args.seed, model=model_name))
    elif args.protocol == "instance-gen":
        trials = args.trials or 50
        table = eh.run_instance_generalization(policy, spec, trials, args.seed, model=model_name)
        results.extend(table["rows"].values())
        print(f"average over unseen needles: {table['average_unseen']:.3f}")
    elif args.protocol == "sample-eff":
        if not args.data:
            print("sample-eff requires --data (training is part of the protocol)",
                  file=sys.stderr)
            return 1
        from .datasets.store import DemonstrationSet
        from .policies.training import train_act

        ds = DemonstrationSet.open(args.data)
        trials = args.trials or 20

        def train_fn(subset, out_dir):
            return train_act(subset, "single_camera", out_dir)

        results.extend(eh.run_sample_efficiency(
            ds, train_fn, spec, Path(args.out) / "checkpoints",
            trials=trials, seed0=args.seed, model=model_name or "ACT-S"))

    files = eh.emit_report(results, args.out)
    for r in results:
        print(f"{r.task} {r.model} {r.protocol}: "
              f"{r.successes}/{r.n_trials} = {r.success_rate:.3f}")
    print(f"report: {files['markdown']}")
    return 0


def cmd_teleop(args) -> int:
    from .teleop import run_server

    spec = get_task_spec(args.task)
    run_server(spec, args.port, rate_hz=args.rate,
               dataset_root=args.dataset, host=args.host)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    handlers = {
        "collect": cmd_collect,
        "train": cmd_train,
        "eval": cmd_eval,
        "teleop-server": cmd_teleop,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
