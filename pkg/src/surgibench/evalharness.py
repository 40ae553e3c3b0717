"""Evaluation protocols: success-rate sweeps, sample efficiency, instance
generalization across needle variants, viewpoint robustness, and reporting.

All protocols roll out a policy over an explicit list of seeds, score each
episode with the task success predicate, and return `EvalResult` records that
reduce deterministically in seed order. Evaluation seeds must be disjoint from
the seeds the policy's demonstrations were collected from.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .perception import build_observation
from .rendering.camera import (
    CameraRig,
    default_rig,
    perturb_camera,
    sample_perturbation,
    swap_view,
)
from .sim.env import SurgicalEnv
from .sim.needles import NEEDLE_REGISTRY
from .sim.tasks import get_task_spec
from .sim.types import TaskSpec

logger = logging.getLogger(__name__)

DEFAULT_EVAL_SEED0 = 100_000
VIEW1_TRANS_RANGE = 0.01  # meters, per axis
VIEW1_ROT_RANGE_DEG = 5.0


@dataclass
class EvalResult:
    task: str
    model: str
    space: str
    n_trials: int
    successes: int
    success_rate: float
    seeds: list[int]
    wall_time: float = field(compare=False, default=0.0)
    protocol: str = "success"
    detail: dict = field(compare=False, default_factory=dict)

    def __post_init__(self):
        expected = self.successes / self.n_trials if self.n_trials else 0.0
        if not math.isclose(self.success_rate, expected, abs_tol=1e-12):
            raise ValueError("success_rate must equal successes / n_trials")


def _policy_space(policy) -> str | None:
    """Observation space a policy consumes; None for privileged-state policies."""
    return getattr(policy, "space", None)


def check_seed_disjointness(eval_seeds: list[int], policy) -> None:
    train_seeds = set(getattr(policy, "sidecar", {}).get("train_seeds", []))
    overlap = train_seeds & set(eval_seeds)
    if overlap:
        raise ValueError(f"evaluation seeds overlap training seeds: {sorted(overlap)[:5]}")


def rollout(policy, spec: TaskSpec, seed: int, rig: CameraRig | None = None) -> bool:
    """One closed-loop episode; returns the final success flag."""
    env = SurgicalEnv(spec)
    state = env.reset(seed)
    space = _policy_space(policy)
    if space is not None and rig is None:
        rig = default_rig(spec)
    if hasattr(policy, "reset"):
        try:
            policy.reset(seed=seed)
        except TypeError:
            policy.reset()
    for _ in range(spec.horizon):
        obs = None
        if space is not None:
            obs = build_observation(spec, state, rig, space)
        action = policy.act(obs, state)
        state = env.step(action)
        if env.success():
            return True
    return env.success()


def run_success_eval(
    policy,
    spec: TaskSpec,
    n_trials: int = 50,
    seed0: int = DEFAULT_EVAL_SEED0,
    rig: CameraRig | None = None,
    model: str = "policy",
    protocol: str = "success",
) -> EvalResult:
    """Roll out seeds seed0 … seed0+n-1 and count successes."""
    seeds = list(range(seed0, seed0 + n_trials))
    check_seed_disjointness(seeds, policy)
    t0 = time.time()
    successes = 0
    for seed in seeds:
        try:
            ok = rollout(policy, spec, seed, rig=rig)
        except Exception:
            logger.exception("trial seed=%d failed with an exception; counted as failure", seed)
            ok = False
        successes += int(ok)
    return EvalResult(
        task=spec.name,
        model=model,
        space=_policy_space(policy) or "privileged",
        n_trials=n_trials,
        successes=successes,
        success_rate=successes / n_trials,
        seeds=seeds,
        wall_time=time.time() - t0,
        protocol=protocol,
    )


def run_sample_efficiency(
    ds,
    train_fn,
    spec: TaskSpec,
    out_dir: str | Path,
    increments: tuple[int, ...] = (10, 20, 30, 40, 50),
    trials: int = 20,
    seed0: int = DEFAULT_EVAL_SEED0,
    subsample_seed: int = 0,
    model: str = "policy",
) -> list[EvalResult]:
    """Train one policy per nested demo subset and evaluate each.

    `train_fn(subset, out_dir) -> checkpoint path`; subsets are nested, so the
    10-demo subset is a prefix of the 20-demo subset, and so on. A training
    failure flags that curve point instead of aborting the sweep.
    """
    from .policies.training import load_policy

    out_dir = Path(out_dir)
    results = []
    for n in sorted(increments):
        subset = ds.subsample(n, subsample_seed)
        point_dir = out_dir / f"demos_{n:03d}"
        try:
            ckpt = train_fn(subset, point_dir)
            policy = load_policy(ckpt)
            res = run_success_eval(
                policy, subset.task_spec(), trials, seed0,
                rig=subset.rig(), model=model, protocol="sample_efficiency",
            )
            res.detail["n_demos"] = n
        except FloatingPointError:
            logger.exception("training diverged at n_demos=%d; point flagged", n)
            res = EvalResult(
                task=spec.name, model=model, space="unknown", n_trials=0,
                successes=0, success_rate=0.0, seeds=[],
                protocol="sample_efficiency",
                detail={"n_demos": n, "diverged": True},
            )
        results.append(res)
    return results


def run_instance_generalization(
    policy,
    base_spec: TaskSpec,
    trials: int = 50,
    seed0: int = DEFAULT_EVAL_SEED0,
    rig: CameraRig | None = None,
    needles: tuple[str, ...] = ("N1", "N2", "N3", "N4", "N5"),
    model: str = "policy",
) -> dict:
    """Evaluate a needle-lift policy trained on N1 across needle variants.

    Returns per-needle EvalResults plus the average over the unseen needles
    (everything except N1).
    """
    for name in needles:
        if name not in NEEDLE_REGISTRY:
            raise ValueError(f"unknown needle {name!r}")
    rows = {}
    for name in needles:
        spec = get_task_spec(base_spec.name, needle_name=name)
        res = run_success_eval(
            policy, spec, trials, seed0, rig=rig, model=model,
            protocol="instance_generalization",
        )
        res.detail["needle"] = name
        rows[name] = res
    unseen = [rows[n].success_rate for n in needles if n != "N1"]
    return {
        "rows": rows,
        "average_unseen": float(np.mean(unseen)) if unseen else float("nan"),
    }


def run_viewpoint_robustness(
    policy,
    spec: TaskSpec,
    mode: str,
    trials: int = 20,
    seed0: int = DEFAULT_EVAL_SEED0,
    rig: CameraRig | None = None,
    model: str = "policy",
) -> EvalResult:
    """mode `train`: nominal rig; `view1`: per-trial camera jitter within
    ±1 cm / ±5°; `view2`: primary and alternate cameras swapped (wrist
    cameras untouched)."""
    if rig is None:
        rig = default_rig(spec)
    if mode == "train":
        res = run_success_eval(policy, spec, trials, seed0, rig=rig, model=model)
        res.protocol = "viewpoint_train"
        return res
    if mode == "view2":
        res = run_success_eval(
            policy, spec, trials, seed0, rig=swap_view(rig), model=model
        )
        res.protocol = "viewpoint_view2"
        return res
    if mode != "view1":
        raise ValueError(f"unknown viewpoint mode {mode!r}")

    seeds = list(range(seed0, seed0 + trials))
    check_seed_disjointness(seeds, policy)
    t0 = time.time()
    successes = 0
    perturbation_log = []
    for seed in seeds:
        cam = perturb_camera(
            rig.primary, seed=seed, trans_range=VIEW1_TRANS_RANGE,
            rot_range_deg=VIEW1_ROT_RANGE_DEG,
        )
        dt, angles = sample_perturbation(seed, VIEW1_TRANS_RANGE, VIEW1_ROT_RANGE_DEG)
        perturbation_log.append({
            "seed": seed,
            "translation": dt.tolist(),
            "rotation_deg": np.degrees(angles).tolist(),
        })
        trial_rig = CameraRig(primary=cam, alternate=rig.alternate, wrists=rig.wrists)
        try:
            ok = rollout(policy, spec, seed, rig=trial_rig)
        except Exception:
            logger.exception("view1 trial seed=%d failed; counted as failure", seed)
            ok = False
        successes += int(ok)
    return EvalResult(
        task=spec.name,
        model=model,
        space=_policy_space(policy) or "privileged",
        n_trials=trials,
        successes=successes,
        success_rate=successes / trials,
        seeds=seeds,
        wall_time=time.time() - t0,
        protocol="viewpoint_view1",
        detail={"perturbations": perturbation_log},
    )


CSV_FIELDS = [
    "task", "model", "space", "protocol", "n_trials", "successes",
    "success_rate", "seed0", "wall_time",
]
MATRIX_MODELS = ["ACT-S", "ACT-M", "ACT-PC", "DP3"]


def emit_report(results: list[EvalResult], out_dir: str | Path) -> dict[str, Path]:
    """Write results.csv, report.md (incl. a task × model matrix), JSON detail,
    and line plots for any sample-efficiency curves present."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}

    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for r in results:
            writer.writerow({
                "task": r.task, "model": r.model, "space": r.space,
                "protocol": r.protocol, "n_trials": r.n_trials,
                "successes": r.successes,
                "success_rate": f"{r.success_rate:.4f}",
                "seed0": r.seeds[0] if r.seeds else "",
                "wall_time": f"{r.wall_time:.1f}",
            })
    files["csv"] = csv_path

    detail_path = out_dir / "results.json"
    detail_path.write_text(json.dumps(
        [r.__dict__ for r in results], indent=2, default=str
    ))
    files["json"] = detail_path

    # Task x model success matrix from plain success-protocol results.
    matrix: dict[str, dict[str, float]] = {}
    for r in results:
        if r.protocol in ("success", "viewpoint_train"):
            matrix.setdefault(r.task, {})[r.model] = r.success_rate
    models = [m for m in MATRIX_MODELS if any(m in row for row in matrix.values())]
    models += sorted({m for row in matrix.values() for m in row if m not in models})
    lines = ["# Evaluation report", "", "## Success rates", ""]
    if matrix:
        lines.append("| Task | " + " | ".join(models) + " |")
        lines.append("|" + "---|" * (len(models) + 1))
        for task in sorted(matrix):
            cells = [
                f"{matrix[task][m]:.2f}" if m in matrix[task] else "-" for m in models
            ]
            lines.append(f"| {task} | " + " | ".join(cells) + " |")
    else:
        lines.append("(no success-protocol results)")
    md_path = out_dir / "report.md"
    md_path.write_text("\n".join(lines) + "\n")
    files["markdown"] = md_path

    curves: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for r in results:
        if r.protocol == "sample_efficiency" and "n_demos" in r.detail:
            curves.setdefault((r.task, r.model), []).append(
                (r.detail["n_demos"], r.success_rate)
            )
    if curves:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        for (task, model_name), pts in sorted(curves.items()):
            pts = sorted(pts)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                    label=f"{model_name} ({task})")
        ax.set_xlabel("demonstrations")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        fig.tight_layout()
        plot_path = out_dir / "sample_efficiency.png"
        fig.savefig(plot_path, dpi=120)
        plt.close(fig)
        files["plot"] = plot_path
    return files
