"""Result files, convergence histories, coupler curves and plots."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from mechsyn import kernels
from mechsyn.kinematics import FourBarParams, coupler_curve, joint_positions
from mechsyn.problems import HybridTask, PathTask, Problem

RESULT_VERSION = 1


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        fh.write(text)
    return path


def result_name(seed: int, stage: int) -> str:
    return f"run-s{seed}-stage{stage}"


def result_document(record, problem: Problem, config=None) -> dict:
    """Structured result for one record; wall time is left out so reruns compare equal."""
    return {
        "version": RESULT_VERSION,
        "problem": problem.name,
        "seed": record.seed,
        "stage": record.stage,
        "stage_seed": record.stage_seed,
        "fob": record.best_fob,
        "parameters": problem.named(record.best_x),
        "x": [float(v) for v in record.best_x],
        "generations": record.generations,
        "evaluations": record.evaluations,
        "threshold": record.threshold,
        "first_hit": record.first_hit,
        "bounds": None if record.bounds is None else {
            "lower": record.bounds.lower.tolist(),
            "upper": record.bounds.upper.tolist(),
        },
        "backend": kernels.BACKEND,
        "config": None if config is None else config.to_dict(),
    }


def export_results(records, out_dir, problem: Problem, config=None) -> list[Path]:
    """Write one JSON per record, a history TSV per record and ``summary.tsv``.

    The summary is sorted by ascending fob (ties by seed, then stage).
    """
    out = Path(out_dir)
    written = []
    for r in records:
        base = result_name(r.seed, r.stage)
        doc = result_document(r, problem, config)
        written.append(_write(out / f"{base}.json", json.dumps(doc, indent=2) + "\n"))
        lines = ["generation\tbest_fob"] + [f"{g}\t{f!r}" for g, f in r.history]
        written.append(_write(out / f"{base}-history.tsv", "\n".join(lines) + "\n"))
    rows = sorted(records, key=lambda r: (r.best_fob, r.seed, r.stage))
    lines = ["seed\tstage\tfob\tgenerations\tfirst_hit\twall_time_s\tfile"]
    for r in rows:
        hit = "" if r.first_hit is None else str(r.first_hit)
        lines.append(f"{r.seed}\t{r.stage}\t{r.best_fob!r}\t{r.generations}\t{hit}\t"
                     f"{r.wall_time:.3f}\t{result_name(r.seed, r.stage)}.json")
    written.append(_write(out / "summary.tsv", "\n".join(lines) + "\n"))
    return written


def load_result(path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# curves


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "mechsyn"
    fig, ax = plt.subplots(figsize=(6, 6))
    return plt, fig, ax


def _save(plt, fig, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _targets(problem: Problem) -> Optional[np.ndarray]:
    task = problem.task
    if isinstance(task, PathTask):
        return task.points
    if isinstance(task, HybridTask):
        return task.all_points
    return None


def _reference_psi(problem: Problem, x, curve: np.ndarray) -> Optional[float]:
    try:
        psi = problem.objective.crank_angles(np.asarray(x)[None, :])[0]
        return float(psi[0])
    except (AttributeError, IndexError, TypeError):
        pass
    ok = np.flatnonzero(curve[:, 5] > 0)
    return float(curve[ok[0], 0]) if ok.size else None


def export_curve(problem: Problem, x, out_dir, n_samples: int = 720) -> list[Path]:
    """Sampled coupler curve (or steering sweep) plus an SVG plot.

    Four-bar problems write ``curve.tsv`` with columns
    ``psi, px, py, theta, phi, feasible``; unreachable crank angles are NaN
    rows flagged ``feasible=0`` and show as gaps in ``curve.svg``. The
    steering problem writes ``sweep.tsv`` and ``sweep.svg`` instead.
    """
    out = Path(out_dir)
    x = np.asarray(x, dtype=np.float64)
    if problem.kind == "steering":
        return _export_sweep(problem, x, out)

    params = problem.objective.mechanism(x)
    curve = coupler_curve(params, n_samples)
    header = "psi\tpx\tpy\ttheta\tphi\tfeasible"
    body = "\n".join("\t".join(_fmt(v) for v in row[:5]) + f"\t{int(row[5])}" for row in curve)
    paths = [_write(out / "curve.tsv", header + "\n" + body + "\n")]

    plt, fig, ax = _figure()
    ax.plot(curve[:, 1], curve[:, 2], "-", lw=1.2, label="coupler curve")
    targets = _targets(problem)
    if targets is not None:
        ax.plot(targets[:, 0], targets[:, 1], "o", ms=4, mfc="none", label="targets")
    psi = _reference_psi(problem, x, curve)
    if psi is not None:
        _draw_fourbar(ax, params, psi)
    if not np.all(curve[:, 5] > 0):
        ax.set_title(f"{problem.name}: {int((curve[:, 5] == 0).sum())} unreachable samples")
    else:
        ax.set_title(problem.name)
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    _save(plt, fig, out / "curve.svg")
    paths.append(out / "curve.svg")
    return paths


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def _draw_fourbar(ax, params: FourBarParams, psi: float):
    try:
        j = joint_positions(params, psi)
    except ValueError:
        return
    A, B, C, D, P = (j[k] for k in "ABCDP")
    ax.plot([A[0], B[0], C[0], D[0]], [A[1], B[1], C[1], D[1]], "k-", lw=2, label="linkage")
    ax.fill([B[0], C[0], P[0]], [B[1], C[1], P[1]], color="0.7", alpha=0.6)
    ax.plot([A[0], D[0]], [A[1], D[1]], "k^", ms=8)


def _export_sweep(problem: Problem, x, out: Path) -> list[Path]:
    from mechsyn.steering import SteeringDesign, steering_sweep

    rows = steering_sweep(SteeringDesign.from_vector(x), problem.task)
    header = "delta1_deg\tdelta_ack_deg\tdelta2_deg\terror_deg"
    body = "\n".join("\t".join(_fmt(v) for v in row) for row in rows)
    paths = [_write(out / "sweep.tsv", header + "\n" + body + "\n")]

    plt, fig, ax = _figure()
    ax.plot(rows[:, 0], rows[:, 1], "-", label="Ackermann")
    ax.plot(rows[:, 0], rows[:, 2], "--", label="six-bar")
    ax.set_xlabel("delta1 [deg]")
    ax.set_ylabel("delta2 [deg]")
    err = np.nanmax(np.abs(rows[:, 3])) if np.any(np.isfinite(rows[:, 3])) else float("nan")
    ax.set_title(f"{problem.name}: max |error| {err:.3f} deg")
    ax.grid(True, lw=0.3)
    ax.legend(loc="best", fontsize=8)
    _save(plt, fig, out / "sweep.svg")
    paths.append(out / "sweep.svg")
    return paths
