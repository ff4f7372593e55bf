"""Run an experiment and write its artifacts.

Layout of an output directory::

    timeseries.csv          population totals and control L1 norms per time level
    summary.json            cost breakdown, RelCR, iteration log, config echo
    snapshots/<field>_t<time>.pgm / .csv / .scale.json
    sweep.csv               (sweep mode) one row per zeta, plus zeta_<value>/ subdirectories
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernels
from ._version import __version__
from .config import ExperimentConfig
from .engine import Trajectory
from .errors import IoError
from .model import CONTROL_NAMES, I, I_STAR, R, R_STAR, S, S_STAR, SPECIES_NAMES
from .objective import relative_cost_reduction, stationarity_residual
from .optimizer import OptimResult, run

log = logging.getLogger(__name__)

TIMESERIES_COLUMNS = ("time", "susceptible_total", "infected_total", "compliant_total",
                      "noncompliant_total", "alpha_l1", "mu_l1", "nu_l1")
SWEEP_COLUMNS = ("zeta", "j_uncontrolled", "j_optimal", "relcr", "iterations", "converged")
PGM_MAXVAL = 255


def fmt(x) -> str:
    """Shortest text that still carries 17 significant digits."""
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        w.writerows(rows)


def write_pgm(path: Path, field: np.ndarray):
    """P2 graymap, min-max scaled, with the scale in ``<stem>.scale.json``.

    Image rows run along y (top row = largest y) and columns along x.
    """
    img = np.atleast_2d(np.asarray(field, dtype=float).T)[::-1]
    lo, hi = float(img.min()), float(img.max())
    span = hi - lo
    levels = np.zeros(img.shape, dtype=int) if span == 0 else \
        np.rint((img - lo) / span * PGM_MAXVAL).astype(int)
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", str(PGM_MAXVAL)]
    lines += [" ".join(map(str, row)) for row in levels]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    scale = {"min": lo, "max": hi, "maxval": PGM_MAXVAL}
    path.with_name(path.stem + ".scale.json").write_text(json.dumps(scale, indent=2) + "\n")


def read_pgm(path: Path) -> np.ndarray:
    """Inverse of :func:`write_pgm` up to quantization; returns gray levels."""
    tokens = [t for line in Path(path).read_text().splitlines()
              if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise ValueError(f"{path}: not a P2 graymap")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array(tokens[4:4 + w * h], dtype=int).reshape(h, w)


def _snapshot_indices(cfg: ExperimentConfig, times) -> dict:
    out = {}
    for t in cfg.outputs.snapshot_times:
        if t <= times.t_final:
            out[times.index_of(t)] = t
    return out


def write_outputs(out: Path, cfg: ExperimentConfig, problem, states, controls: Trajectory):
    """Stream the state trajectory once, writing the time series and snapshots."""
    grid, times = problem.grid, problem.times
    snaps = _snapshot_indices(cfg, times)
    snap_dir = out / "snapshots"
    if snaps:
        snap_dir.mkdir(exist_ok=True)
    t = times.times
    rows = []
    for n, y in states.iter_frames():
        tot = grid.integrate(y)
        u = controls.frame(n)
        row = np.array([tot[S] + tot[S_STAR], tot[I] + tot[I_STAR],
                        tot[S] + tot[I] + tot[R], tot[S_STAR] + tot[I_STAR] + tot[R_STAR]])
        if cfg.outputs.normalize:
            row = row / tot.sum()
        l1 = grid.integrate(np.abs(u))
        rows.append([fmt(t[n])] + [fmt(v) for v in row] + [fmt(v) for v in l1])
        if n in snaps:
            label = f"t{snaps[n]:g}"
            for name, f in zip(CONTROL_NAMES + SPECIES_NAMES, list(u) + list(y)):
                stem = f"{name}_{label}"
                write_pgm(snap_dir / f"{stem}.pgm", f)
                _write_csv(snap_dir / f"{stem}.csv", [f"c{j}" for j in range(np.shape(f)[-1])]
                           if np.ndim(f) == 2 else ["value"],
                           [[fmt(v) for v in np.atleast_1d(r)] for r in f])
    _write_csv(out / "timeseries.csv", TIMESERIES_COLUMNS, rows)


def _history_dicts(res: OptimResult | None):
    if res is None:
        return [], []
    return [c.j_total for c in res.cost_history], list(res.change_history)


def _summary(cfg, cost, j_unc, res, stationarity):
    costs, changes = _history_dicts(res)
    return {
        "name": cfg.name,
        "mode": cfg.mode,
        "version": __version__,
        "cost": cost.as_dict(),
        "j_uncontrolled": j_unc.j_total,
        "uncontrolled_cost": j_unc.as_dict(),
        "relcr": relative_cost_reduction(j_unc.j_total, cost.j_total),
        "iterations": res.iterations if res else 0,
        "converged": bool(res.converged) if res else True,
        "stationarity": stationarity,
        "cost_history": costs,
        "change_history": [c if np.isfinite(c) else None for c in changes],
        "config": cfg.to_dict(),
    }


def _run_single(cfg: ExperimentConfig, out: Path) -> dict:
    problem = cfg.problem()
    u_unc = problem.uncontrolled_controls()
    j_unc = problem.cost(u_unc)
    log.info("%s: J uncontrolled = %.6g", cfg.name, j_unc.j_total)
    if cfg.mode == "simulate":
        cost, g, states = problem.cost_and_gradient(u_unc)
        controls, res = u_unc, None
        stationarity = stationarity_residual(u_unc, g, problem.params, problem.grid)
    else:
        res = run(cfg.optim, problem)
        cost, states, controls, stationarity = res.final_cost, res.states, res.controls, \
            res.stationarity
        log.info("%s: J optimal = %.6g after %d iterations", cfg.name, cost.j_total,
                 res.iterations)
    write_outputs(out, cfg, problem, states, controls)
    summary = _summary(cfg, cost, j_unc, res, stationarity)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def _member(args):
    cfg, out = args
    out.mkdir(parents=True, exist_ok=True)
    return _run_single(cfg, out)


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> dict:
    """Run ``cfg`` and write its artifacts under ``out_dir`` (default ``cfg.outputs.directory``).

    Returns the summary dict; in sweep mode ``{"runs": [...], ...}``.
    """
    out = Path(out_dir if out_dir is not None else cfg.outputs.directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    log.info("kernels: %s", kernels.BACKEND)
    try:
        if cfg.mode != "sweep":
            return _run_single(cfg, out)
        members = []
        for z in cfg.sweep.zeta:
            member = replace(cfg, mode="optimize", name=f"{cfg.name}_zeta_{z:g}",
                             weights=replace(cfg.weights, zeta=z))
            members.append((member, out / f"zeta_{z:g}"))
        if jobs > 1 and len(members) > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, len(members))) as pool:
                runs = list(pool.map(_member, members))
        else:
            runs = [_member(m) for m in members]
        rows = [[fmt(m.weights.zeta), fmt(r["j_uncontrolled"]), fmt(r["cost"]["j_total"]),
                 fmt(r["relcr"]), r["iterations"], int(r["converged"])]
                for (m, _), r in zip(members, runs)]
        _write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
        return {"name": cfg.name, "mode": "sweep", "runs": runs,
                "converged": all(r["converged"] for r in runs)}
    except OSError as exc:
        raise IoError(f"writing results under {out}: {exc}") from exc
