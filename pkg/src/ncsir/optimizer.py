"""Projected gradient descent on the control trajectory.

Each iteration solves the state forward, the adjoint backward, takes a
pointwise step ``u - eta * g`` and clamps it back into the admissible box.
The step size shrinks by ``decay_c`` every ``decay_k`` iterations, and the
loop stops once the largest change in any state or control value between
successive iterates falls below ``tol``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .adjoint import CostWeights
from .engine import Grid, TimeGrid, Trajectory
from .errors import ValidationError
from .model import N_CONTROLS, ModelParams
from .objective import (CostAccumulator, CostBreakdown, adjoint_gradient, inner_product,
                        stationarity_residual)
from .problem import Problem

log = logging.getLogger(__name__)

INIT_MODES = ("random", "midpoint", "uncontrolled")


@dataclass(frozen=True)
class OptimConfig:
    tol: float = 1e-3
    max_iter: int = 200
    eta0: float = 0.1
    decay_c: float = 0.2
    decay_k: int = 10
    seed: int = 0
    init: str = "random"
    # Extension, off by default: backtracking on eta instead of the fixed schedule.
    armijo: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError("tol", "tol > 0")
        if not self.eta0 > 0:
            raise ValidationError("eta0", "eta0 > 0")
        if not 0 < self.decay_c < 1:
            raise ValidationError("decay_c", "0 < decay_c < 1")
        if self.decay_k < 1:
            raise ValidationError("decay_k", "decay_k >= 1")
        if self.max_iter < 1:
            raise ValidationError("max_iter", "max_iter >= 1")
        if self.init not in INIT_MODES:
            raise ValidationError("init", f"one of {INIT_MODES}")


@dataclass
class OptimResult:
    controls: Trajectory
    states: object
    cost_history: list
    change_history: list
    iterations: int
    converged: bool
    stationarity: float
    final_cost: CostBreakdown
    gradient: Trajectory | None = None
    eta_history: list = field(default_factory=list)


def _box(p: ModelParams, ndim: int):
    shape = (1, N_CONTROLS) + (1,) * (ndim - 2)
    return p.lower.reshape(shape), p.upper.reshape(shape)


def project(u, p: ModelParams):
    """Clamp alpha to ``[alpha_lower, 1]``, mu to ``[0, mu_bar]``, nu to ``[0, nu_bar]``."""
    frames = u.frames if isinstance(u, Trajectory) else np.asarray(u, dtype=float)
    lo, hi = _box(p, frames.ndim)
    out = np.clip(frames, lo, hi)
    return Trajectory(u.times, out) if isinstance(u, Trajectory) else out


def _sup_diff(a, b, chunk=64) -> float:
    worst = 0.0
    for s in range(0, a.shape[0], chunk):
        worst = max(worst, float(np.max(np.abs(a[s:s + chunk] - b[s:s + chunk]))))
    return worst


def change_metric(y_n, y_prev, u_n: Trajectory, u_prev: Trajectory) -> float:
    """Sup-norm of the state and control differences over all frames and cells."""
    worst = _sup_diff(np.asarray(u_n.frames), np.asarray(u_prev.frames))
    for (_, a), (_, b) in zip(y_n.iter_frames(), y_prev.iter_frames()):
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


def initial_controls(cfg: OptimConfig, p: ModelParams, grid: Grid, times: TimeGrid) -> Trajectory:
    shape = (times.n_steps + 1, N_CONTROLS) + grid.shape
    lo, hi = _box(p, len(shape))
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        frames = rng.random(shape)
        frames *= hi - lo
        frames += lo
    elif cfg.init == "midpoint":
        frames = np.broadcast_to(0.5 * (lo + hi), shape).copy()
    else:
        frames = np.broadcast_to(lo, shape).copy()
    return Trajectory(times, frames)


class _StateChange:
    """Running sup-norm distance to the previous iterate's state trajectory."""

    def __init__(self, previous):
        self._prev = previous.iter_frames() if previous is not None else None
        self.value = math.inf if previous is None else 0.0

    def __call__(self, n, y):
        if self._prev is None:
            return
        m, y_old = next(self._prev)
        assert m == n
        self.value = max(self.value, float(np.max(np.abs(y - y_old))))


def _descend(u: Trajectory, g: Trajectory, eta: float, p: ModelParams) -> Trajectory:
    frames = np.multiply(g.frames, -eta)
    frames += u.frames
    lo, hi = _box(p, frames.ndim)
    np.clip(frames, lo, hi, out=frames)
    return Trajectory(u.times, frames)


def _armijo(problem, u, g, eta, j_now, sigma=1e-4, shrink=0.5, max_tries=20):
    for _ in range(max_tries):
        cand = _descend(u, g, eta, problem.params)
        step = Trajectory(u.times, np.asarray(u.frames) - cand.frames)
        if problem.cost(cand).j_total <= j_now - sigma * inner_product(g, step, problem.grid):
            return cand, eta
        eta *= shrink
    return cand, eta


def run(cfg: OptimConfig, problem: Problem, controls: Trajectory | None = None,
        callback=None) -> OptimResult:
    """Projected gradient descent on ``problem``, starting from ``controls``
    (or from the initialization ``cfg.init`` selects).

    ``callback(n, cost, change, eta, u_next)`` runs after every iteration.
    """
    p, grid, times = problem.params, problem.grid, problem.times
    u = project(controls, p) if controls is not None else initial_controls(cfg, p, grid, times)
    eta = cfg.eta0
    y_prev = None
    cost_history, change_history, eta_history = [], [], []
    converged = False
    n = 0
    for n in range(1, cfg.max_iter + 1):
        acc = CostAccumulator(u, grid, problem.weights, p)
        tracker = _StateChange(y_prev)

        def on_frame(k, y, acc=acc, tracker=tracker):
            acc(k, y)
            tracker(k, y)

        states = problem.simulate(u, on_frame=on_frame)
        cost = acc.result()
        cost_history.append(cost)
        g = adjoint_gradient(states, u, problem.weights, p, grid)
        eta_history.append(eta)
        if cfg.armijo:
            u_new, eta = _armijo(problem, u, g, eta, cost.j_total)
        else:
            u_new = _descend(u, g, eta, p)
        change = max(tracker.value, _sup_diff(u_new.frames, np.asarray(u.frames)))
        change_history.append(change)
        log.info("iter %d  J=%.6g  CHANGE=%.3e  eta=%.3g", n, cost.j_total, change, eta)
        if callback is not None:
            callback(n, cost, change, eta, u_new)
        y_prev, u = states, u_new
        del g
        if change < cfg.tol:
            converged = True
            break
        if not cfg.armijo and n % cfg.decay_k == 0:
            eta *= cfg.decay_c
    # the returned iterate has not been simulated yet
    final_cost, g, states = problem.cost_and_gradient(u)
    return OptimResult(
        controls=u,
        states=states,
        cost_history=cost_history,
        change_history=change_history,
        iterations=n,
        converged=converged,
        stationarity=stationarity_residual(u, g, p, grid),
        final_cost=final_cost,
        gradient=g,
        eta_history=eta_history,
    )


def optimize(cfg: OptimConfig, p: ModelParams, w: CostWeights, y0, grid: Grid,
             tg: TimeGrid, checkpoint_stride="auto", callback=None) -> OptimResult:
    problem = Problem(p, w, grid, tg, np.asarray(y0, dtype=float), checkpoint_stride)
    return run(cfg, problem, callback=callback)


def multi_start(cfg: OptimConfig, problem: Problem, seeds) -> tuple:
    """Run from several random starts; returns ``(best, all_results)``."""
    results = []
    for s in seeds:
        c = OptimConfig(**{**cfg.__dict__, "seed": int(s), "init": "random"})
        results.append(run(c, problem))
    best = min(results, key=lambda r: r.final_cost.j_total)
    return best, results
