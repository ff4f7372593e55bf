"""Cost functional, its breakdown, and the adjoint gradient.

Space integrals use the midpoint rule (cell sums times cell area).  Time
integrals use the left-endpoint rule on the step grid, which is the rule the
explicit reaction step itself applies; with it the adjoint gradient below is
the exact derivative of the discrete cost.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .adjoint import CostWeights, backward_sweep
from .engine import Grid, Trajectory
from .errors import DomainError, MisalignedTrajectories
from .model import ALPHA, I, I_STAR, N_CONTROLS, R_STAR, S_STAR, ModelParams


@dataclass(frozen=True)
class CostBreakdown:
    i_total: float
    n_star_total: float
    c_total: float
    j_total: float

    @classmethod
    def from_parts(cls, i_total, n_star_total, c_total, w: CostWeights) -> "CostBreakdown":
        j = w.lambda1 * i_total + w.lambda2 * n_star_total + 0.5 * w.zeta * c_total
        return cls(float(i_total), float(n_star_total), float(c_total), float(j))

    def as_dict(self) -> dict:
        return asdict(self)


def _control_shift(u, w: CostWeights, p: ModelParams | None):
    """Control values entering the quadratic penalty."""
    if not w.control_cost_offset:
        return u
    if p is None:
        raise ValueError("control_cost_offset needs the model parameters")
    shifted = np.array(u, dtype=float)
    shifted[ALPHA] -= p.alpha_lower
    return shifted


def frame_integrals(y, u, grid: Grid, w: CostWeights, p: ModelParams | None = None):
    """Spatial integrals of ``I + I*``, ``N*`` and the control penalty at one time."""
    q = _control_shift(u, w, p)
    q = np.broadcast_to(q, (N_CONTROLS,) + grid.shape)
    return (grid.integrate(y[I] + y[I_STAR]),
            grid.integrate(y[S_STAR] + y[I_STAR] + y[R_STAR]),
            grid.integrate((q * q).sum(axis=0)))


class CostAccumulator:
    """Time-quadrature accumulation of the cost, one frame at a time."""

    def __init__(self, controls: Trajectory, grid: Grid, w: CostWeights,
                 p: ModelParams | None = None):
        self.controls = controls
        self.grid = grid
        self.weights = w
        self.params = p
        self.tw = controls.times.quadrature_weights()
        self.parts = np.zeros(3)
        self.seen = 0

    def __call__(self, n, y):
        parts = frame_integrals(y, self.controls.frame(n), self.grid, self.weights, self.params)
        self.parts += self.tw[n] * np.asarray(parts)
        self.seen += 1

    def result(self) -> CostBreakdown:
        if self.seen != len(self.tw):
            raise MisalignedTrajectories(f"accumulated {self.seen} of {len(self.tw)} frames")
        return CostBreakdown.from_parts(*self.parts, self.weights)


def evaluate_cost(states, controls: Trajectory, w: CostWeights, grid: Grid,
                  p: ModelParams | None = None) -> CostBreakdown:
    if len(states) != len(controls):
        raise MisalignedTrajectories(
            f"{len(states)} state frames vs {len(controls)} control frames")
    acc = CostAccumulator(controls, grid, w, p)
    for n, y in states.iter_frames():
        acc(n, y)
    return acc.result()


def gradient_frame(y, u, phi_next, w: CostWeights, p: ModelParams, grid: Grid):
    """Gradient density ``F_u(y, u)^T Phi + zeta q(u)`` at one level."""
    u_full = np.broadcast_to(u, (N_CONTROLS,) + grid.shape)
    g = w.zeta * np.array(_control_shift(u_full, w, p), dtype=float)
    if phi_next is not None:
        g += kernels.jac_control_t_apply(y, u_full, phi_next, p)
    return g


def assemble_gradient(forward, adjoint: Trajectory, controls: Trajectory,
                      w: CostWeights, p: ModelParams, grid: Grid) -> Trajectory:
    """Gradient density per frame from a stored adjoint trajectory.

    Level ``n`` pairs the forward frame ``y_n`` with ``Phi_{n+1}``, the adjoint
    value that the forward step out of level ``n`` feeds.  The final level
    has no outgoing step, so only the control penalty contributes there.
    """
    n_frames = len(controls)
    if len(forward) != n_frames or len(adjoint) != n_frames:
        raise MisalignedTrajectories(
            f"frames: forward {len(forward)}, adjoint {len(adjoint)}, controls {n_frames}")
    g = np.empty((n_frames, N_CONTROLS) + grid.shape)
    last = n_frames - 1
    for n, y in forward.iter_frames():
        phi_next = adjoint.frame(n + 1) if n < last else None
        g[n] = gradient_frame(y, controls.frame(n), phi_next, w, p, grid)
    return Trajectory(controls.times, g)


def adjoint_gradient(forward, controls: Trajectory, w: CostWeights, p: ModelParams,
                     grid: Grid, on_adjoint=None) -> Trajectory:
    """Gradient assembled during the backward sweep, without storing ``Phi``.

    ``on_adjoint(n, phi_n)`` is called for every adjoint level if given.
    """
    n_frames = len(controls)
    g = np.empty((n_frames, N_CONTROLS) + grid.shape)
    last = n_frames - 1
    g[last] = gradient_frame(None, controls.frame(last), None, w, p, grid)
    if on_adjoint is not None:
        on_adjoint(last, np.zeros_like(forward.frame(last)))
    for n, y, phi_next, phi_n in backward_sweep(forward, controls, p, w, grid):
        g[n] = gradient_frame(y, controls.frame(n), phi_next, w, p, grid)
        if on_adjoint is not None:
            on_adjoint(n, phi_n)
    return Trajectory(controls.times, g)


def inner_product(a: Trajectory, b: Trajectory, grid: Grid) -> float:
    """Discrete ``L2(Q_T)`` pairing of two control-shaped trajectories."""
    tw = a.times.quadrature_weights()
    per_frame = grid.integrate((np.asarray(a.frames) * np.asarray(b.frames)).sum(axis=1))
    return float(np.dot(tw, per_frame))


def relative_cost_reduction(j_uncontrolled: float, j_optimal: float) -> float:
    if not j_uncontrolled > 0:
        raise DomainError(f"uncontrolled cost must be > 0, got {j_uncontrolled}")
    return (j_uncontrolled - j_optimal) / j_uncontrolled


def stationarity_residual(u: Trajectory, g: Trajectory, p: ModelParams, grid: Grid) -> float:
    """``|| u - P_box(u - g) ||`` in discrete ``L2(Q_T)``; zero at a KKT point."""
    if len(u) != len(g):
        raise MisalignedTrajectories(f"{len(u)} control frames vs {len(g)} gradient frames")
    shape = (1, N_CONTROLS) + (1,) * grid.dim
    lo = p.lower.reshape(shape)
    hi = p.upper.reshape(shape)
    r = u.frames - np.clip(u.frames - g.frames, lo, hi)
    rt = Trajectory(u.times, r)
    return float(np.sqrt(max(inner_product(rt, rt, grid), 0.0)))


__all__ = [
    "CostBreakdown", "CostAccumulator", "evaluate_cost", "frame_integrals",
    "gradient_frame", "assemble_gradient", "adjoint_gradient", "inner_product",
    "relative_cost_reduction", "stationarity_residual",
]
