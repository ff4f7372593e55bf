"""Backward-in-time adjoint solve.

The adjoint ``Phi`` satisfies

    -Phi_t - D L Phi = J_F(y, u)^T Phi + s,    Phi(T) = 0,

with zero-flux boundaries, where ``s`` is the derivative of the running
state cost.  In reversed time it is stepped with the same IMEX family as
the forward solve: explicit coupling, implicit diffusion.  The step from
level ``n + 1`` down to ``n`` linearizes about forward frame ``n``, the frame
that the forward step ``n -> n + 1`` started from, so the discrete adjoint
tracks the transpose of the discrete forward step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .engine import CG_TOL, Grid, Trajectory, diffuse_implicit
from .errors import AdjointBlowup, MisalignedTrajectories, ValidationError
from .model import N_SPECIES, ModelParams

BLOWUP_BOUND = 1e8


@dataclass(frozen=True)
class CostWeights:
    """Weights on total infections, total noncompliance and control effort.

    ``control_cost_offset`` switches the control penalty on alpha from
    ``alpha^2`` to ``(alpha - alpha_lower)^2``.
    """

    lambda1: float = 3.0
    lambda2: float = 0.02
    zeta: float = 0.2
    control_cost_offset: bool = False

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "zeta"):
            if not getattr(self, name) >= 0:
                raise ValidationError(name, f"{name} >= 0")

    def scaled(self, factor: float) -> "CostWeights":
        return CostWeights(self.lambda1 * factor, self.lambda2 * factor,
                           self.zeta * factor, self.control_cost_offset)


def adjoint_source(w: CostWeights) -> np.ndarray:
    """Gradient of the running state cost with respect to ``y``."""
    return np.array([0.0, w.lambda1, 0.0, w.lambda2, w.lambda1 + w.lambda2, w.lambda2])


def adjoint_step(phi_next, y, u, dt: float, p: ModelParams, grid: Grid, source,
                 bound=BLOWUP_BOUND, time_index=None, tol=CG_TOL) -> np.ndarray:
    """One reversed-time step ``Phi^{n+1} -> Phi^n``.

    ``y`` and ``u`` are the forward frames at level ``n``; ``source`` is a
    6-vector or a ``(6, *grid.shape)`` array.
    """
    src = np.asarray(source, dtype=float)
    if src.ndim == 1:
        src = src.reshape((N_SPECIES,) + (1,) * grid.dim)
    rhs = phi_next + dt * (kernels.jac_state_t_apply(y, u, phi_next, p) + src)
    phi = diffuse_implicit(rhs, dt * np.asarray(p.diffusion), grid, tol,
                           time_index=time_index)
    peak = float(np.max(np.abs(phi)))
    if not peak <= bound:
        raise AdjointBlowup(f"|Phi| reached {peak:.3e} (bound {bound:g})", time_index)
    return phi


def backward_sweep(forward, controls: Trajectory, p: ModelParams, w: CostWeights,
                   grid: Grid, source: Callable | None = None, bound=BLOWUP_BOUND):
    """Yield ``(n, y_n, phi_next, phi_n)`` for ``n = N-1, ..., 0``.

    ``phi_next`` is the adjoint at level ``n + 1``; the first item has
    ``phi_next`` equal to the zero terminal value.  ``forward`` may be a full
    or checkpointed trajectory; it is traversed once in reverse.
    ``source(n, y_n)``, when given, replaces the constant cost derivative.
    """
    times = controls.times
    if len(forward) != len(controls) or len(forward) != times.n_steps + 1:
        raise MisalignedTrajectories(
            f"forward has {len(forward)} frames, controls {len(controls)}")
    dt = times.dt
    const_src = adjoint_source(w)
    phi = np.zeros((N_SPECIES,) + grid.shape)
    for n, y in forward.iter_reversed():
        if n == times.n_steps:
            continue
        src = const_src if source is None else source(n, y)
        phi_n = adjoint_step(phi, y, controls.frame(n), dt, p, grid, src,
                             bound=bound, time_index=n)
        yield n, y, phi, phi_n
        phi = phi_n


def simulate_adjoint(forward, controls: Trajectory, p: ModelParams, w: CostWeights,
                     grid: Grid, source: Callable | None = None,
                     bound=BLOWUP_BOUND) -> Trajectory:
    """Full adjoint trajectory; frame ``n_steps`` is exactly zero."""
    times = controls.times
    frames = np.zeros((times.n_steps + 1, N_SPECIES) + grid.shape)
    for n, _, _, phi_n in backward_sweep(forward, controls, p, w, grid, source, bound):
        frames[n] = phi_n
    return Trajectory(times, frames)
