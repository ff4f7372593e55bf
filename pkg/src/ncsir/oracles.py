"""Independent checks on the forward solver and the adjoint gradient.

* ``ode_reduction_simulate``: classical RK4 on the 6-dimensional ODE a
  spatially homogeneous problem reduces to.
* ``fd_directional_derivative``: central differences of the cost.
* ``linearized_sensitivity``: the tangent-linear PDE, giving ``S'(u) h``.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .adjoint import adjoint_source
from .engine import Trajectory, diffuse_implicit
from .errors import InfeasiblePerturbation
from .model import N_CONTROLS, N_SPECIES, ModelParams, reaction_rhs
from .objective import inner_product
from .problem import Problem

FD_EPS = 1e-4


def ode_reduction_simulate(y0, u, b, p: ModelParams, times, substeps=10) -> np.ndarray:
    """RK4 at ``dt / substeps``; returns the state at every coarse time level."""
    y = np.array(y0, dtype=float)
    u = np.asarray(u, dtype=float)
    h = times.dt / substeps
    out = np.empty((times.n_steps + 1, N_SPECIES))
    out[0] = y

    def f(v):
        return reaction_rhs(v, u, b, p)

    for n in range(times.n_steps):
        for _ in range(substeps):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[n + 1] = y
    return out


def _check_box(u, p: ModelParams, what):
    shape = (1, N_CONTROLS) + (1,) * (np.ndim(u) - 2)
    lo = p.lower.reshape(shape)
    hi = p.upper.reshape(shape)
    if np.any(u < lo) or np.any(u > hi):
        raise InfeasiblePerturbation(f"{what} leaves the admissible box")


def fd_directional_derivative(u: Trajectory, h: Trajectory, eps: float, problem: Problem) -> float:
    """``(J(u + eps h) - J(u - eps h)) / (2 eps)`` with two forward solves."""
    plus = np.asarray(u.frames) + eps * np.asarray(h.frames)
    minus = np.asarray(u.frames) - eps * np.asarray(h.frames)
    _check_box(plus, problem.params, "u + eps h")
    _check_box(minus, problem.params, "u - eps h")
    j_plus = problem.cost(Trajectory(u.times, plus)).j_total
    j_minus = problem.cost(Trajectory(u.times, minus)).j_total
    return (j_plus - j_minus) / (2.0 * eps)


def linearized_sensitivity(u: Trajectory, h: Trajectory, problem: Problem,
                           forward=None) -> Trajectory:
    """Directional state derivative ``z = S'(u) h``.

    Solves ``z_t - D L z = F_y z + F_u h`` from ``z(0) = 0`` with the forward
    IMEX scheme, linearized about the forward frames at ``u``.
    """
    grid, times, p = problem.grid, problem.times, problem.params
    if forward is None:
        forward = problem.simulate(u)
    dt = times.dt
    kap = dt * np.asarray(p.diffusion)
    frames = np.zeros((times.n_steps + 1, N_SPECIES) + grid.shape)
    z = frames[0]
    for n, y in forward.iter_frames():
        if n == times.n_steps:
            break
        un = u.frame(n)
        rhs = z + dt * (kernels.jac_state_apply(y, un, z, p)
                        + kernels.jac_control_apply(y, un, h.frame(n), p))
        z = diffuse_implicit(rhs, kap, grid, time_index=n + 1)
        frames[n + 1] = z
    return Trajectory(times, frames)


def sensitivity_directional_derivative(u: Trajectory, h: Trajectory, problem: Problem,
                                       sensitivity: Trajectory | None = None) -> float:
    """``dJ(u) h`` by the chain rule through the state sensitivity."""
    if sensitivity is None:
        sensitivity = linearized_sensitivity(u, h, problem)
    grid, w = problem.grid, problem.weights
    a = adjoint_source(w).reshape((1, N_SPECIES) + (1,) * grid.dim)
    tw = problem.times.quadrature_weights()
    state_part = float(np.dot(tw, grid.integrate((a * sensitivity.frames).sum(axis=1))))
    q = np.array(u.frames, dtype=float)
    if w.control_cost_offset:
        q[:, 0] -= problem.params.alpha_lower
    control_part = w.zeta * inner_product(Trajectory(u.times, q), h, grid)
    return state_part + control_part
