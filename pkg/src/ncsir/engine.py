"""Finite-difference discretization and IMEX time stepping.

Fields live on a uniform cell-centred grid.  Zero-flux boundaries are
imposed with mirror ghost cells, which makes the discrete Laplacian sum to
zero over the domain, so diffusion conserves mass exactly.  A time step
treats the reaction terms explicitly and diffusion implicitly:

    (I - dt d_i L) y_i^{n+1} = y_i^n + dt F_i(y^n, u^n)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .errors import NonConvergence, SolverError, StateNegative
from .model import N_CONTROLS, N_SPECIES, NEGATIVITY_TOL, ModelParams

CG_TOL = 1e-10
DEFAULT_CHECKPOINT_STRIDE = 50


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on ``[x_min, x_max] x [y_min, y_max]``.

    For ``dim == 1`` the y-extent is ignored and fields have shape ``(nx,)``.
    """

    nx: int = 64
    ny: int = 64
    x_min: float = -5.0
    x_max: float = 5.0
    y_min: float = -5.0
    y_max: float = 5.0
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.nx < 3 or (self.dim == 2 and self.ny < 3):
            raise ValueError("need at least 3 cells per axis")
        if not self.x_max > self.x_min or (self.dim == 2 and not self.y_max > self.y_min):
            raise ValueError("domain bounds must be increasing")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny if self.dim == 2 else 1.0

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny) if self.dim == 2 else (self.nx,)

    @property
    def kernel_shape(self) -> tuple:
        return (self.nx, self.ny) if self.dim == 2 else (self.nx, 1)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def volume(self) -> float:
        return self.cell_area * int(np.prod(self.shape))

    def coords(self):
        """Cell-centre coordinates, one array per axis, each of ``shape``."""
        x = self.x_min + (np.arange(self.nx) + 0.5) * self.dx
        if self.dim == 1:
            return (x,)
        y = self.y_min + (np.arange(self.ny) + 0.5) * self.dy
        return tuple(np.meshgrid(x, y, indexing="ij"))

    def integrate(self, f, axis=None):
        """Midpoint-rule integral of ``f`` over the trailing spatial axes."""
        f = np.asarray(f)
        axes = tuple(range(f.ndim - self.dim, f.ndim))
        return f.sum(axis=axes) * self.cell_area

    def max_cg_iterations(self) -> int:
        return 10 * int(np.prod(self.shape))


@dataclass(frozen=True)
class TimeGrid:
    t_final: float = 200.0
    n_steps: int = 4000

    def __post_init__(self):
        if not self.t_final > 0 or self.n_steps < 1:
            raise ValueError("need t_final > 0 and n_steps >= 1")

    @classmethod
    def from_dt(cls, t_final: float, dt: float) -> "TimeGrid":
        n = int(round(t_final / dt))
        if n < 1 or not math.isclose(n * dt, t_final, rel_tol=1e-9):
            raise ValueError(f"dt={dt} does not divide t_final={t_final}")
        return cls(t_final=float(t_final), n_steps=n)

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n_steps + 1)

    def quadrature_weights(self) -> np.ndarray:
        """Left-endpoint weights: ``dt`` on levels ``0..N-1``, zero on ``N``.

        Level ``n`` carries the interval ``[t_n, t_{n+1})``, the same interval
        over which the explicit reaction step holds ``y_n`` and ``u_n`` fixed.
        """
        w = np.full(self.n_steps + 1, self.dt)
        w[-1] = 0.0
        return w

    def index_of(self, t: float) -> int:
        return int(min(max(round(t / self.dt), 0), self.n_steps))


@dataclass
class Trajectory:
    """Time-indexed frames ``(n_steps + 1, components, *grid.shape)``."""

    times: TimeGrid
    frames: np.ndarray

    def __post_init__(self):
        if self.frames.shape[0] != self.times.n_steps + 1:
            raise ValueError(
                f"{self.frames.shape[0]} frames for {self.times.n_steps} steps")

    def __len__(self):
        return self.frames.shape[0]

    def frame(self, n: int) -> np.ndarray:
        return self.frames[n]

    def iter_frames(self) -> Iterator[tuple]:
        for n in range(len(self)):
            yield n, self.frames[n]

    def iter_reversed(self) -> Iterator[tuple]:
        for n in range(len(self) - 1, -1, -1):
            yield n, self.frames[n]

    def materialize(self) -> "Trajectory":
        return self

    @classmethod
    def constant(cls, value, grid: Grid, times: TimeGrid) -> "Trajectory":
        """Read-only broadcast trajectory; costs no memory per frame."""
        v = np.asarray(value, dtype=float)
        v = v.reshape(v.shape[:1] + (1,) * grid.dim) if v.ndim == 1 else v
        shape = (times.n_steps + 1, v.shape[0]) + grid.shape
        return cls(times, np.broadcast_to(v, shape))


class CheckpointedTrajectory:
    """State trajectory stored every ``stride`` steps and replayed on demand.

    Replays use the same step function as the original run, so every
    recovered frame is bitwise identical to the one first computed.
    """

    def __init__(self, times, grid, params, controls, stride, checkpoints):
        self.times = times
        self.grid = grid
        self.params = params
        self.controls = controls
        self.stride = stride
        self.checkpoints = checkpoints
        self._cache_key = None
        self._cache = None

    def __len__(self):
        return self.times.n_steps + 1

    def _segment(self, k: int) -> np.ndarray:
        if self._cache_key == k:
            return self._cache
        start = k * self.stride
        stop = min(start + self.stride, self.times.n_steps)
        seg = np.empty((stop - start + 1,) + self.checkpoints[k].shape)
        seg[0] = self.checkpoints[k]
        dt = self.times.dt
        for j, n in enumerate(range(start, stop)):
            seg[j + 1] = imex_step(seg[j], self.controls.frame(n), dt, self.params,
                                   self.grid, time_index=n + 1)
        self._cache_key, self._cache = k, seg
        return seg

    def frame(self, n: int) -> np.ndarray:
        k = min(n // self.stride, len(self.checkpoints) - 1)
        return self._segment(k)[n - k * self.stride]

    def iter_frames(self):
        for k in range(len(self.checkpoints)):
            seg = self._segment(k)
            first = 0 if k == 0 else 1
            for j in range(first, seg.shape[0]):
                yield k * self.stride + j, seg[j]

    def iter_reversed(self):
        n_last = self.times.n_steps
        for k in range(len(self.checkpoints) - 1, -1, -1):
            seg = self._segment(k)
            last = seg.shape[0] - 1 if k * self.stride + seg.shape[0] - 1 == n_last else seg.shape[0] - 2
            for j in range(last, -1, -1):
                yield k * self.stride + j, seg[j]

    def materialize(self) -> Trajectory:
        frames = np.empty((len(self),) + self.checkpoints[0].shape)
        for n, f in self.iter_frames():
            frames[n] = f
        return Trajectory(self.times, frames)


def _as_stack(a, grid: Grid):
    return np.asarray(a, dtype=float).reshape((-1,) + grid.kernel_shape)


def laplacian_apply(f, grid: Grid) -> np.ndarray:
    """Discrete zero-flux Laplacian of a single field or a component stack."""
    f = np.asarray(f, dtype=float)
    out = kernels.laplacian(_as_stack(f, grid), grid.dx, grid.dy)
    return out.reshape(f.shape)


def diffuse_implicit(rhs, kappas, grid: Grid, tol=CG_TOL, maxiter=None, time_index=None):
    """Solve ``(I - kappa_k L) v_k = rhs_k`` for a ``(k, *grid.shape)`` stack."""
    rhs = np.asarray(rhs, dtype=float)
    maxiter = grid.max_cg_iterations() if maxiter is None else maxiter
    x, iters, relres = kernels.helmholtz_cg(
        _as_stack(rhs, grid), np.asarray(kappas, dtype=float), grid.dx, grid.dy,
        tol, maxiter)
    if np.any(relres > tol):
        k = int(np.argmax(relres))
        raise NonConvergence(
            f"CG stalled at relative residual {relres[k]:.2e} after {iters[k]} "
            f"iterations (component {k})", time_index)
    return x.reshape(rhs.shape)


def helmholtz_solve(rhs, kappa: float, grid: Grid, tol=CG_TOL, maxiter=None) -> np.ndarray:
    """Solve ``(I - kappa L) v = rhs`` with zero-flux boundaries by CG."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    rhs = np.asarray(rhs, dtype=float)
    return diffuse_implicit(rhs[None], [kappa], grid, tol, maxiter)[0]


def imex_step(y, u, dt: float, p: ModelParams, grid: Grid, tol=CG_TOL,
              time_index=None, neg_tol=NEGATIVITY_TOL) -> np.ndarray:
    """Advance the state one step: explicit reaction, implicit diffusion."""
    rhs = kernels.euler_predict(y, u, p.birth_rate, dt, p)
    y_new = diffuse_implicit(rhs, dt * np.asarray(p.diffusion), grid, tol,
                             time_index=time_index)
    low = float(y_new.min())
    if not math.isfinite(low) or not np.isfinite(y_new.max()):
        raise SolverError("non-finite state", time_index)
    if low < -neg_tol:
        raise StateNegative(f"state density {low:.3e} below -{neg_tol:g}", time_index)
    return y_new


def simulate_forward(y0, controls: Trajectory, p: ModelParams, grid: Grid,
                     times: TimeGrid, checkpoint_stride: int | None = None,
                     on_frame: Callable | None = None):
    """Integrate the controlled system from ``y0`` over ``times``.

    With ``checkpoint_stride=None`` every frame is stored and a
    :class:`Trajectory` is returned; otherwise only every ``stride``-th frame
    is kept and a :class:`CheckpointedTrajectory` is returned.
    ``on_frame(n, y_n)`` sees every frame as it is produced.
    """
    if len(controls) != times.n_steps + 1:
        raise ValueError("controls are not aligned with the time grid")
    y = np.array(y0, dtype=float)
    if y.shape != (N_SPECIES,) + grid.shape:
        raise ValueError(f"initial state has shape {y.shape}")
    if y.min() < -NEGATIVITY_TOL:
        raise StateNegative("negative initial data", 0)
    dt = times.dt
    full = checkpoint_stride is None or checkpoint_stride <= 1
    if full:
        frames = np.empty((times.n_steps + 1,) + y.shape)
        frames[0] = y
    else:
        checkpoints = [y.copy()]
    if on_frame is not None:
        on_frame(0, y)
    for n in range(times.n_steps):
        y = imex_step(y, controls.frame(n), dt, p, grid, time_index=n + 1)
        if full:
            frames[n + 1] = y
        elif (n + 1) % checkpoint_stride == 0 and n + 1 < times.n_steps:
            checkpoints.append(y.copy())
        if on_frame is not None:
            on_frame(n + 1, y)
    if full:
        return Trajectory(times, frames)
    return CheckpointedTrajectory(times, grid, p, controls, checkpoint_stride, checkpoints)


def gaussian(grid: Grid, amplitude=1.0, width=1.0) -> np.ndarray:
    """``amplitude * exp(-|x|^2 / width^2)`` at the cell centres."""
    r2 = sum(c * c for c in grid.coords())
    return amplitude * np.exp(-r2 / (width * width))


def baseline_initial_state(grid: Grid, s_peak=1.0, i_ratio=0.1, s_star_ratio=0.05,
                           i_star_ratio=0.05, width=1.0) -> np.ndarray:
    """Gaussian compliant susceptibles with proportional seeds of the others."""
    s0 = gaussian(grid, s_peak, width)
    y0 = np.zeros((N_SPECIES,) + grid.shape)
    y0[0] = s0
    y0[1] = i_ratio * s0
    y0[3] = s_star_ratio * s0
    y0[4] = i_star_ratio * y0[1]
    return y0


def state_memory_bytes(grid: Grid, times: TimeGrid, components=N_SPECIES) -> int:
    return 8 * components * int(np.prod(grid.shape)) * (times.n_steps + 1)


def auto_stride(grid: Grid, times: TimeGrid, budget_bytes=256 * 2**20):
    """Full storage when it fits in ``budget_bytes``, else the default stride."""
    if state_memory_bytes(grid, times) <= budget_bytes:
        return None
    return DEFAULT_CHECKPOINT_STRIDE


__all__ = [
    "Grid", "TimeGrid", "Trajectory", "CheckpointedTrajectory", "laplacian_apply",
    "helmholtz_solve", "diffuse_implicit", "imex_step", "simulate_forward",
    "gaussian", "baseline_initial_state", "auto_stride", "N_CONTROLS",
]
