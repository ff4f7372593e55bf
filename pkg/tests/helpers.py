"""Shared helpers for the test suite."""
import numpy as np

from ncsir import _pykernels
from ncsir.engine import Trajectory

try:
    from ncsir import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels


def random_controls(problem, rng, smooth=True):
    """Feasible controls strictly inside the box, smooth in time when asked."""
    p, grid, times = problem.params, problem.grid, problem.times
    lo, hi = p.lower, p.upper
    shape = (times.n_steps + 1, 3) + grid.shape
    if smooth:
        t = times.times[:, None, None, None] / times.t_final
        phase = rng.random((1, 3) + grid.shape) * 2 * np.pi
        base = 0.5 + 0.3 * np.sin(2 * np.pi * t + phase)
    else:
        base = 0.2 + 0.6 * rng.random(shape)
    frames = lo[None, :, None, None] + base * (hi - lo)[None, :, None, None]
    return Trajectory(times, np.broadcast_to(frames, shape).copy())


def random_direction(problem, rng):
    """Bounded direction, smooth in time and space."""
    grid, times = problem.grid, problem.times
    x, y = grid.coords()
    t = times.times[:, None, None, None] / times.t_final
    a = rng.standard_normal((1, 3, 1, 1))
    k = rng.integers(1, 3, size=(1, 3, 1, 1))
    h = a * np.cos(np.pi * k * t) * np.exp(-(x * x + y * y) / 8.0)[None, None]
    return Trajectory(times, h)


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    """Record one acceptance line; conftest prints them all at the end of the run."""
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok
