"""Compare the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--nx 64] [--repeat 20]

Times each kernel on baseline-like data, one full IMEX step, and checks
that the two backends agree.
"""
import argparse
import timeit

import numpy as np

from ncsir import _pykernels
from ncsir.engine import Grid, baseline_initial_state, gaussian
from ncsir.model import ModelParams

try:
    from ncsir import _ckernels
except ImportError:
    _ckernels = None


def cases(nx, seed=0):
    grid = Grid(nx=nx, ny=nx)
    p = ModelParams(birth_rate=gaussian(grid, 0.1))
    rng = np.random.default_rng(seed)
    y = baseline_initial_state(grid)
    u = rng.random((3,) + grid.shape) * (p.upper - p.lower)[:, None, None] + p.lower[:, None, None]
    v = rng.standard_normal((6,) + grid.shape)
    h = rng.standard_normal((3,) + grid.shape)
    dt = 0.05
    kap = dt * np.asarray(p.diffusion)
    rhs = _pykernels.euler_predict(y, u, p.birth_rate, dt, p)
    maxiter = 10 * nx * nx
    return {
        "euler_predict": lambda k: k.euler_predict(y, u, p.birth_rate, dt, p),
        "jac_state_apply": lambda k: k.jac_state_apply(y, u, v, p),
        "jac_state_t_apply": lambda k: k.jac_state_t_apply(y, u, v, p),
        "jac_control_apply": lambda k: k.jac_control_apply(y, u, h, p),
        "jac_control_t_apply": lambda k: k.jac_control_t_apply(y, u, v, p),
        "laplacian": lambda k: k.laplacian(y, grid.dx, grid.dy),
        "helmholtz_cg": lambda k: k.helmholtz_cg(rhs, kap, grid.dx, grid.dy, 1e-10, maxiter)[0],
        "imex_step": lambda k: k.helmholtz_cg(k.euler_predict(y, u, p.birth_rate, dt, p), kap,
                                              grid.dx, grid.dy, 1e-10, maxiter)[0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the numpy fallback is available")
    print(f"nx={args.nx}, best of {args.repeat} calls (ms)")
    print(f"{'kernel':22s}{'numpy':>10s}{'compiled':>10s}{'speedup':>9s}{'max diff':>11s}")
    for name, fn in cases(args.nx).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:22s}{t_py:10.3f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        diff = float(np.max(np.abs(np.asarray(fn(_pykernels)) - np.asarray(fn(_ckernels)))))
        print(f"{name:22s}{t_py:10.3f}{t_c:10.3f}{t_py / t_c:8.1f}x{diff:11.1e}")


if __name__ == "__main__":
    main()
