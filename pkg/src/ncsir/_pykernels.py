"""Pure numpy implementations of the hot kernels.

Layout conventions shared with the compiled module: point-wise kernels take
``(c, M)`` arrays (component axis first, cells flattened); grid kernels take
``(k, nx, ny)`` stacks, with 1-D problems passed as ``ny == 1``.
"""
import numpy as np

from . import model


def euler_predict(y, u, b, dt, p):
    """``y + dt * F(y, u)``."""
    return y + dt * model.reaction_rhs(y, u, b, p)


def jac_state_apply(y, u, z, p):
    return np.einsum("ij...,j...->i...", model.reaction_jacobian_state(y, u, p), z)


def jac_state_t_apply(y, u, phi, p):
    return np.einsum("ij...,i...->j...", model.reaction_jacobian_state(y, u, p), phi)


def jac_control_apply(y, u, h, p):
    return np.einsum("ik...,k...->i...", model.reaction_jacobian_control(y, u, p), h)


def jac_control_t_apply(y, u, phi, p):
    return np.einsum("ik...,i...->k...", model.reaction_jacobian_control(y, u, p), phi)


def laplacian(f, dx, dy):
    """Cell-centred 5-point Laplacian with mirror ghost cells on a ``(k, nx, ny)`` stack."""
    fp = np.pad(f, ((0, 0), (1, 1), (1, 1)), mode="edge")
    c = fp[:, 1:-1, 1:-1]
    return ((fp[:, :-2, 1:-1] - 2.0 * c + fp[:, 2:, 1:-1]) / (dx * dx)
            + (fp[:, 1:-1, :-2] - 2.0 * c + fp[:, 1:-1, 2:]) / (dy * dy))


def helmholtz_cg(rhs, kappas, dx, dy, tol, maxiter):
    """Solve ``(I - kappa_k L) x_k = rhs_k`` for every slice of the stack.

    Unpreconditioned CG started from ``x = rhs``.  Returns the solution,
    the per-slice iteration counts and the final relative residuals.
    """
    rhs = np.asarray(rhs, dtype=float)
    k = rhs.shape[0]
    kap = np.asarray(kappas, dtype=float).reshape(k, 1, 1)
    x = rhs.copy()
    iters = np.zeros(k, dtype=np.int64)
    bnorm = np.sqrt(np.einsum("kij,kij->k", rhs, rhs))
    relres = np.zeros(k)

    def apply(v):
        return v - kap * laplacian(v, dx, dy)

    r = rhs - apply(x)
    rr = np.einsum("kij,kij->k", r, r)
    thresh = (tol * bnorm) ** 2
    active = (kap.ravel() != 0.0) & (bnorm > 0.0) & (rr > thresh)
    p = r.copy()
    for it in range(1, maxiter + 1):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        pa = p[idx]
        ap = pa - kap[idx] * laplacian(pa, dx, dy)
        alpha = rr[idx] / np.einsum("kij,kij->k", pa, ap)
        x[idx] += alpha[:, None, None] * pa
        r[idx] -= alpha[:, None, None] * ap
        rr_new = np.einsum("kij,kij->k", r[idx], r[idx])
        iters[idx] = it
        done = rr_new <= thresh[idx]
        beta = rr_new / rr[idx]
        p[idx] = r[idx] + beta[:, None, None] * pa
        rr[idx] = rr_new
        active[idx[done]] = False
    nz = bnorm > 0
    relres[nz] = np.sqrt(rr[nz]) / bnorm[nz]
    return x, iters, relres
