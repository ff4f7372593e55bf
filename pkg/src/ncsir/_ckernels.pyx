# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; drop-in replacements for ``ncsir._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef struct Rates:
    double beta
    double gamma
    double delta
    double xi
    double mu_bar


cdef Rates _rates(p):
    cdef Rates r
    r.beta = p.beta
    r.gamma = p.gamma
    r.delta = p.delta
    r.xi = p.xi
    r.mu_bar = p.mu_bar
    return r


def _as_cells(a, int rows):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return a.reshape(rows, -1)


def euler_predict(y, u, b, double dt, p):
    shape = np.shape(y)
    cdef const double[:, ::1] Y = _as_cells(y, 6)
    cdef Py_ssize_t m = Y.shape[1]
    cdef const double[:, ::1] U = _as_cells(np.broadcast_to(u, (3,) + shape[1:]), 3)
    cdef const double[::1] B = np.ascontiguousarray(np.broadcast_to(b, shape[1:]), dtype=np.float64).reshape(m)
    out = np.empty((6, m))
    cdef double[:, ::1] O = out
    cdef Rates r = _rates(p)
    cdef Py_ssize_t c
    cdef double s, i, rr, ss, is_, rs, a, im, ns, mm, nu, ic, inn, d = r.delta
    for c in range(m):
        s = Y[0, c]; i = Y[1, c]; rr = Y[2, c]
        ss = Y[3, c]; is_ = Y[4, c]; rs = Y[5, c]
        a = 1.0 - U[0, c]
        mm = r.mu_bar - U[1, c]
        nu = U[2, c]
        im = a * i + is_
        ns = ss + is_ + rs
        ic = r.beta * a * s * im
        inn = r.beta * ss * im
        O[0, c] = s + dt * (r.xi * B[c] - ic - mm * s * ns + nu * ss - d * s)
        O[1, c] = i + dt * (ic - r.gamma * i - mm * i * ns + nu * is_ - d * i)
        O[2, c] = rr + dt * (r.gamma * i - mm * rr * ns + nu * rs - d * rr)
        O[3, c] = ss + dt * ((1.0 - r.xi) * B[c] - inn + mm * s * ns - nu * ss - d * ss)
        O[4, c] = is_ + dt * (inn - r.gamma * is_ + mm * i * ns - nu * is_ - d * is_)
        O[5, c] = rs + dt * (r.gamma * is_ + mm * rr * ns - nu * rs - d * rs)
    return out.reshape(shape)


def jac_state_apply(y, u, z, p):
    shape = np.shape(y)
    cdef const double[:, ::1] Y = _as_cells(y, 6)
    cdef Py_ssize_t m = Y.shape[1]
    cdef const double[:, ::1] U = _as_cells(np.broadcast_to(u, (3,) + shape[1:]), 3)
    cdef const double[:, ::1] Z = _as_cells(z, 6)
    out = np.empty((6, m))
    cdef double[:, ::1] O = out
    cdef Rates r = _rates(p)
    cdef Py_ssize_t c
    cdef double s, i, rr, ss, a, im, ns, mm, nu, g = r.gamma, d = r.delta, be = r.beta
    cdef double z0, z1, z2, z3, z4, z5, zn
    for c in range(m):
        s = Y[0, c]; i = Y[1, c]; rr = Y[2, c]; ss = Y[3, c]
        a = 1.0 - U[0, c]
        mm = r.mu_bar - U[1, c]
        nu = U[2, c]
        im = a * i + Y[4, c]
        ns = ss + Y[4, c] + Y[5, c]
        z0 = Z[0, c]; z1 = Z[1, c]; z2 = Z[2, c]
        z3 = Z[3, c]; z4 = Z[4, c]; z5 = Z[5, c]
        zn = z3 + z4 + z5
        O[0, c] = (-be * a * im - mm * ns - d) * z0 - be * a * a * s * z1 \
            + nu * z3 - mm * s * zn - be * a * s * z4
        O[1, c] = be * a * im * z0 + (be * a * a * s - g - mm * ns - d) * z1 \
            - mm * i * zn + nu * z4 + be * a * s * z4
        O[2, c] = g * z1 + (-mm * ns - d) * z2 - mm * rr * zn + nu * z5
        O[3, c] = mm * ns * z0 - be * a * ss * z1 + mm * s * zn \
            + (-be * im - nu - d) * z3 - be * ss * z4
        O[4, c] = (be * a * ss + mm * ns) * z1 + be * im * z3 + mm * i * zn \
            + (be * ss - g - nu - d) * z4
        O[5, c] = mm * ns * z2 + mm * rr * zn + g * z4 + (-nu - d) * z5
    return out.reshape(shape)


def jac_state_t_apply(y, u, phi, p):
    shape = np.shape(y)
    cdef const double[:, ::1] Y = _as_cells(y, 6)
    cdef Py_ssize_t m = Y.shape[1]
    cdef const double[:, ::1] U = _as_cells(np.broadcast_to(u, (3,) + shape[1:]), 3)
    cdef const double[:, ::1] P = _as_cells(phi, 6)
    out = np.empty((6, m))
    cdef double[:, ::1] O = out
    cdef Rates r = _rates(p)
    cdef Py_ssize_t c
    cdef double s, i, rr, ss, a, im, ns, mm, nu, g = r.gamma, d = r.delta, be = r.beta
    cdef double p0, p1, p2, p3, p4, p5, wn
    for c in range(m):
        s = Y[0, c]; i = Y[1, c]; rr = Y[2, c]; ss = Y[3, c]
        a = 1.0 - U[0, c]
        mm = r.mu_bar - U[1, c]
        nu = U[2, c]
        im = a * i + Y[4, c]
        ns = ss + Y[4, c] + Y[5, c]
        p0 = P[0, c]; p1 = P[1, c]; p2 = P[2, c]
        p3 = P[3, c]; p4 = P[4, c]; p5 = P[5, c]
        # mu-transfer terms feed every N* column identically
        wn = mm * (s * (p3 - p0) + i * (p4 - p1) + rr * (p5 - p2))
        O[0, c] = be * a * im * (p1 - p0) + mm * ns * (p3 - p0) - d * p0
        O[1, c] = be * a * a * s * (p1 - p0) + be * a * ss * (p4 - p3) \
            + g * (p2 - p1) + mm * ns * (p4 - p1) - d * p1
        O[2, c] = mm * ns * (p5 - p2) - d * p2
        O[3, c] = be * im * (p4 - p3) + nu * (p0 - p3) + wn - d * p3
        O[4, c] = be * a * s * (p1 - p0) + be * ss * (p4 - p3) \
            + nu * (p1 - p4) + g * (p5 - p4) + wn - d * p4
        O[5, c] = nu * (p2 - p5) + wn - d * p5
    return out.reshape(shape)


def jac_control_apply(y, u, h, p):
    shape = np.shape(y)
    cdef const double[:, ::1] Y = _as_cells(y, 6)
    cdef Py_ssize_t m = Y.shape[1]
    cdef const double[:, ::1] U = _as_cells(np.broadcast_to(u, (3,) + shape[1:]), 3)
    cdef const double[:, ::1] H = _as_cells(h, 3)
    out = np.empty((6, m))
    cdef double[:, ::1] O = out
    cdef Rates r = _rates(p)
    cdef Py_ssize_t c
    cdef double s, i, rr, ss, is_, rs, a, im, ns, da_c, da_n, tc, tn
    for c in range(m):
        s = Y[0, c]; i = Y[1, c]; rr = Y[2, c]
        ss = Y[3, c]; is_ = Y[4, c]; rs = Y[5, c]
        a = 1.0 - U[0, c]
        im = a * i + is_
        ns = ss + is_ + rs
        da_c = r.beta * s * (im + a * i) * H[0, c]
        da_n = r.beta * ss * i * H[0, c]
        tc = ns * H[1, c]
        tn = H[2, c]
        O[0, c] = da_c + s * tc + ss * tn
        O[1, c] = -da_c + i * tc + is_ * tn
        O[2, c] = rr * tc + rs * tn
        O[3, c] = da_n - s * tc - ss * tn
        O[4, c] = -da_n - i * tc - is_ * tn
        O[5, c] = -rr * tc - rs * tn
    return out.reshape(shape)


def jac_control_t_apply(y, u, phi, p):
    shape = np.shape(y)
    cdef const double[:, ::1] Y = _as_cells(y, 6)
    cdef Py_ssize_t m = Y.shape[1]
    cdef const double[:, ::1] U = _as_cells(np.broadcast_to(u, (3,) + shape[1:]), 3)
    cdef const double[:, ::1] P = _as_cells(phi, 6)
    out = np.empty((3, m))
    cdef double[:, ::1] O = out
    cdef Rates r = _rates(p)
    cdef Py_ssize_t c
    cdef double s, i, rr, ss, is_, rs, a, im, ns
    for c in range(m):
        s = Y[0, c]; i = Y[1, c]; rr = Y[2, c]
        ss = Y[3, c]; is_ = Y[4, c]; rs = Y[5, c]
        a = 1.0 - U[0, c]
        im = a * i + is_
        ns = ss + is_ + rs
        O[0, c] = r.beta * (s * (im + a * i) * (P[0, c] - P[1, c])
                            + ss * i * (P[3, c] - P[4, c]))
        O[1, c] = ns * (s * (P[0, c] - P[3, c]) + i * (P[1, c] - P[4, c])
                        + rr * (P[2, c] - P[5, c]))
        O[2, c] = ss * (P[0, c] - P[3, c]) + is_ * (P[1, c] - P[4, c]) \
            + rs * (P[2, c] - P[5, c])
    return out.reshape((3,) + shape[1:])


cdef void _lap(const double[:, ::1] f, double[:, ::1] out, double idx2, double idy2) noexcept nogil:
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], i, j, im, ip, jm, jp
    cdef double c
    for i in range(nx):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < nx - 1 else nx - 1
        for j in range(ny):
            jm = j - 1 if j > 0 else 0
            jp = j + 1 if j < ny - 1 else ny - 1
            c = f[i, j]
            out[i, j] = (f[im, j] - 2.0 * c + f[ip, j]) * idx2 \
                + (f[i, jm] - 2.0 * c + f[i, jp]) * idy2


def laplacian(f, double dx, double dy):
    f = np.ascontiguousarray(f, dtype=np.float64)
    out = np.empty_like(f)
    cdef const double[:, :, ::1] F = f
    cdef double[:, :, ::1] O = out
    cdef Py_ssize_t k
    for k in range(F.shape[0]):
        _lap(F[k], O[k], 1.0 / (dx * dx), 1.0 / (dy * dy))
    return out


cdef double _dot(const double[:, ::1] a, const double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            acc += a[i, j] * b[i, j]
    return acc


def helmholtz_cg(rhs, kappas, double dx, double dy, double tol, long maxiter):
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t nk = rhs.shape[0], nx = rhs.shape[1], ny = rhs.shape[2]
    cdef const double[::1] kap = np.ascontiguousarray(kappas, dtype=np.float64).reshape(nk)
    x_arr = rhs.copy()
    iters_arr = np.zeros(nk, dtype=np.int64)
    relres_arr = np.zeros(nk)
    cdef double[:, :, ::1] X = x_arr
    cdef const double[:, :, ::1] Bv = rhs
    cdef long long[::1] iters = iters_arr
    cdef double[::1] relres = relres_arr
    cdef double[:, ::1] r = np.empty((nx, ny))
    cdef double[:, ::1] pv = np.empty((nx, ny))
    cdef double[:, ::1] ap = np.empty((nx, ny))
    cdef double idx2 = 1.0 / (dx * dx), idy2 = 1.0 / (dy * dy)
    cdef double bnorm, rr, rr_new, thresh, alpha, beta, kk
    cdef Py_ssize_t k, i, j
    cdef long it
    with nogil:
        for k in range(nk):
            kk = kap[k]
            bnorm = sqrt(_dot(Bv[k], Bv[k]))
            if kk == 0.0 or bnorm == 0.0:
                continue
            # x0 = rhs, so r0 = kappa * L rhs
            _lap(X[k], ap, idx2, idy2)
            for i in range(nx):
                for j in range(ny):
                    r[i, j] = kk * ap[i, j]
                    pv[i, j] = r[i, j]
            rr = _dot(r, r)
            thresh = (tol * bnorm) * (tol * bnorm)
            it = 0
            while rr > thresh and it < maxiter:
                it += 1
                _lap(pv, ap, idx2, idy2)
                for i in range(nx):
                    for j in range(ny):
                        ap[i, j] = pv[i, j] - kk * ap[i, j]
                alpha = rr / _dot(pv, ap)
                for i in range(nx):
                    for j in range(ny):
                        X[k, i, j] += alpha * pv[i, j]
                        r[i, j] -= alpha * ap[i, j]
                rr_new = _dot(r, r)
                beta = rr_new / rr
                for i in range(nx):
                    for j in range(ny):
                        pv[i, j] = r[i, j] + beta * pv[i, j]
                rr = rr_new
            iters[k] = it
            relres[k] = sqrt(rr) / bnorm
    return x_arr, iters_arr, relres_arr
