"""Pointwise reaction terms of the controlled SIR model with noncompliance.

State ordering is ``y = (S, I, R, S*, I*, R*)`` and control ordering is
``u = (alpha, mu, nu)``.  Every function here broadcasts over trailing axes,
so the same code evaluates a single grid point (``y.shape == (6,)``) or a
whole field (``y.shape == (6, nx, ny)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import StateNegative, ValidationError

N_SPECIES = 6
N_CONTROLS = 3
S, I, R, S_STAR, I_STAR, R_STAR = range(N_SPECIES)
ALPHA, MU, NU = range(N_CONTROLS)

SPECIES_NAMES = ("s", "i", "r", "s_star", "i_star", "r_star")
CONTROL_NAMES = ("alpha", "mu", "nu")

NEGATIVITY_TOL = 1e-12


class PointState(NamedTuple):
    s: float
    i: float
    r: float
    s_star: float
    i_star: float
    r_star: float


class PointControl(NamedTuple):
    alpha: float
    mu: float
    nu: float


@dataclass(frozen=True)
class ModelParams:
    """Rates, bounds and diffusion coefficients of the model.

    ``birth_rate`` is either a scalar or an array over the spatial grid.
    ``diffusion`` holds one coefficient per species.
    """

    beta: float = 5.0
    gamma: float = 1.0
    delta: float = 0.001
    xi: float = 1.0
    mu_bar: float = 1.0
    nu_bar: float = 1.0
    alpha_lower: float = 0.1
    diffusion: tuple = (0.1,) * N_SPECIES
    birth_rate: object = field(default=0.0, compare=False)

    def __post_init__(self):
        for name in ("beta", "gamma", "delta", "mu_bar", "nu_bar"):
            if not getattr(self, name) > 0:
                raise ValidationError(name, f"{name} > 0")
        if not 0.0 <= self.xi <= 1.0:
            raise ValidationError("xi", "0 <= xi <= 1")
        if not 0.0 < self.alpha_lower <= 1.0:
            raise ValidationError("alpha_lower", "0 < alpha_lower <= 1")
        d = tuple(float(v) for v in np.broadcast_to(self.diffusion, (N_SPECIES,)))
        if any(not v > 0 for v in d):
            raise ValidationError("diffusion", "all coefficients > 0")
        object.__setattr__(self, "diffusion", d)
        b = np.asarray(self.birth_rate, dtype=float)
        if not np.all(np.isfinite(b)) or np.any(b < 0):
            raise ValidationError("birth_rate", "finite and >= 0 everywhere")
        object.__setattr__(self, "birth_rate", b)

    @property
    def lower(self):
        """Lower control bounds ``(alpha_lower, 0, 0)``."""
        return np.array([self.alpha_lower, 0.0, 0.0])

    @property
    def upper(self):
        """Upper control bounds ``(1, mu_bar, nu_bar)``."""
        return np.array([1.0, self.mu_bar, self.nu_bar])

    def uncontrolled(self):
        """Control values of the uncontrolled reference run."""
        return np.array([self.alpha_lower, 0.0, 0.0])


def mixing_infectious(y, alpha):
    """Actively mixing infectious density ``(1 - alpha) I + I*``."""
    y = np.asarray(y, dtype=float)
    return (1.0 - alpha) * y[I] + y[I_STAR]


def reaction_rhs(y, u, b, p: ModelParams):
    """Reaction part ``F(y, u)`` of the controlled system."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    s, i, r, ss, is_, rs = y
    alpha, mu, nu = u
    a = 1.0 - alpha
    im = a * i + is_
    n_star = ss + is_ + rs
    m = p.mu_bar - mu
    d = p.delta

    infect_c = p.beta * a * s * im
    infect_n = p.beta * ss * im
    out = np.empty((N_SPECIES,) + np.broadcast_shapes(s.shape, alpha.shape, np.shape(b)))
    out[S] = p.xi * b - infect_c - m * s * n_star + nu * ss - d * s
    out[I] = infect_c - p.gamma * i - m * i * n_star + nu * is_ - d * i
    out[R] = p.gamma * i - m * r * n_star + nu * rs - d * r
    out[S_STAR] = (1.0 - p.xi) * b - infect_n + m * s * n_star - nu * ss - d * ss
    out[I_STAR] = infect_n - p.gamma * is_ + m * i * n_star - nu * is_ - d * is_
    out[R_STAR] = p.gamma * is_ + m * r * n_star - nu * rs - d * rs
    return out


def reaction_jacobian_state(y, u, p: ModelParams):
    """State Jacobian ``J[i, j] = d f_i / d y_j``, shape ``(6, 6, ...)``.

    With ``a = 1 - alpha``, ``m = mu_bar - mu``, ``IM = a I + I*`` and
    ``N* = S* + I* + R*`` (so ``dIM/dI = a``, ``dIM/dI* = 1``):

    * row S:  [-b a IM - m N* - d, -b a^2 S, 0, -m S + nu, -b a S - m S, -m S]
    * row I:  [b a IM, b a^2 S - g - m N* - d, 0, -m I, b a S - m I + nu, -m I]
    * row R:  [0, g, -m N* - d, -m R, -m R, -m R + nu]
    * row S*: [m N*, -b a S*, 0, -b IM + m S - nu - d, -b S* + m S, m S]
    * row I*: [0, b a S* + m N*, 0, b IM + m I, b S* - g + m I - nu - d, m I]
    * row R*: [0, 0, m N*, m R, g + m R, m R - nu - d]

    Every column sums to ``-d``.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    s, i, r, ss, is_, rs = y
    alpha, mu, nu = u
    a = 1.0 - alpha
    im = a * i + is_
    n_star = ss + is_ + rs
    m = p.mu_bar - mu
    b_, g, d = p.beta, p.gamma, p.delta
    shape = np.broadcast_shapes(np.shape(s), np.shape(alpha))
    z = np.zeros(shape)

    def full(v):
        return np.broadcast_to(v, shape)

    rows = [
        [-b_ * a * im - m * n_star - d, -b_ * a * a * s, z, -m * s + nu,
         -b_ * a * s - m * s, -m * s],
        [b_ * a * im, b_ * a * a * s - g - m * n_star - d, z, -m * i,
         b_ * a * s - m * i + nu, -m * i],
        [z, z + g, -m * n_star - d, -m * r, -m * r, -m * r + nu],
        [m * n_star, -b_ * a * ss, z, -b_ * im + m * s - nu - d,
         -b_ * ss + m * s, m * s],
        [z, b_ * a * ss + m * n_star, z, b_ * im + m * i,
         b_ * ss - g + m * i - nu - d, m * i],
        [z, z, m * n_star, m * r, g + m * r, m * r - nu - d],
    ]
    return np.array([[full(v) for v in row] for row in rows])


def reaction_jacobian_control(y, u, p: ModelParams):
    """Control Jacobian ``d f_i / d u_k``, shape ``(6, 3, ...)``.

    alpha enters both infection terms through ``IM`` as well as the
    ``(1 - alpha)`` factor of the compliant term:
    ``d/dalpha [b a S IM] = -b S (IM + a I)`` and
    ``d/dalpha [b S* IM] = -b S* I``.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    s, i, r, ss, is_, rs = y
    alpha = u[ALPHA]
    a = 1.0 - alpha
    im = a * i + is_
    n_star = ss + is_ + rs
    shape = np.broadcast_shapes(np.shape(s), np.shape(alpha))
    z = np.zeros(shape)

    def full(v):
        return np.broadcast_to(v, shape)

    d_alpha_c = p.beta * s * (im + a * i)
    d_alpha_n = p.beta * ss * i
    rows = [
        [d_alpha_c, s * n_star, ss],
        [-d_alpha_c, i * n_star, is_],
        [z, r * n_star, rs],
        [d_alpha_n, -s * n_star, -ss],
        [-d_alpha_n, -i * n_star, -is_],
        [z, -r * n_star, -rs],
    ]
    return np.array([[full(v) for v in row] for row in rows])


def check_nonnegative(y, tol=NEGATIVITY_TOL, time_index=None):
    """Raise :class:`StateNegative` if any density is below ``-tol``."""
    low = float(np.min(y))
    if low < -tol:
        raise StateNegative(f"state density {low:.3e} below -{tol:g}", time_index)
    return low
