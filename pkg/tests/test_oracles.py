import numpy as np
import pytest

from helpers import random_controls, random_direction
from ncsir.engine import Grid, TimeGrid, Trajectory, simulate_forward
from ncsir.errors import InfeasiblePerturbation
from ncsir.model import ModelParams
from ncsir.objective import inner_product
from ncsir.oracles import (fd_directional_derivative, linearized_sensitivity,
                           ode_reduction_simulate, sensitivity_directional_derivative)
from ncsir.problem import baseline_problem


def test_ode_oracle_conserves_mass_law():
    p = ModelParams()
    tg = TimeGrid.from_dt(10, 0.1)
    y0 = np.array([1, 0.1, 0, 0.05, 0.005, 0])
    ys = ode_reduction_simulate(y0, [0.3, 0.1, 0.2], 0.1, p, tg)
    m = ys.sum(axis=1)
    exact = 0.1 / p.delta * (1 - np.exp(-p.delta * tg.times)) + np.exp(-p.delta * tg.times) * m[0]
    np.testing.assert_allclose(m, exact, rtol=1e-10)


def test_homogeneous_pde_tracks_ode(backend):
    g = Grid(nx=3, ny=3)
    p = ModelParams(birth_rate=0.1)
    tg = TimeGrid.from_dt(20, 0.005)
    y0 = np.array([1, 0.1, 0, 0.05, 0.005, 0])
    u = np.array([0.3, 0.2, 0.1])
    pde = simulate_forward(np.broadcast_to(y0[:, None, None], (6, 3, 3)),
                           Trajectory.constant(u, g, tg), p, g, tg).frames
    np.testing.assert_allclose(pde, pde[:, :, :1, :1].repeat(3, 2).repeat(3, 3), atol=1e-13)
    ode = ode_reduction_simulate(y0, u, 0.1, p, tg)
    assert np.max(np.abs(pde[:, :, 0, 0] - ode)) / np.max(np.abs(ode)) < 1e-3


@pytest.fixture(scope="module")
def short():
    prob = baseline_problem(nx=8, dt=0.02, t_final=1.0)
    prob.checkpoint_stride = None
    return prob, random_controls(prob, np.random.default_rng(5))


def test_fd_rejects_infeasible_perturbation(short):
    prob, _ = short
    u = prob.uncontrolled_controls()
    h = Trajectory(u.times, np.ones(u.frames.shape))
    with pytest.raises(InfeasiblePerturbation):
        fd_directional_derivative(u, h, 1e-4, prob)


def test_sensitivity_is_linear_and_zero_initially(short):
    prob, u = short
    rng = np.random.default_rng(6)
    h1, h2 = random_direction(prob, rng), random_direction(prob, rng)
    fwd = prob.simulate(u)
    z1 = linearized_sensitivity(u, h1, prob, fwd).frames
    z2 = linearized_sensitivity(u, h2, prob, fwd).frames
    z12 = linearized_sensitivity(u, Trajectory(u.times, h1.frames + 2 * h2.frames), prob,
                                 fwd).frames
    assert np.all(z1[0] == 0)
    np.testing.assert_allclose(z12, z1 + 2 * z2, atol=1e-9 * np.abs(z12).max())


def test_three_directional_derivatives_agree(short):
    prob, u = short
    rng = np.random.default_rng(7)
    _, grad, _ = prob.cost_and_gradient(u)
    h = random_direction(prob, rng)
    h = Trajectory(h.times, 0.05 * h.frames)
    adj = inner_product(grad, h, prob.grid)
    fd = fd_directional_derivative(u, h, 1e-4, prob)
    sens = sensitivity_directional_derivative(u, h, prob)
    assert adj == pytest.approx(fd, rel=1e-4)
    assert adj == pytest.approx(sens, rel=1e-8)
