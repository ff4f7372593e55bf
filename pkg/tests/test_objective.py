import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_controls, random_direction
from ncsir.adjoint import CostWeights
from ncsir.engine import Grid, TimeGrid, Trajectory
from ncsir.errors import DomainError, MisalignedTrajectories
from ncsir.model import ModelParams
from ncsir.objective import (CostBreakdown, evaluate_cost, inner_product,
                             relative_cost_reduction, stationarity_residual)
from ncsir.oracles import FD_EPS, fd_directional_derivative
from ncsir.problem import baseline_problem


def test_breakdown_combines_terms():
    c = CostBreakdown.from_parts(2.0, 10.0, 4.0, CostWeights())
    assert c.j_total == pytest.approx(3 * 2 + 0.02 * 10 + 0.1 * 4)
    assert set(c.as_dict()) == {"i_total", "n_star_total", "c_total", "j_total"}


def test_cost_of_constant_fields_is_exact():
    g = Grid(nx=5, ny=5)
    tg = TimeGrid.from_dt(2, 0.5)
    y = np.zeros((tg.n_steps + 1, 6) + g.shape)
    y[:, 1] = 0.2
    y[:, 4] = 0.1
    y[:, 3] = 0.3
    u = Trajectory.constant([0.1, 0.0, 0.5], g, tg)
    c = evaluate_cost(Trajectory(tg, y), u, CostWeights(), g)
    assert c.i_total == pytest.approx(0.3 * 100 * 2)
    assert c.n_star_total == pytest.approx(0.4 * 100 * 2)
    assert c.c_total == pytest.approx((0.01 + 0.25) * 100 * 2)


def test_control_cost_offset_option():
    g = Grid(nx=4, ny=4)
    tg = TimeGrid.from_dt(1, 0.5)
    y = Trajectory(tg, np.zeros((3, 6) + g.shape))
    u = Trajectory.constant([0.1, 0.0, 0.0], g, tg)
    p = ModelParams()
    assert evaluate_cost(y, u, CostWeights(), g, p).c_total > 0
    assert evaluate_cost(y, u, CostWeights(control_cost_offset=True), g, p).c_total == 0


def test_misaligned_cost_rejected():
    g = Grid(nx=4, ny=4)
    y = Trajectory(TimeGrid(1, 2), np.zeros((3, 6) + g.shape))
    with pytest.raises(MisalignedTrajectories):
        evaluate_cost(y, Trajectory.constant([0.1, 0, 0], g, TimeGrid(1, 4)), CostWeights(), g)


def test_relcr():
    assert relative_cost_reduction(2.0, 1.5) == pytest.approx(0.25)
    assert relative_cost_reduction(2.0, 2.0) == 0
    with pytest.raises(DomainError):
        relative_cost_reduction(0.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_inner_product_symmetric_and_positive(seed):
    g = Grid(nx=3, ny=3)
    tg = TimeGrid(1, 4)
    rng = np.random.default_rng(seed)
    a = Trajectory(tg, rng.standard_normal((5, 3, 3, 3)))
    b = Trajectory(tg, rng.standard_normal((5, 3, 3, 3)))
    assert inner_product(a, b, g) == pytest.approx(inner_product(b, a, g))
    assert inner_product(a, a, g) >= 0


def test_stationarity_residual_at_kkt_points():
    g = Grid(nx=3, ny=3)
    tg = TimeGrid(1, 2)
    p = ModelParams()
    u = Trajectory.constant(p.lower, g, tg)
    # gradient pushing out of the box at the lower bound: stationary
    assert stationarity_residual(u, Trajectory.constant([1, 1, 1], g, tg), p, g) == 0
    assert stationarity_residual(u, Trajectory.constant([-1, 0, 0], g, tg), p, g) > 0
    with pytest.raises(MisalignedTrajectories):
        stationarity_residual(u, Trajectory.constant([0, 0, 0], g, TimeGrid(1, 3)), p, g)


def test_gradient_matches_central_differences():
    prob = baseline_problem(nx=8, dt=0.02, t_final=2.0)
    rng = np.random.default_rng(3)
    u = random_controls(prob, rng)
    _, grad, _ = prob.cost_and_gradient(u)
    for _ in range(3):
        h = random_direction(prob, rng)
        h = Trajectory(h.times, 0.05 * h.frames)
        fd = fd_directional_derivative(u, h, FD_EPS, prob)
        assert inner_product(grad, h, prob.grid) == pytest.approx(fd, rel=1e-4)


def test_uncontrolled_baseline_cost_terms_are_comparable():
    # the weights were picked so each term contributes a similar share
    prob = baseline_problem(nx=16, dt=0.1, t_final=50.0)
    c = prob.cost(prob.uncontrolled_controls())
    terms = np.array([3 * c.i_total, 0.02 * c.n_star_total, 0.1 * c.c_total])
    assert terms.max() / terms.min() < 20
