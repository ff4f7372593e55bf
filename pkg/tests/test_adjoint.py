import numpy as np
import pytest

from helpers import random_controls, random_direction
from ncsir.adjoint import CostWeights, adjoint_source, backward_sweep, simulate_adjoint
from ncsir.errors import AdjointBlowup, MisalignedTrajectories, ValidationError
from ncsir.objective import adjoint_gradient, assemble_gradient, inner_product
from ncsir.oracles import sensitivity_directional_derivative
from ncsir.problem import baseline_problem


@pytest.fixture(scope="module")
def tiny():
    prob = baseline_problem(nx=8, dt=0.02, t_final=1.0)
    prob.checkpoint_stride = None
    u = random_controls(prob, np.random.default_rng(0))
    return prob, u, prob.simulate(u)


def test_source_vector():
    np.testing.assert_allclose(adjoint_source(CostWeights()), [0, 3, 0, 0.02, 3.02, 0.02])


def test_weights_validate():
    with pytest.raises(ValidationError):
        CostWeights(zeta=-1)
    assert CostWeights().scaled(2).lambda1 == 6


def test_terminal_value_is_zero_and_interior_positive(tiny):
    prob, u, fwd = tiny
    phi = simulate_adjoint(fwd, u, prob.params, prob.weights, prob.grid)
    assert np.all(phi.frame(len(phi) - 1) == 0)
    assert np.all(np.isfinite(phi.frames))
    # infections and noncompliance only ever add cost
    assert phi.frame(0)[1].min() > 0 and phi.frame(0)[4].min() > 0


def test_zero_weights_give_zero_adjoint(tiny):
    prob, u, fwd = tiny
    phi = simulate_adjoint(fwd, u, prob.params, CostWeights(0, 0, 0), prob.grid)
    assert np.all(phi.frames == 0)


def test_adjoint_is_linear_in_the_source(tiny):
    prob, u, fwd = tiny
    p, g = prob.params, prob.grid
    a = simulate_adjoint(fwd, u, p, CostWeights(1, 0, 0), g).frames
    b = simulate_adjoint(fwd, u, p, CostWeights(0, 1, 0), g).frames
    ab = simulate_adjoint(fwd, u, p, CostWeights(2, 3, 0), g).frames
    # exact up to the CG stopping tolerance
    np.testing.assert_allclose(ab, 2 * a + 3 * b, rtol=0, atol=1e-9 * np.abs(ab).max())


def test_streamed_gradient_equals_stored_gradient(tiny):
    prob, u, fwd = tiny
    p, w, g = prob.params, prob.weights, prob.grid
    phi = simulate_adjoint(fwd, u, p, w, g)
    stored = assemble_gradient(fwd, phi, u, w, p, g).frames
    seen = {}
    streamed = adjoint_gradient(fwd, u, w, p, g, on_adjoint=lambda n, f: seen.setdefault(n, f))
    np.testing.assert_array_equal(stored, streamed.frames)
    assert sorted(seen) == list(range(len(u)))
    np.testing.assert_array_equal(seen[3], phi.frame(3))


def test_adjoint_is_the_transpose_of_the_tangent_model(tiny):
    # the discrete adjoint pairs exactly with the discrete linearized state
    prob, u, fwd = tiny
    rng = np.random.default_rng(1)
    grad = adjoint_gradient(fwd, u, prob.weights, prob.params, prob.grid)
    for _ in range(3):
        h = random_direction(prob, rng)
        exact = sensitivity_directional_derivative(u, h, prob)
        assert inner_product(grad, h, prob.grid) == pytest.approx(exact, rel=1e-8)


def test_checkpointed_forward_gives_the_same_gradient(tiny):
    prob, u, fwd = tiny
    ck_prob = type(prob)(prob.params, prob.weights, prob.grid, prob.times, prob.y0, 6)
    g1 = adjoint_gradient(fwd, u, prob.weights, prob.params, prob.grid).frames
    g2 = adjoint_gradient(ck_prob.simulate(u), u, prob.weights, prob.params, prob.grid).frames
    np.testing.assert_array_equal(g1, g2)


def test_blowup_and_misalignment_detected(tiny):
    prob, u, fwd = tiny
    with pytest.raises(AdjointBlowup):
        list(backward_sweep(fwd, u, prob.params, prob.weights, prob.grid, bound=1e-6))
    coarse = type(u).constant([0.5, 0.5, 0.5], prob.grid, type(u.times)(1.0, 25))
    with pytest.raises(MisalignedTrajectories):
        list(backward_sweep(fwd, coarse, prob.params, prob.weights, prob.grid))
