"""A fully specified control problem: model, weights, grid, horizon, initial data."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .adjoint import CostWeights
from .engine import (Grid, TimeGrid, Trajectory, auto_stride, baseline_initial_state,
                     gaussian, simulate_forward)
from .model import ModelParams
from .objective import CostAccumulator, CostBreakdown, adjoint_gradient


@dataclass
class Problem:
    params: ModelParams
    weights: CostWeights
    grid: Grid
    times: TimeGrid
    y0: np.ndarray
    checkpoint_stride: int | None = field(default="auto")

    def __post_init__(self):
        if self.checkpoint_stride == "auto":
            self.checkpoint_stride = auto_stride(self.grid, self.times)

    def with_weights(self, w: CostWeights) -> "Problem":
        return replace(self, weights=w)

    def constant_controls(self, value) -> Trajectory:
        return Trajectory.constant(value, self.grid, self.times)

    def uncontrolled_controls(self) -> Trajectory:
        return self.constant_controls(self.params.uncontrolled())

    def simulate(self, controls: Trajectory, on_frame=None):
        return simulate_forward(self.y0, controls, self.params, self.grid, self.times,
                                checkpoint_stride=self.checkpoint_stride, on_frame=on_frame)

    def cost(self, controls: Trajectory) -> CostBreakdown:
        acc = CostAccumulator(controls, self.grid, self.weights, self.params)
        self.simulate(controls, on_frame=acc)
        return acc.result()

    def cost_and_gradient(self, controls: Trajectory):
        acc = CostAccumulator(controls, self.grid, self.weights, self.params)
        states = self.simulate(controls, on_frame=acc)
        g = adjoint_gradient(states, controls, self.weights, self.params, self.grid)
        return acc.result(), g, states


def baseline_problem(nx=64, dt=0.05, t_final=200.0, weights: CostWeights | None = None,
                     dim=2, **grid_kw) -> Problem:
    """Gaussian birth rate and initial data on ``[-5, 5]^dim`` with baseline rates."""
    grid = Grid(nx=nx, ny=nx if dim == 2 else 3, dim=dim, **grid_kw)
    params = ModelParams(birth_rate=gaussian(grid, 0.1))
    return Problem(params, weights or CostWeights(), grid, TimeGrid.from_dt(t_final, dt),
                   baseline_initial_state(grid))


def small_test_problem(weights: CostWeights | None = None) -> Problem:
    """The cheap verification problem: ``nx = 16``, ``T = 5``, ``dt = 0.01``."""
    prob = baseline_problem(nx=16, dt=0.01, t_final=5.0, weights=weights)
    prob.checkpoint_stride = None
    return prob
