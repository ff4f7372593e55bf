"""Acceptance checks with pinned tolerances; one PASS/FAIL line per criterion.

Criterion 5 runs at both the reduced check (nx=32, T=100) and the default
resolution (nx=64, T=200).  Set ``NCSIR_ACCEPTANCE_QUICK=1`` to skip the
default-resolution run, and ``NCSIR_ACCEPTANCE_FULL=1`` to add the
default-resolution zeta sweep for criterion 6 (about half an hour).
"""
import json
import os
import time

import numpy as np
import pytest

from helpers import random_controls, random_direction, report
from ncsir.cli import main
from ncsir.config import PRESET_NAMES, preset
from ncsir.engine import Grid, TimeGrid, Trajectory, laplacian_apply, simulate_forward
from ncsir.model import S_STAR, ModelParams
from ncsir.objective import inner_product, relative_cost_reduction
from ncsir.optimizer import run
from ncsir.oracles import (FD_EPS, fd_directional_derivative, ode_reduction_simulate,
                           sensitivity_directional_derivative)
from ncsir.problem import baseline_problem, small_test_problem

QUICK = os.environ.get("NCSIR_ACCEPTANCE_QUICK") == "1"
FULL = os.environ.get("NCSIR_ACCEPTANCE_FULL") == "1"

TRIANGULATION_RTOL = 1e-2
TRIANGULATION_DIRECTIONS = 20
MASS_RTOL = 0.01
NEG_TOL = 1e-12
ODE_RTOL = 1e-3
RELCR_BAND = (0.03, 0.15)
ZETAS = (1.0, 0.4, 0.2, 0.1)
ORDER_BAND = (1.7, 2.3)
BUDGET_REDUCED_S = 180
BUDGET_DEFAULT_S = 1800


def _pairwise_rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_c1_gradient_triangulation():
    prob = small_test_problem()
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    u = random_controls(prob, rng)
    _, grad, fwd = prob.cost_and_gradient(u)
    worst = 0.0
    for _ in range(TRIANGULATION_DIRECTIONS):
        h = random_direction(prob, rng)
        h = Trajectory(h.times, 0.05 * h.frames)
        adj = inner_product(grad, h, prob.grid)
        fd = fd_directional_derivative(u, h, FD_EPS, prob)
        sens = sensitivity_directional_derivative(u, h, prob)
        worst = max(worst, _pairwise_rel(adj, fd), _pairwise_rel(adj, sens),
                    _pairwise_rel(fd, sens))
    elapsed = time.perf_counter() - t0
    ok = worst < TRIANGULATION_RTOL and elapsed < 120
    assert report(1, ok, f"worst pairwise rel diff {worst:.2e} over {TRIANGULATION_DIRECTIONS} "
                         f"directions (tol {TRIANGULATION_RTOL}), {elapsed:.1f}s (< 120s)")


def test_c2_mass_law():
    prob = baseline_problem()
    t0 = time.perf_counter()
    g, p = prob.grid, prob.params
    mass = []
    prob.simulate(prob.uncontrolled_controls(), on_frame=lambda n, y: mass.append(g.integrate(y.sum(0))))
    elapsed = time.perf_counter() - t0
    t = prob.times.times
    b1, d = g.integrate(p.birth_rate), p.delta
    exact = b1 / d * (1 - np.exp(-d * t)) + np.exp(-d * t) * mass[0]
    err = float(np.max(np.abs(np.array(mass) / exact - 1)))
    ok = err < MASS_RTOL and elapsed < 300
    assert report(2, ok, f"max relative mass error {err:.2e} (tol {MASS_RTOL}) over "
                         f"{len(mass)} levels, {elapsed:.1f}s (< 300s)")


def test_c3_nonnegativity_and_feasibility():
    worst_state, worst_box, iterates = np.inf, 0.0, 0
    for name in PRESET_NAMES:
        cfg = preset(name).with_overrides(grid={"nx": 16, "ny": 16}, time={"t_final": 20.0})
        prob = cfg.problem()
        lo = prob.params.lower[None, :, None, None]
        hi = prob.params.upper[None, :, None, None]

        def check(n, cost, change, eta, u):
            nonlocal worst_box, iterates
            f = np.asarray(u.frames)
            worst_box = max(worst_box, float(np.max(lo - f)), float(np.max(f - hi)))
            iterates += 1

        if cfg.mode == "simulate":
            states = prob.simulate(prob.uncontrolled_controls())
        else:
            states = run(cfg.optim, prob, callback=check).states
        worst_state = min(worst_state, min(float(y.min()) for _, y in states.iter_frames()))
    ok = worst_state >= -NEG_TOL and worst_box <= 0.0
    assert report(3, ok, f"min state {worst_state:.3e} (>= -{NEG_TOL:g}); max box violation "
                         f"{max(worst_box, 0.0):g} over {iterates} control iterates, "
                         f"{len(PRESET_NAMES)} presets at nx=16, T=20")


def test_c4_ode_oracle():
    g = Grid(nx=4, ny=4)
    p = ModelParams(birth_rate=0.1)
    tg = TimeGrid.from_dt(20.0, 0.005)
    y0 = np.array([1.0, 0.1, 0.0, 0.05, 0.005, 0.0])
    u = np.array([0.3, 0.2, 0.1])
    pde = simulate_forward(np.broadcast_to(y0[:, None, None], (6,) + g.shape),
                           Trajectory.constant(u, g, tg), p, g, tg).frames
    spread = float(np.max(np.ptp(pde, axis=(2, 3))))
    ode = ode_reduction_simulate(y0, u, 0.1, p, tg)
    err = float(np.max(np.abs(pde[:, :, 0, 0] - ode)) / np.max(np.abs(ode)))
    ok = err < ODE_RTOL
    assert report(4, ok, f"sup relative error {err:.2e} vs RK4 over [0, 20] at dt=0.005 "
                         f"(tol {ODE_RTOL}); spatial spread {spread:.1e}")


def _optimize(nx, t_final, zeta):
    cfg = preset("baseline").with_overrides(grid={"nx": nx, "ny": nx},
                                            time={"t_final": t_final},
                                            weights={"zeta": zeta})
    prob = cfg.problem()
    t0 = time.perf_counter()
    unc_states = prob.simulate(prob.uncontrolled_controls())
    j_unc = prob.cost(prob.uncontrolled_controls()).j_total
    res = run(cfg.optim, prob)
    elapsed = time.perf_counter() - t0
    g = prob.grid

    def noncompliant_fraction(states):
        y = states.frame(len(states) - 1)
        return float(g.integrate(y[S_STAR:].sum(0)) / g.integrate(y.sum(0)))

    alpha_effort = g.integrate(res.controls.frames[:, 0] - prob.params.alpha_lower)
    return {
        "j_unc": j_unc, "j_opt": res.final_cost.j_total,
        "relcr": relative_cost_reduction(j_unc, res.final_cost.j_total),
        "iterations": res.iterations, "elapsed": elapsed, "times": prob.times.times,
        "alpha_effort": alpha_effort,
        "nc_opt": noncompliant_fraction(res.states),
        "nc_unc": noncompliant_fraction(unc_states),
    }


@pytest.fixture(scope="module")
def reduced_sweep():
    return {z: _optimize(32, 100.0, z) for z in ZETAS}


@pytest.fixture(scope="module")
def default_baseline():
    if QUICK:
        pytest.skip("NCSIR_ACCEPTANCE_QUICK=1")
    return _optimize(64, 200.0, 0.2)


def _c5_line(r, label, budget):
    lo, hi = RELCR_BAND
    ok = lo <= r["relcr"] <= hi and r["j_opt"] < r["j_unc"] and r["elapsed"] <= budget
    detail = (f"[{label}] RelCR {100 * r['relcr']:.2f}% (band {100 * lo:.0f}-{100 * hi:.0f}%), "
              f"J {r['j_unc']:.6g} -> {r['j_opt']:.6g}, {r['iterations']} iterations, "
              f"{r['elapsed']:.0f}s (budget {budget}s)")
    return ok, detail


def test_c5_baseline_relcr_reduced(reduced_sweep):
    ok, detail = _c5_line(reduced_sweep[0.2], "nx=32, T=100", BUDGET_REDUCED_S)
    assert report(5, ok, detail)


@pytest.mark.slow
def test_c5_baseline_relcr_default(default_baseline):
    ok, detail = _c5_line(default_baseline, "nx=64, T=200", BUDGET_DEFAULT_S)
    assert report(5, ok, detail)


def _c6(sweep, label):
    rel = [sweep[z]["relcr"] for z in ZETAS]
    ok = all(a < b for a, b in zip(rel, rel[1:]))
    pairs = ", ".join(f"zeta={z:g}: {100 * r:.2f}%" for z, r in zip(ZETAS, rel))
    return ok, f"[{label}] RelCR strictly decreasing in zeta: {pairs}"


def test_c6_monotone_zeta_reduced(reduced_sweep):
    ok, detail = _c6(reduced_sweep, "nx=32, T=100")
    assert report(6, ok, detail)


@pytest.mark.slow
@pytest.mark.skipif(not FULL, reason="set NCSIR_ACCEPTANCE_FULL=1")
def test_c6_monotone_zeta_default():
    ok, detail = _c6({z: _optimize(64, 200.0, z) for z in ZETAS}, "nx=64, T=200")
    assert report(6, ok, detail)


def test_c7_qualitative_shape(reduced_sweep):
    r = reduced_sweep[0.2]
    t, e = r["times"], r["alpha_effort"]
    t_end = t[-1]
    window = t <= 0.9 * t_end
    early = t <= 0.1 * t_end
    share = float(e[early].sum() / e[window].sum())
    share_all = float(e[early].sum() / e.sum())
    ok = share > 0.5 and r["nc_opt"] < r["nc_unc"]
    assert report(7, ok, f"alpha effort share in first 10% of [0, 0.9T]: {share:.2f} (> 0.5; "
                         f"whole horizon {share_all:.2f}); final noncompliant fraction "
                         f"{r['nc_opt']:.4f} controlled vs {r['nc_unc']:.4f} uncontrolled")


def test_c8_convergence_orders():
    g = Grid(nx=16, ny=16)
    prob = baseline_problem(nx=16, dt=0.05, t_final=2.0)
    p, y0 = prob.params, prob.y0

    def final(dt):
        tg = TimeGrid.from_dt(2.0, dt)
        return simulate_forward(y0, Trajectory.constant(p.uncontrolled(), g, tg), p, g,
                                tg).frames[-1]

    ref = final(0.05 / 64)
    errs = [np.max(np.abs(final(dt) - ref)) for dt in (0.05, 0.025, 0.0125)]
    t_ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    s_errs = []
    for nx in (16, 32, 64):
        gr = Grid(nx=nx, ny=nx)
        x, y = gr.coords()
        f = np.cos(np.pi * (x + 5) / 10) * np.cos(np.pi * (y + 5) / 10)
        s_errs.append(np.max(np.abs(laplacian_apply(f, gr) + 2 * (np.pi / 10) ** 2 * f)))
    s_ratios = [s_errs[0] / s_errs[1], s_errs[1] / s_errs[2]]
    lo, hi = ORDER_BAND
    ok = all(lo <= r <= hi for r in t_ratios) and all(3.6 <= r <= 4.4 for r in s_ratios)
    assert report(8, ok, "temporal error ratios " + ", ".join(f"{r:.3f}" for r in t_ratios)
                  + f" (band {lo}-{hi}); Laplacian error ratios "
                  + ", ".join(f"{r:.3f}" for r in s_ratios) + " (second order: 4)")


def test_c9_determinism(tmp_path):
    args = ["optimize", "--preset", "baseline", "--seed", "7", "--nx", "16", "--t-final", "20",
            "--quiet"]
    blobs = []
    for name in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / name)]) in (0, 4)
        summary = json.loads((tmp_path / name / "summary.json").read_text())
        blobs.append(json.dumps(summary["cost_history"]).encode())
    same_series = (tmp_path / "a" / "timeseries.csv").read_bytes() == \
        (tmp_path / "b" / "timeseries.csv").read_bytes()
    ok = blobs[0] == blobs[1] and same_series
    assert report(9, ok, f"cost_history byte-identical across two CLI runs "
                         f"({len(json.loads(blobs[0]))} entries); timeseries.csv identical: "
                         f"{same_series}")
