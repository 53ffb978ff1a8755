import math

import numpy as np
import pytest

from sirnet.degrees import DegreeSpec
from sirnet.errors import ConfigurationError, SolverDiagnosticError
from sirnet.limit import (
    GeneratingFn,
    LimitInit,
    SolverConfig,
    edge_identities,
    horizon_bound,
    influx_vector,
    limit_initial,
    limit_initial_from_pI0,
    miller_theta,
    rk4_integrate,
    solve_measures,
    solve_volz,
)
from sirnet.measures import RealMeasure


from oracles import influx_uncollapsed


def test_influx_collapsed_equals_uncollapsed():
    rng = np.random.default_rng(42)
    for _ in range(25):
        kmax = int(rng.integers(2, 13))
        w = rng.random(kmax + 1)
        p = rng.dirichlet(np.ones(3))
        pS, pI, pR = p
        K = kmax
        got = influx_vector(w, pS, pI, pR, K)
        want = influx_uncollapsed(w, pS, pI, pR, K)
        np.testing.assert_allclose(got, want, atol=1e-12, rtol=1e-10)


def test_influx_degenerate_probabilities():
    w = np.array([0.0, 0.2, 0.3, 0.5])
    np.testing.assert_allclose(
        influx_vector(w, 1.0, 0.0, 0.0, 3),
        influx_uncollapsed(w, 1.0, 0.0, 0.0, 3), atol=1e-14)
    np.testing.assert_allclose(
        influx_vector(w, 0.0, 1.0, 0.0, 3),
        influx_uncollapsed(w, 0.0, 1.0, 0.0, 3), atol=1e-14)


def test_generating_fn_derivatives():
    g = GeneratingFn(RealMeasure({0: 0.2, 1: 0.3, 3: 0.5}))
    z = 0.7
    assert g(z) == pytest.approx(0.2 + 0.3 * z + 0.5 * z**3)
    assert g(z, order=1) == pytest.approx(0.3 + 1.5 * z**2)
    assert g(z, order=2) == pytest.approx(3.0 * z)
    with pytest.raises(ValueError):
        g(z, order=3)


def test_initial_data_mappings():
    spec = DegreeSpec.poisson(5, 40)
    init = limit_initial(spec, 0.01)
    assert init.S0 == pytest.approx(0.99)
    assert init.I0 == pytest.approx(0.01)
    assert init.pI0 == pytest.approx(0.01 / 0.99)
    init2 = limit_initial_from_pI0(spec, init.pI0)
    assert init2.pI0 == pytest.approx(init.pI0, rel=1e-12)
    with pytest.raises(ConfigurationError):
        limit_initial(spec, 1.5)
    with pytest.raises(ConfigurationError):
        limit_initial_from_pI0(spec, 0.0)


def test_rk4_order_on_scalar_ode():
    # y' = -2y, y(0)=1; RK4 global error scales like dt^4
    rhs = lambda y: -2.0 * y
    errs = []
    for dt in (0.1, 0.05):
        ts, ys, _ = rk4_integrate(rhs, [1.0], dt, int(round(1.0 / dt)))
        errs.append(abs(ys[-1, 0] - math.exp(-2.0)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.3)


def standard_setup(kmax=40):
    spec = DegreeSpec.poisson(5, kmax)
    return limit_initial_from_pI0(spec, 0.05)


def test_volz_basic_course():
    init = standard_setup()
    sol = solve_volz(init, 1.0, 0.5, SolverConfig(t_max=4.0, dt=1e-3))
    # theta nonincreasing in (0,1]; epidemic takes off then burns out
    assert np.all(np.diff(sol.theta) <= 1e-15)
    assert sol.theta[-1] > 0
    assert sol.S[0] > sol.S[-1]
    assert sol.R[-1] > 0.5
    # conservation S+I+R constant
    total = sol.S + sol.I + sol.R
    np.testing.assert_allclose(total, total[0], atol=1e-9)
    # probability simplex
    np.testing.assert_allclose(sol.pI + sol.pS + sol.pR, 1.0, atol=1e-9)


def test_volz_edge_identities_small():
    init = standard_setup()
    sol = solve_volz(init, 1.0, 0.5, SolverConfig(t_max=3.0, dt=1e-3))
    res = edge_identities(sol)
    assert res["N_S"].max() < 1e-8
    assert res["N_IS"].max() < 1e-6
    assert res["N_RS"].max() < 1e-6


def test_volz_eps_stop():
    init = standard_setup()
    sol = solve_volz(init, 1.0, 0.5, SolverConfig(t_max=500.0, dt=1e-2, eps_IS=1e-4))
    assert sol.terminal == "extinct"
    assert sol.N_IS[-1] < 1e-4
    assert sol.t[-1] < 500.0


def test_volz_coarse_dt_trips_diagnostic():
    init = standard_setup()
    with pytest.raises(SolverDiagnosticError):
        solve_volz(init, 500.0, 0.5, SolverConfig(t_max=10.0, dt=0.5))


def test_measures_clamp_budget_trips():
    init = standard_setup(kmax=20)
    with pytest.raises(SolverDiagnosticError):
        solve_measures(init, 80.0, 0.5, SolverConfig(t_max=10.0, dt=0.5, eps_IS=0.0))


def test_measures_matches_volz():
    init = standard_setup(kmax=30)
    cfg = SolverConfig(t_max=2.0, dt=1e-3)
    vol = solve_volz(init, 1.0, 0.5, cfg)
    mea = solve_measures(init, 1.0, 0.5, cfg)
    m = min(len(vol.t), len(mea.t))
    assert np.abs(mea.I[:m] - vol.I[:m]).max() < 1e-6
    assert np.abs(mea.pI[:m] - vol.pI[:m]).max() < 1e-6
    assert np.abs(mea.S[:m] - vol.S[:m]).max() < 1e-6
    assert mea.clamped_mass <= 1e-10


def test_measures_mass_conservation():
    init = standard_setup(kmax=25)
    sol = solve_measures(init, 1.0, 0.5, SolverConfig(t_max=2.0, dt=1e-3))
    total = sol.S + sol.I + sol.R
    np.testing.assert_allclose(total, total[0], atol=1e-8)
    assert np.all(sol.mu_IS >= 0) and np.all(sol.mu_RS >= 0)


def test_measures_truncation_warns():
    # infinite-tail stand-in: uniform weights, cap K below the support top
    init = LimitInit(
        mu_S0=DegreeSpec.poisson(5, 60).limit_measure(0.99),
        mu_IS0=RealMeasure({1: 0.01}),
    )
    with pytest.warns(UserWarning, match="tail mass"):
        solve_measures(init, 1.0, 0.5, SolverConfig(t_max=0.01, dt=1e-3), K=None)


def test_measures_mu_s_closed_form():
    init = standard_setup(kmax=20)
    sol = solve_measures(init, 1.0, 0.5, SolverConfig(t_max=1.0, dt=1e-3))
    idx = len(sol.t) // 2
    mu = sol.mu_S(idx)
    k = np.arange(init.mu_S0.kmax + 1)
    np.testing.assert_allclose(
        mu.weights, init.mu_S0.weights * sol.theta[idx] ** k, rtol=1e-12)


def test_miller_exact_when_ps0_matches():
    spec = DegreeSpec.poisson(5, 40)
    init = limit_initial(spec, 0.02)
    cfg = SolverConfig(t_max=3.0, dt=1e-3)
    vol = solve_volz(init, 1.0, 0.5, cfg)
    psi = GeneratingFn(spec.limit_measure())
    ts, theta, S, I, R = miller_theta(psi, 1.0, 0.5, cfg, pS0=1.0 - init.pI0)
    m = min(len(ts), len(vol.t))
    assert np.abs(theta[:m] - vol.theta[:m]).max() < 1e-7
    # with the default pS0=1 the reduction is only approximate
    _, theta_default, *_ = miller_theta(psi, 1.0, 0.5, cfg, pS0=1.0)
    assert np.abs(theta_default[:m] - vol.theta[:m]).max() > 1e-4


def test_horizon_bound_pinned_example():
    # <mu,x^2>=4, N_IS0=0.1, eps'=0.01, rates (2, 1) -> (ln 4.1 - ln 4.01)/2
    init = LimitInit(mu_S0=RealMeasure({2: 1.0}), mu_IS0=RealMeasure({1: 0.1}))
    tau = horizon_bound(init, 2.0, 1.0, 0.01)
    assert tau == pytest.approx((math.log(4.1) - math.log(4.01)) / 2.0, rel=1e-9)
    assert tau == pytest.approx(0.011098, abs=5e-7)


def test_horizon_bound_structure():
    init = LimitInit(mu_S0=RealMeasure({2: 1.0}), mu_IS0=RealMeasure({1: 0.1}))
    # eps' -> N_IS0 drives the bound to 0
    assert horizon_bound(init, 2.0, 1.0, 0.1) == pytest.approx(0.0, abs=1e-12)
    # doubling max(r, beta) halves the bound
    a = horizon_bound(init, 2.0, 1.0, 0.01)
    b = horizon_bound(init, 4.0, 1.0, 0.01)
    assert a == pytest.approx(2 * b, rel=1e-12)
    with pytest.raises(ConfigurationError):
        horizon_bound(init, 1.0, 1.0, 0.0)


def test_solver_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(t_max=0.0, dt=1e-3)
    with pytest.raises(ConfigurationError):
        SolverConfig(t_max=1.0, dt=0.0)
    with pytest.raises(ConfigurationError):
        solve_volz(standard_setup(), -1.0, 0.5, SolverConfig(t_max=1.0))
