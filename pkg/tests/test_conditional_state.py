import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nongauss.conditional_state import (
    ScenarioParams,
    gaussian_factors,
    make_scenario,
    negativity_threshold,
    origin_sweep,
    threshold_report,
    wigner_grid,
    wigner_point,
)
from nongauss.exceptions import ConfigError, DegenerateScenarioError, DomainError
from nongauss.oracles import FockOracleConfig, fock_wigner_origin

GOLDEN_ORIGIN = -0.27537225325031
GOLDEN_THRESHOLD_BT05 = 8339.0892
B = 10e6


def vacuum(x, p):
    return np.exp(-(x**2) - p**2) / math.pi


def gauss(x, p, vx, vp):
    return np.exp(-(x**2) / vx - p**2 / vp) / (math.pi * math.sqrt(vx * vp))


def test_single_mode_factors():
    f = gaussian_factors(make_scenario(0.0, eta=1.0))
    assert f.zeta_plus == pytest.approx(1.86837, abs=2e-4)
    assert f.zeta_minus == pytest.approx(0.53523, abs=2e-4)
    assert f.P_det == pytest.approx(0.01190, abs=2e-4)
    assert f.N == pytest.approx(0.98810, abs=2e-4)


def test_golden_origin_confirmed_by_fock_space():
    closed = wigner_point(make_scenario(0.0, eta=1.0), 0.0, 0.0)
    fock = fock_wigner_origin(FockOracleConfig(gamma=0.35, tau=0.9, eta=1.0, nu=0.0))
    assert abs(closed - fock) <= 1e-12
    assert abs(closed - GOLDEN_ORIGIN) <= 1e-9


@pytest.mark.parametrize("bt", [0.0, 0.5, 1.0, 3.0])
@pytest.mark.parametrize("scheme", ["cw_filtered", "cw_wideband", "pulsed"])
def test_no_efficiency_gives_identical_gaussians(bt, scheme):
    params = make_scenario(bt, scheme=scheme, eta=0.0, dark_rate=200.0)
    f = gaussian_factors(params)
    assert f.zeta_minus == pytest.approx(f.var_x0, abs=1e-15)
    assert f.zeta_plus == pytest.approx(f.var_p0, abs=1e-15)
    x, p = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13))
    expected = gauss(x, p, f.var_x0, f.var_p0)
    assert np.max(np.abs(wigner_point(params, x, p) - expected)) <= 1e-12


def test_unit_transmittance():
    params = make_scenario(1.0, eta=0.7, tau=1.0, dark_rate=1e5)
    f = gaussian_factors(params)
    lam = params.spec.lam[: len(params.weights.wS)]
    np.testing.assert_array_equal(f.gamma_plus, 1 - lam)
    np.testing.assert_array_equal(f.gamma_minus, 1 + lam)
    assert f.P_det == pytest.approx(-math.expm1(-params.det.nu_total), rel=1e-14)


@pytest.mark.parametrize("scheme", ["cw_filtered", "cw_wideband", "pulsed", "single_mode"])
@pytest.mark.parametrize("eta", [0.0, 0.1, 1.0])
def test_unsqueezed_light_stays_vacuum(scheme, eta):
    params = make_scenario(1.0, scheme=scheme, gamma=0.0, eta=eta, dark_rate=500.0)
    x, p = np.meshgrid(np.linspace(-3, 3, 9), np.linspace(-2, 2, 7))
    np.testing.assert_allclose(wigner_point(params, x, p), vacuum(x, p), atol=1e-12)


def test_long_window_has_no_dip():
    assert wigner_point(make_scenario(3.0, eta=1.0), 0.0, 0.0) >= 0.0


@pytest.mark.parametrize("bt", [0.0, 0.5, 1.0])
def test_dip_survives_realistic_detector(bt):
    assert wigner_point(make_scenario(bt, eta=0.1, dark_rate=500.0), 0.0, 0.0) < 0.0


def test_grid_symmetry_and_mass():
    params = make_scenario(0.5, eta=0.1, dark_rate=500.0)
    res = wigner_grid(params, (-4, 4), (-4, 4), 81, 81)
    # linspace nodes are mirror images only to within one ulp
    np.testing.assert_allclose(res.W, res.W[::-1, :], rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(res.W, res.W[:, ::-1], rtol=1e-14, atol=1e-14)
    x, p = res.x[:, None], res.p[None, :]
    np.testing.assert_array_equal(wigner_point(params, -x, p), res.W)
    np.testing.assert_array_equal(wigner_point(params, x, -p), res.W)
    assert res.analytic_mass == 1.0
    assert res.mass_within_bound
    assert res.origin_value < 0
    assert res.W[40, 40] == res.origin_value
    samples = list(res.samples())
    assert len(samples) == 81 * 81 and samples[1][:2] == (-4.0, -3.9)


def test_grid_rejects_bad_shapes():
    params = make_scenario(1.0)
    with pytest.raises(DomainError):
        wigner_grid(params, (-1, 1), (-1, 1), 1, 5)
    with pytest.raises(DomainError):
        wigner_grid(params, (1, -1), (-1, 1), 5, 5)


@pytest.mark.parametrize(
    ("kwargs", "error"),
    [
        (dict(eta=0.0, dark_rate=0.0), DegenerateScenarioError),
        (dict(tau=1.0, dark_rate=0.0), DegenerateScenarioError),
    ],
)
def test_degenerate_scenarios_raise(kwargs, error):
    with pytest.raises(error) as info:
        gaussian_factors(make_scenario(1.0, **kwargs))
    assert info.value.p_det < 1e-12


def test_scenario_validation():
    with pytest.raises(ConfigError):
        make_scenario()
    with pytest.raises(ConfigError):
        make_scenario(1.0, duration_s=1e-7)
    with pytest.raises(ConfigError):
        make_scenario(1.0, bandwidth_hz=0.0)
    with pytest.raises(DomainError):
        make_scenario(1.0, tau=1.2)
    params = make_scenario(1.0)
    with pytest.raises(ConfigError):
        ScenarioParams(params.spec, params.weights, make_scenario(0.0).det, params.tau)


def test_scenario_from_duration_matches_bt():
    a = make_scenario(duration_s=5e-8, eta=0.3, dark_rate=700.0)
    b = make_scenario(0.5, eta=0.3, dark_rate=700.0)
    assert a.to_dict() == b.to_dict()
    assert wigner_point(a, 0.3, -0.2) == wigner_point(b, 0.3, -0.2)


def test_single_mode_gate_defaults_to_inverse_bandwidth():
    params = make_scenario(0.0, dark_rate=1000.0)
    assert params.det.T == pytest.approx(1 / B)
    assert params.det.nu_total == pytest.approx(1e-4)


@settings(max_examples=25, deadline=None)
@given(
    bt=st.sampled_from([0.5, 1.0, 3.0]),
    scheme=st.sampled_from(["cw_filtered", "cw_wideband", "pulsed"]),
    data=st.data(),
)
def test_weight_signs_do_not_matter(bt, scheme, data):
    params = make_scenario(bt, scheme=scheme, eta=0.4, dark_rate=300.0)
    n = len(params.weights.wS)
    signs = data.draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=n, max_size=n))
    flipped = ScenarioParams(
        params.spec, params.weights.with_signs(signs), params.det, params.tau, params.basis
    )
    x = np.linspace(-2, 2, 7)[:, None]
    p = np.linspace(-2, 2, 5)[None, :]
    np.testing.assert_array_equal(wigner_point(params, x, p), wigner_point(flipped, x, p))


def test_only_total_dark_count_matters():
    params = make_scenario(1.0, eta=0.3, dark_rate=2e4)
    f = gaussian_factors(params)
    lam = params.spec.lam[: len(params.weights.wS)]
    eta_k = params.det.eta_k
    shift = (1 - params.tau) * eta_k * lam
    core = np.sqrt((1 - lam**2) / ((1 - lam + shift) * (1 + lam - shift)))
    rng = np.random.default_rng(3)
    for _ in range(5):
        split = rng.dirichlet(np.ones(len(lam))) * params.det.nu_total
        assert np.prod(core * np.exp(-split)) == pytest.approx(f.N, rel=1e-14)


def test_sweep_start_matches_point():
    params = make_scenario(1.0, eta=0.1)
    curve = origin_sweep(params, [0.0, 500.0])
    assert curve[0] == (0.0, wigner_point(params, 0.0, 0.0))


def test_sweep_large_rate_limit():
    params = make_scenario(0.5, eta=0.1)
    f = gaussian_factors(params)
    (_, w), = origin_sweep(params, [1e12])
    assert w == pytest.approx(1.0 / (math.pi * math.sqrt(f.var_x0 * f.var_p0)), rel=1e-12)


def test_sweep_reports_degenerate_points_as_nan():
    (_, w0), (_, w1) = origin_sweep(make_scenario(1.0, eta=0.0), [0.0, 100.0])
    assert math.isnan(w0) and math.isfinite(w1)
    with pytest.raises(DomainError):
        origin_sweep(make_scenario(1.0), [-1.0])


@settings(max_examples=30, deadline=None)
@given(
    bt=st.sampled_from([0.0, 0.5, 1.0, 3.0]),
    eta=st.floats(0.05, 1.0),
    gamma=st.floats(0.05, 0.8),
    tau=st.floats(0.5, 0.99),
)
def test_origin_monotone_in_dark_rate(bt, eta, gamma, tau):
    params = make_scenario(bt, eta=eta, gamma=gamma, tau=tau)
    rates = np.geomspace(1.0, 1e9, 25)
    values = np.array([w for _, w in origin_sweep(params, rates)])
    f = gaussian_factors(params)
    r0 = 1.0 / (math.pi * math.sqrt(f.var_x0 * f.var_p0))
    r_eta = f.N / (math.pi * math.sqrt(f.zeta_minus * f.zeta_plus))
    # the sign is the slope in u = exp(-nT), which falls as n grows
    slope = -np.sign(f.N * r0 - r_eta)
    assert np.all(slope * np.diff(values) >= -1e-12)


def closed_form_threshold(params):
    # W(0,0) = (R0 - R_eta0 u) / (1 - N0 u) with u = exp(-n T) vanishes at u = R0 / R_eta0
    f = gaussian_factors(params.with_dark_rate(0.0))
    r0 = 1.0 / math.sqrt(f.var_x0 * f.var_p0)
    r_eta = f.N / math.sqrt(f.zeta_minus * f.zeta_plus)
    return math.log(r_eta / r0) / params.det.T


def test_threshold_matches_closed_form_and_golden():
    params = make_scenario(0.5, eta=0.1)
    n_star = negativity_threshold(params, 1e5)
    assert n_star > 500
    assert n_star == pytest.approx(closed_form_threshold(params), rel=1e-6)
    assert n_star == pytest.approx(GOLDEN_THRESHOLD_BT05, rel=1e-6)


def test_threshold_exists_for_single_mode():
    params = make_scenario(0.0, eta=0.1)
    report = threshold_report(params, 1e5)
    assert report.reason == "found" and 0 < report.threshold < 1e5
    assert report.threshold == pytest.approx(closed_form_threshold(params), rel=1e-6)
    assert report.origin_at_zero < 0 < report.origin_at_max


def test_threshold_none_cases():
    long_window = threshold_report(make_scenario(3.0, eta=1.0), 1e5)
    assert long_window.threshold is None and long_window.reason == "nonnegative"
    unsqueezed = threshold_report(make_scenario(1.0, gamma=0.0), 1e5)
    assert unsqueezed.threshold is None and unsqueezed.reason == "degenerate"
    short = threshold_report(make_scenario(0.5, eta=0.1), 100.0)
    assert short.threshold is None and short.reason == "beyond_n_max"
    with pytest.raises(DomainError):
        threshold_report(make_scenario(0.5), 0.0)
