import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import legendre as npleg

from nongauss.exceptions import DomainError, TruncationError
from nongauss.pswf import (
    KMAX_CAP_ENV,
    BandTimeProduct,
    SpheroidalBasis,
    eval_mode_functions,
    eval_S,
    kmax_cap,
    legendre_P,
    legendre_P_at_zero,
    solve_spheroidal,
)

TABLE_BT1 = [0.78340, 0.20502, 0.01136, 0.00021]
TABLE_BT01 = [0.09973, 0.00027]


def basis_for(bt, k_max):
    return solve_spheroidal(BandTimeProduct(bt).c, k_max)


def test_band_time_product_c_is_exact():
    assert BandTimeProduct(3.0).c == math.pi * 3.0 / 2.0
    assert BandTimeProduct.from_c(math.pi / 2).bt == pytest.approx(1.0, abs=1e-15)
    assert BandTimeProduct.from_bandwidth(10e6, 1e-7).bt == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [-0.1, math.nan, math.inf])
def test_band_time_product_rejects_bad_values(bad):
    with pytest.raises(DomainError):
        BandTimeProduct(bad)


def test_chi_matches_tabulated_values_at_bt_1():
    basis = basis_for(1.0, 4)
    np.testing.assert_allclose(basis.chi, TABLE_BT1, atol=1e-4)


def test_chi_matches_tabulated_values_at_bt_01():
    basis = basis_for(0.1, 2)
    np.testing.assert_allclose(basis.chi, TABLE_BT01, atol=1e-4)


def test_small_bt_eigenvalue_tracks_bt():
    for bt in (0.1, 0.05, 0.01):
        assert abs(basis_for(bt, 1).chi[0] - bt) <= 0.01


def test_legendre_limit():
    basis = solve_spheroidal(0.0, 11)
    k = np.arange(11)
    np.testing.assert_allclose(basis.mu, k * (k + 1), atol=1e-10)
    x = np.linspace(-1, 1, 17)
    for kk in range(11):
        np.testing.assert_allclose(eval_S(basis, kk, x), legendre_P(kk, x), atol=1e-12)
    assert np.all(basis.chi == 0.0) and np.all(basis.chi_underflow)


@pytest.mark.parametrize("c", [0.157, 0.785, 1.571, 4.712])
def test_trace_identity(c):
    bt = 2 * c / math.pi
    basis = solve_spheroidal(c, math.ceil(bt) + 10)
    assert abs(basis.chi.sum() - bt) <= 1e-8


def test_eigenvalues_ordered_and_in_unit_interval():
    basis = basis_for(3.0, 10)
    assert np.all(np.diff(basis.mu) > 0)
    assert np.all(np.diff(basis.chi) < 0)
    assert np.all((basis.chi > 0) & (basis.chi <= 1))


def test_eigenvalues_increase_with_c():
    cs = [0.3, 0.8, 1.5, 2.5, 4.0]
    chis = np.array([solve_spheroidal(c, 4).chi for c in cs])
    assert np.all(np.diff(chis, axis=0) > 0)


def test_two_eigenvalue_routes_agree():
    for c in (0.5, 1.571, 4.712):
        basis = solve_spheroidal(c, 8)
        big = basis.chi > 1e-12
        np.testing.assert_allclose(basis.chi[big], basis.chi_kernel[big], atol=1e-8)


def test_parity_and_values_at_zero():
    basis = basis_for(1.0, 6)
    for k in range(6):
        coeffs = basis.legendre_coeffs[k]
        wrong = coeffs[(k + 1) % 2 :: 2]
        assert np.all(wrong == 0.0)
    assert np.all(basis.s_at_zero[1::2] == 0.0)
    assert eval_S(basis, 1, 0.0) == 0.0


def test_normalization():
    basis = basis_for(3.0, 6)
    nodes, weights = npleg.leggauss(100)
    for k in range(6):
        s = eval_S(basis, k, nodes)
        assert weights @ (s * s) == pytest.approx(2.0 / (2 * k + 1), abs=1e-12)


def test_zero_count():
    basis = basis_for(3.0, 7)
    x = np.linspace(-0.9999, 0.9999, 20000)  # even count skips x = 0
    for k in range(7):
        s = eval_S(basis, k, x)
        assert np.count_nonzero(np.diff(np.sign(s)) != 0) == k


def test_modes_deform_continuously_from_legendre():
    # sign convention: each S_0k stays on the same side as P_k as c grows
    nodes, weights = npleg.leggauss(60)
    for c in (0.5, 2.0, 4.712):
        basis = solve_spheroidal(c, 6)
        for k in range(6):
            assert weights @ (eval_S(basis, k, nodes) * legendre_P(k, nodes)) > 0


def test_eval_S_domain():
    basis = basis_for(1.0, 3)
    with pytest.raises(DomainError):
        eval_S(basis, 0, 1.01)
    with pytest.raises(DomainError):
        eval_S(basis, 3, 0.0)


@settings(max_examples=40, deadline=None)
@given(
    c=st.floats(0.0, 5.0),
    k=st.integers(0, 5),
    x=st.floats(-1.0, 1.0),
)
def test_pointwise_parity(c, k, x):
    basis = solve_spheroidal(c, 6)
    assert eval_S(basis, k, -x) == pytest.approx((-1) ** k * eval_S(basis, k, x), abs=1e-13)


B, T = 10e6, 1e-7


def test_phi_orthonormal():
    basis = basis_for(B * T, 5)
    nodes, weights = npleg.leggauss(120)
    omega = math.pi * B * nodes
    phis = np.array([eval_mode_functions(basis, k, B, T, omega=omega).real for k in range(5)])
    gram = (math.pi * B) * (phis * weights) @ phis.T / (2 * math.pi)
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-8)


def test_psi_orthogonal_with_chi_norms():
    basis = basis_for(B * T, 5)
    nodes, weights = npleg.leggauss(120)
    t = 0.5 * T * nodes
    psis = np.array([eval_mode_functions(basis, k, B, T, t=t) for k in range(5)])
    gram = 0.5 * T * (psis * weights) @ psis.conj().T
    np.testing.assert_allclose(gram, np.diag(basis.chi), atol=1e-8)


def test_phi_parity_and_band_limit():
    basis = basis_for(B * T, 4)
    omega = np.array([0.3, 1.7, 2.9]) * 1e7
    for k in range(4):
        plus = eval_mode_functions(basis, k, B, T, omega=omega)
        minus = eval_mode_functions(basis, k, B, T, omega=-omega)
        np.testing.assert_allclose(minus, (-1) ** k * plus, atol=1e-15)
        assert eval_mode_functions(basis, k, B, T, omega=1.01 * math.pi * B) == 0


def test_fourier_self_consistency():
    basis = basis_for(B * T, 5)
    nodes, weights = npleg.leggauss(120)
    t = 0.5 * T * nodes
    omega = np.array([0.0, 0.4, 0.9]) * math.pi * B
    for k in range(5):
        psi = eval_mode_functions(basis, k, B, T, t=t)
        lhs = 0.5 * T * (np.exp(1j * np.outer(omega, t)) * weights) @ psi
        rhs = basis.chi[k] * eval_mode_functions(basis, k, B, T, omega=omega)
        np.testing.assert_allclose(lhs, rhs, atol=1e-8 * math.sqrt(1 / B))


def test_psi_outside_window_is_continuous():
    basis = basis_for(B * T, 3)
    for k in range(3):
        inside = eval_mode_functions(basis, k, B, T, t=0.5 * T * (1 - 1e-9))
        outside = eval_mode_functions(basis, k, B, T, t=0.5 * T * (1 + 1e-9))
        assert abs(inside - outside) < 1e-6 * abs(inside)


def test_mode_functions_reject_mismatched_scales():
    basis = basis_for(1.0, 2)
    with pytest.raises(DomainError):
        eval_mode_functions(basis, 0, B, 2 * T, omega=0.0)
    with pytest.raises(DomainError):
        eval_mode_functions(basis, 0, B, T)


def test_legendre_examples():
    assert legendre_P(0, 0.0) == 1.0
    assert legendre_P(2, 0.0) == -0.5
    assert legendre_P(3, 0.0) == 0.0
    for k in range(25):
        assert legendre_P_at_zero(k) == pytest.approx(legendre_P(k, 0.0), abs=1e-15)


def test_truncation_error_names_bound(monkeypatch):
    with pytest.raises(TruncationError) as info:
        solve_spheroidal(1.0, 500)
    assert info.value.safe_bound == kmax_cap()
    monkeypatch.setenv(KMAX_CAP_ENV, "4")
    assert kmax_cap() == 4
    with pytest.raises(TruncationError) as info:
        solve_spheroidal(1.0, 5)
    assert info.value.safe_bound == 4
    monkeypatch.setenv(KMAX_CAP_ENV, "zero")
    with pytest.raises(DomainError):
        kmax_cap()


def test_json_round_trip():
    basis = basis_for(0.5, 4)
    again = SpheroidalBasis.from_json(basis.to_json())
    for name in ("mu", "chi", "legendre_coeffs", "s_at_zero", "r1_at_one", "chi_kernel"):
        np.testing.assert_array_equal(getattr(again, name), getattr(basis, name))
    assert again.c == basis.c and again.k_max == basis.k_max


def test_truncated_view():
    basis = basis_for(1.0, 6)
    short = basis.truncated(3)
    assert short.k_max == 3
    np.testing.assert_array_equal(short.chi, basis.chi[:3])
    with pytest.raises(DomainError):
        basis.truncated(7)
