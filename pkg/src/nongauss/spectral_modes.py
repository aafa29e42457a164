"""Flat-band squeezing spectrum and LO-matched mode weights.

Weight vectors describe which combination of spheroidal modes a homodyne
detector actually measures. The LO amplitude cancels from every normalized
weight, so it never appears here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.optimize import minimize_scalar
from scipy.special import sici

from .exceptions import DegenerateBasisError, DomainError
from .pswf import eval_mode_functions, kmax_cap, legendre_P_at_zero

__all__ = [
    "Scheme",
    "SqueezingSpec",
    "SchemeWeights",
    "UnconditionalVariances",
    "squeezing_spectrum",
    "weights_cw_wideband",
    "weights_cw_filtered",
    "weights_pulsed",
    "weights_single_mode",
    "weights_for_scheme",
    "unconditional_variances",
    "weight_kmax",
    "grosshans_eta_eff",
    "grosshans_eta_eff_max",
    "mode_weight_identity_residual",
]

TAIL_TOL = 1e-10


class Scheme(str, Enum):
    CW_WIDEBAND = "cw_wideband"
    CW_FILTERED = "cw_filtered"
    PULSED = "pulsed"
    SINGLE_MODE = "single_mode"


@dataclass(frozen=True, eq=False)
class SqueezingSpec:
    """Per-mode squeezing of a flat spectrum: r_k = (-1)^k gamma."""

    gamma: float
    B: float
    r: np.ndarray
    lam: np.ndarray

    @property
    def k_max(self):
        return len(self.r)


@dataclass(frozen=True, eq=False)
class SchemeWeights:
    """Weights on in-band squeezed modes (``wS``) and out-of-band vacuum (``wV``)."""

    scheme: Scheme
    wS: np.ndarray
    wV: np.ndarray

    @property
    def norm(self):
        return float(np.sum(self.wS**2) + np.sum(self.wV**2))

    def with_signs(self, signs):
        """Copy with ``wS`` multiplied elementwise by ``signs``."""
        return SchemeWeights(self.scheme, self.wS * np.asarray(signs, dtype=float), self.wV)


class UnconditionalVariances(NamedTuple):
    sigma_minus_sq: float
    sigma_plus_sq: float
    var_x: float
    var_p: float


def squeezing_spectrum(gamma, B, k_max):
    """Squeezing parameters for the first ``k_max`` spheroidal modes."""
    if int(k_max) != k_max or k_max < 1:
        raise DomainError(f"k_max must be a positive integer, got {k_max}")
    if not np.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma}")
    signs = (-1.0) ** np.arange(int(k_max))
    r = signs * float(gamma)
    return SqueezingSpec(gamma=float(gamma), B=float(B), r=r, lam=np.tanh(r))


def _even_mask(n):
    mask = np.zeros(n, dtype=bool)
    mask[::2] = True
    return mask


def _normalized(values, basis):
    total = np.sqrt(np.sum(values**2))
    if not np.any(basis.chi > 0) or total == 0.0:
        raise DegenerateBasisError(f"all kernel eigenvalues vanish at c={basis.c}")
    return values / total


def weights_cw_wideband(basis):
    """CW single-frequency LO with an unfiltered (infinite-bandwidth) detector.

    The LO overlap with mode k is proportional to sqrt(2k+1) P_k(0), and
    the detector also integrates out-of-band vacuum through wV.
    """
    k = np.arange(basis.k_max)
    chi = basis.chi
    alpha = np.sqrt(2 * k + 1.0) * np.array([legendre_P_at_zero(i) for i in k])
    denom = np.sum(alpha**2 * chi)
    if not np.any(chi > 0) or denom <= 0.0:
        raise DegenerateBasisError(f"all kernel eigenvalues vanish at c={basis.c}")
    scale = math.sqrt(denom)
    wS = alpha * chi / scale
    wV = alpha * np.sqrt(np.clip(chi * (1.0 - chi), 0.0, None)) / scale
    return SchemeWeights(Scheme.CW_WIDEBAND, wS, wV)


def weights_cw_filtered(basis):
    """CW LO with a low-pass filter matched to the squeezing band.

    Out-of-band vacuum is removed by the filter, so ``wV`` is all zero.
    """
    k = np.arange(basis.k_max)
    phi0 = np.sqrt(2 * k + 1.0) * basis.s_at_zero
    phi0[~_even_mask(basis.k_max)] = 0.0
    eps = _normalized(basis.chi * phi0, basis)
    return SchemeWeights(Scheme.CW_FILTERED, eps, np.zeros(basis.k_max))


def weights_pulsed(basis):
    """Pulsed LO with flat spectrum, sampled at the electrical pulse peak.

    Only magnitudes are meaningful downstream; entries are returned >= 0.
    """
    k = np.arange(basis.k_max)
    mag = np.sqrt((2 * k + 1.0) * basis.chi) * np.abs(basis.s_at_zero)
    mag[~_even_mask(basis.k_max)] = 0.0
    eps = _normalized(mag, basis)
    return SchemeWeights(Scheme.PULSED, eps, np.zeros(basis.k_max))


def weights_single_mode():
    """Perfect single-mode matching: the detector sees exactly one mode."""
    return SchemeWeights(Scheme.SINGLE_MODE, np.array([1.0]), np.zeros(0))


def weights_for_scheme(scheme, basis=None):
    scheme = Scheme(scheme)
    if scheme is Scheme.SINGLE_MODE:
        return weights_single_mode()
    if basis is None:
        raise DomainError(f"scheme {scheme.value} needs a spheroidal basis")
    builders = {
        Scheme.CW_WIDEBAND: weights_cw_wideband,
        Scheme.CW_FILTERED: weights_cw_filtered,
        Scheme.PULSED: weights_pulsed,
    }
    return builders[scheme](basis)


def weight_kmax(bt, chi, tol=TAIL_TOL, cap=None):
    """Smallest mode count K with sum_{k >= K} chi_k < ``tol``, capped.

    The tail uses the exact trace sum_k chi_k = bt.
    """
    cap = kmax_cap() if cap is None else cap
    partial = np.cumsum(np.asarray(chi, dtype=float))
    tails = bt - partial
    hits = np.nonzero(tails < tol)[0]
    if hits.size == 0:
        return min(cap, len(chi))
    return int(min(cap, hits[0] + 1))


def unconditional_variances(weights, spec, tau):
    """sigma_-^2, sigma_+^2 and the homodyne variances before conditioning.

    ``var_x`` and ``var_p`` are 1 - tau + sigma_-^2 tau and
    1 - tau + sigma_+^2 tau; the vacuum has var_x = var_p = 1 in these units.
    """
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must be in [0, 1], got {tau}")
    wS2 = weights.wS**2
    n = len(wS2)
    if n > spec.k_max:
        raise DomainError(f"weights have {n} modes but spectrum only {spec.k_max}")
    r = spec.r[:n]
    vac = float(np.sum(weights.wV**2))
    s_minus = float(np.sum(wS2 * np.exp(-2.0 * r))) + vac
    s_plus = float(np.sum(wS2 * np.exp(2.0 * r))) + vac
    return UnconditionalVariances(
        s_minus, s_plus, 1.0 - tau + s_minus * tau, 1.0 - tau + s_plus * tau
    )


def grosshans_eta_eff(bt):
    """Single-parameter mode overlap of a chopped CW LO, (4/pi^2) Si(pi bt/2)^2 / bt."""
    bt_arr = np.asarray(bt, dtype=float)
    if np.any(bt_arr <= 0) or not np.all(np.isfinite(bt_arr)):
        raise DomainError("bt must be finite and > 0")
    si, _ = sici(math.pi * bt_arr / 2.0)
    out = 4.0 / math.pi**2 * si**2 / bt_arr
    return float(out) if out.ndim == 0 else out


def grosshans_eta_eff_max():
    """Return ``(bt, eta_eff)`` at the maximum of :func:`grosshans_eta_eff`."""
    res = minimize_scalar(
        lambda x: -grosshans_eta_eff(x), bounds=(0.1, 10.0), method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x), float(-res.fun)


def mode_weight_identity_residual(basis, k, B, T, quad_order=None):
    """|int Phi_k(Omega) sin(Omega T/2)/(pi Omega) dOmega - chi_k Phi_k(0)| over the band."""
    quad_order = basis.quad_order if quad_order is None else quad_order
    nodes, weights = npleg.leggauss(quad_order)
    omega = math.pi * B * nodes
    phi = eval_mode_functions(basis, k, B, T, omega=omega).real
    # sin(Omega T/2)/(pi Omega) = (T / 2pi) sinc(Omega T / 2pi)
    window = (T / (2.0 * math.pi)) * np.sinc(omega * T / (2.0 * math.pi))
    lhs = math.pi * B * float(np.sum(weights * phi * window))
    rhs = basis.chi[k] * eval_mode_functions(basis, k, B, T, omega=0.0).real
    return abs(lhs - rhs)
