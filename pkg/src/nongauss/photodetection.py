"""Imperfect on/off detector: efficiency, dark counts and its POVM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import DomainError

__all__ = [
    "DetectorModel",
    "build_detector",
    "povm_counts",
    "gamma_pm",
    "off_probability_factor",
    "log_off_probability_factor",
]


@dataclass(frozen=True, eq=False)
class DetectorModel:
    """On/off detector seen through the spheroidal modes.

    ``eta_k`` is the per-mode efficiency eta * chi_k. Dark counts are kept
    only as their total mean ``nu_total`` = dark_rate * T; how that total
    splits across modes has no effect on any output.
    """

    eta: float
    eta_k: np.ndarray
    dark_rate: float
    T: float
    nu_total: float

    def with_dark_rate(self, dark_rate):
        return build_detector_from_efficiencies(self.eta, self.eta_k, dark_rate, self.T)


def _check_unit(name, value):
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {value}")


def build_detector_from_efficiencies(eta, eta_k, dark_rate, T):
    _check_unit("eta", eta)
    if not np.isfinite(dark_rate) or dark_rate < 0:
        raise DomainError(f"dark_rate must be >= 0, got {dark_rate}")
    if not np.isfinite(T) or T <= 0:
        raise DomainError(f"T must be > 0, got {T}")
    return DetectorModel(
        eta=float(eta),
        eta_k=np.asarray(eta_k, dtype=float),
        dark_rate=float(dark_rate),
        T=float(T),
        nu_total=float(dark_rate) * float(T),
    )


def build_detector(eta, dark_rate, T, basis=None):
    """Detector model over the modes of ``basis``.

    With ``basis=None`` the detector sees a single perfectly matched mode
    (chi_0 = 1, so eta_0 = eta).
    """
    chi = np.array([1.0]) if basis is None else basis.chi
    _check_unit("eta", eta)
    return build_detector_from_efficiencies(eta, float(eta) * chi, dark_rate, T)


def povm_counts(n, eta, nu, cutoff):
    """Diagonal of the POVM element for registering ``n`` counts.

    Entry m is sum_{n'<=n} Poisson(n - n'; nu) * Binomial(n'; m, eta), the
    probability of ``n`` counts given m photons, for m = 0 .. cutoff.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n}")
    if cutoff < n:
        raise DomainError(f"cutoff {cutoff} must be >= n = {n}")
    _check_unit("eta", eta)
    if not np.isfinite(nu) or nu < 0:
        raise DomainError(f"nu must be >= 0, got {nu}")
    n = int(n)
    m = np.arange(cutoff + 1)
    out = np.zeros(cutoff + 1)
    for n_sig in range(n + 1):
        dark = n - n_sig
        if nu == 0.0:
            p_dark = 1.0 if dark == 0 else 0.0
        else:
            p_dark = math.exp(-nu + dark * math.log(nu) - math.lgamma(dark + 1))
        if p_dark == 0.0:
            continue
        valid = m >= n_sig
        mv = m[valid]
        log_comb = gammaln(mv + 1) - gammaln(n_sig + 1) - gammaln(mv - n_sig + 1)
        binom = np.exp(log_comb) * _pow(eta, n_sig) * _pow(1.0 - eta, mv - n_sig)
        out[valid] += p_dark * binom
    return out


def _pow(base, exponent):
    # 0**0 = 1 convention, vectorized
    exponent = np.asarray(exponent, dtype=float)
    if base == 0.0:
        return np.where(exponent == 0, 1.0, 0.0)
    return np.power(base, exponent)


def gamma_pm(lam, eta_k, tau):
    """Per-mode factors gamma_+ and gamma_- of the conditioned Gaussian.

    gamma_pm = 1 -/+ lam +/- (1 - tau) eta_k lam.
    """
    lam = np.asarray(lam, dtype=float)
    eta_k = np.asarray(eta_k, dtype=float)
    shift = (1.0 - tau) * eta_k * lam
    return 1.0 - lam + shift, 1.0 + lam - shift


def off_probability_factor(spec, det, tau):
    """Probability-like factor N(eta, nu) of the "off" outcome.

    N = exp(-nu_total) * prod_k sqrt((1 - lam_k^2) / (gamma_+ gamma_-)).
    """
    return math.exp(log_off_probability_factor(spec, det, tau))


def log_off_probability_factor(spec, det, tau):
    """Natural log of :func:`off_probability_factor`.

    Kept separate so that P_det = 1 - N can be formed with ``expm1``
    without cancellation when N is close to 1.
    """
    _check_unit("tau", tau)
    n = len(det.eta_k)
    if n > spec.k_max:
        raise DomainError(f"detector has {n} modes but spectrum only {spec.k_max}")
    lam = spec.lam[:n]
    shift = (1.0 - tau) * det.eta_k * lam
    log_n = 0.5 * np.sum(np.log1p(-lam**2) - np.log1p(shift - lam) - np.log1p(lam - shift))
    return float(log_n - det.nu_total)
