"""Angular prolate spheroidal wave functions of order zero.

The eigenfunctions are expanded in Legendre polynomials. In the orthonormal
Legendre basis the spheroidal differential operator

    -d/dx (1 - x^2) d/dx + c^2 x^2

is symmetric and pentadiagonal, and even and odd indices decouple, so each
parity block is a symmetric tridiagonal eigenproblem.

Normalization: the integral of S_0k(c, x)^2 over [-1, 1] is 2 / (2k + 1),
and the sign is chosen so that S_0k deforms continuously into P_k as c -> 0
(sign of S_0k(c, 0) follows P_k(0) for even k, sign of the slope at 0
follows P_k'(0) for odd k).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .exceptions import ConvergenceError, DomainError, TruncationError

__all__ = [
    "BandTimeProduct",
    "SpheroidalBasis",
    "solve_spheroidal",
    "eval_S",
    "eval_mode_functions",
    "legendre_P",
    "legendre_P_at_zero",
    "kmax_cap",
    "CHI_FLOOR",
    "DEFAULT_QUAD_ORDER",
]

DEFAULT_QUAD_ORDER = 200
DEFAULT_KMAX_CAP = 64
CHI_FLOOR = 1e-14
KMAX_CAP_ENV = "NONGAUSS_KMAX_CAP"

# eigenvector tail tolerance for the highest retained mode
_TAIL_TOL = 1e-12


def kmax_cap():
    """Mode-count safety cap, overridable through ``NONGAUSS_KMAX_CAP``."""
    raw = os.environ.get(KMAX_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_KMAX_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"{KMAX_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DomainError(f"{KMAX_CAP_ENV} must be >= 1, got {cap}")
    return cap


def series_padding(c):
    """Number of Legendre terms kept beyond the highest retained mode."""
    return max(30, math.ceil(2.0 * c) + 20)


@dataclass(frozen=True)
class BandTimeProduct:
    """Dimensionless product B*T and the derived size parameter c = pi*B*T/2."""

    bt: float

    def __post_init__(self):
        if not np.isfinite(self.bt) or self.bt < 0:
            raise DomainError(f"bt must be finite and >= 0, got {self.bt}")

    @property
    def c(self):
        return math.pi * self.bt / 2.0

    @classmethod
    def from_c(cls, c):
        return cls(2.0 * c / math.pi)

    @classmethod
    def from_bandwidth(cls, B, T):
        if B < 0 or T < 0:
            raise DomainError(f"bandwidth and duration must be >= 0, got B={B}, T={T}")
        return cls(B * T)


@dataclass(frozen=True, eq=False)
class SpheroidalBasis:
    """Eigen-solution of the time- and band-limited mode problem.

    Attributes
    ----------
    c : float
        Size parameter pi*B*T/2.
    k_max : int
        Number of retained modes, k = 0 .. k_max - 1.
    mu : ndarray, shape (k_max,)
        Eigenvalues of the spheroidal differential operator.
    chi : ndarray, shape (k_max,)
        Sinc-kernel eigenvalues (energy fraction inside the window). Values
        below ``CHI_FLOOR`` are reported as 0 and flagged in ``chi_underflow``.
    legendre_coeffs : ndarray, shape (k_max, n_terms)
        Row k holds the coefficients of S_0k in the Legendre series sum d_n P_n.
    s_at_zero : ndarray
        S_0k(c, 0).
    r1_at_one : ndarray
        Radial function R_0k^(1)(c, 1), from the finite Fourier relation.
    quad_order : int
        Gauss-Legendre nodes used for the integral transforms.
    chi_kernel : ndarray
        Kernel eigenvalues from the Rayleigh quotient of the sinc kernel; an
        independent route used for cross-checking ``chi``.
    chi_underflow : ndarray of bool
    """

    c: float
    k_max: int
    mu: np.ndarray
    chi: np.ndarray
    legendre_coeffs: np.ndarray
    s_at_zero: np.ndarray
    r1_at_one: np.ndarray
    quad_order: int
    chi_kernel: np.ndarray
    chi_underflow: np.ndarray

    @property
    def bt(self):
        return 2.0 * self.c / math.pi

    def truncated(self, k_max):
        """Return a view of the first ``k_max`` modes."""
        if not 1 <= k_max <= self.k_max:
            raise DomainError(f"k_max must be in [1, {self.k_max}], got {k_max}")
        return SpheroidalBasis(
            c=self.c,
            k_max=k_max,
            mu=self.mu[:k_max],
            chi=self.chi[:k_max],
            legendre_coeffs=self.legendre_coeffs[:k_max],
            s_at_zero=self.s_at_zero[:k_max],
            r1_at_one=self.r1_at_one[:k_max],
            quad_order=self.quad_order,
            chi_kernel=self.chi_kernel[:k_max],
            chi_underflow=self.chi_underflow[:k_max],
        )

    def to_dict(self):
        return {
            "c": self.c,
            "k_max": self.k_max,
            "mu": self.mu.tolist(),
            "chi": self.chi.tolist(),
            "legendre_coeffs": self.legendre_coeffs.tolist(),
            "s_at_zero": self.s_at_zero.tolist(),
            "r1_at_one": self.r1_at_one.tolist(),
            "quad_order": self.quad_order,
            "chi_kernel": self.chi_kernel.tolist(),
            "chi_underflow": self.chi_underflow.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            c=float(data["c"]),
            k_max=int(data["k_max"]),
            mu=np.asarray(data["mu"], dtype=float),
            chi=np.asarray(data["chi"], dtype=float),
            legendre_coeffs=np.asarray(data["legendre_coeffs"], dtype=float),
            s_at_zero=np.asarray(data["s_at_zero"], dtype=float),
            r1_at_one=np.asarray(data["r1_at_one"], dtype=float),
            quad_order=int(data["quad_order"]),
            chi_kernel=np.asarray(data["chi_kernel"], dtype=float),
            chi_underflow=np.asarray(data["chi_underflow"], dtype=bool),
        )

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _ladder(n_terms):
    # a_n = n / sqrt(4n^2 - 1): x p_n = a_{n+1} p_{n+1} + a_n p_{n-1}
    n = np.arange(n_terms + 2, dtype=float)
    a = np.zeros_like(n)
    a[1:] = n[1:] / np.sqrt(4.0 * n[1:] ** 2 - 1.0)
    return a


def _operator_bands(c, n_terms):
    """Diagonal and second off-diagonal of the operator in orthonormal P_n."""
    a = _ladder(n_terms)
    n = np.arange(n_terms)
    diag = n * (n + 1.0) + c * c * (a[n] ** 2 + a[n + 1] ** 2)
    off2 = c * c * a[n[:-2] + 1] * a[n[:-2] + 2]
    return diag, off2


def _fix_sign(coeffs, k):
    if k % 2 == 0:
        value = npleg.legval(0.0, coeffs)
        reference = legendre_P_at_zero(k)
    else:
        value = npleg.legval(0.0, npleg.legder(coeffs))
        reference = (-1) ** ((k - 1) // 2)
    if value == 0.0:
        # fall back on the coefficient of P_k itself
        value, reference = coeffs[k], 1.0
    return coeffs if value * reference > 0 else -coeffs


def solve_spheroidal(c, k_max, quad_order=DEFAULT_QUAD_ORDER):
    """Solve for the first ``k_max`` angular spheroidal functions S_0k(c, .).

    Parameters
    ----------
    c : float
        Size parameter, c >= 0.
    k_max : int
        Number of modes to return.
    quad_order : int
        Gauss-Legendre nodes for the finite Fourier and kernel transforms.

    Returns
    -------
    SpheroidalBasis

    Raises
    ------
    DomainError
        For negative or non-finite ``c`` or ``k_max < 1``.
    TruncationError
        When ``k_max`` exceeds the reliable bound for this ``quad_order``
        or the mode-count cap.
    ConvergenceError
        When the eigen-solution fails or is not resolved by the series.
    """
    c = float(c)
    if not np.isfinite(c) or c < 0:
        raise DomainError(f"c must be finite and >= 0, got {c}")
    if int(k_max) != k_max or k_max < 1:
        raise DomainError(f"k_max must be a positive integer, got {k_max}")
    k_max = int(k_max)
    pad = series_padding(c)
    safe = min(kmax_cap(), quad_order - pad - 1)
    if k_max > safe:
        raise TruncationError(
            f"k_max={k_max} exceeds the reliable bound {safe} "
            f"(quad_order={quad_order}, cap={kmax_cap()})",
            safe_bound=safe,
        )
    n_terms = k_max + pad
    diag, off2 = _operator_bands(c, n_terms)

    blocks = []
    for parity in (0, 1):
        idx = np.arange(parity, n_terms, 2)
        try:
            vals, vecs = eigh_tridiagonal(diag[idx], off2[idx[:-1]])
        except LinAlgError as exc:
            raise ConvergenceError(
                f"tridiagonal eigensolver failed for c={c}, parity={parity}: {exc}"
            ) from exc
        blocks.append((idx, vals, vecs))

    nodes, weights = npleg.leggauss(quad_order)
    fourier = np.exp(1j * c * np.outer(nodes, nodes))
    diff = nodes[:, None] - nodes[None, :]
    kernel = (c / math.pi) * np.sinc(c * diff / math.pi)

    mu = np.empty(k_max)
    chi = np.empty(k_max)
    chi_kernel = np.empty(k_max)
    r1 = np.empty(k_max)
    s0 = np.empty(k_max)
    coeffs = np.zeros((k_max, n_terms))
    for k in range(k_max):
        idx, vals, vecs = blocks[k % 2]
        vec = vecs[:, k // 2]
        if np.max(np.abs(vec[-3:])) > _TAIL_TOL:
            raise ConvergenceError(
                f"mode {k} not resolved by {n_terms} Legendre terms at c={c} "
                f"(tail {np.max(np.abs(vec[-3:])):.3e})"
            )
        mu[k] = vals[k // 2]
        d = np.zeros(n_terms)
        d[idx] = vec * np.sqrt((2.0 * idx + 1.0) / 2.0) * math.sqrt(2.0 / (2 * k + 1))
        d = _fix_sign(d, k)
        coeffs[k] = d
        s0[k] = npleg.legval(0.0, d)

        s = npleg.legval(nodes, d)
        ws = weights * s
        norm = ws @ s
        # (1/2) int e^{icxy} S(y) dy = i^k R S(x); project onto S
        transform = ((-1j) ** k * 0.5 * (fourier @ ws)).real
        r1[k] = (ws @ transform) / norm
        chi[k] = (2.0 * c / math.pi) * r1[k] ** 2
        chi_kernel[k] = (ws @ kernel @ ws) / norm

    underflow = chi < CHI_FLOOR
    chi = np.where(underflow, 0.0, chi)
    resolved = chi > 1e-10
    if np.any(np.diff(chi[resolved]) >= 0) or np.any(chi > 1.0 + 1e-12):
        raise ConvergenceError(f"kernel eigenvalues not strictly ordered in (0, 1] at c={c}")
    return SpheroidalBasis(
        c=c,
        k_max=k_max,
        mu=mu,
        chi=chi,
        legendre_coeffs=coeffs,
        s_at_zero=s0,
        r1_at_one=r1,
        quad_order=quad_order,
        chi_kernel=chi_kernel,
        chi_underflow=underflow,
    )


def _check_mode(basis, k):
    if int(k) != k or not 0 <= k < basis.k_max:
        raise DomainError(f"mode index must be in [0, {basis.k_max}), got {k}")
    return int(k)


def eval_S(basis, k, x):
    """Evaluate S_0k(c, x) for |x| <= 1 from the Legendre series."""
    k = _check_mode(basis, k)
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0 + 1e-14):
        raise DomainError("S_0k is evaluated only on [-1, 1]")
    out = npleg.legval(np.clip(x_arr, -1.0, 1.0), basis.legendre_coeffs[k])
    return float(out) if out.ndim == 0 else out


def _half_fourier(basis, k, x):
    """(1/2) * integral of S_0k(c, y) e^{-icxy} over [-1, 1], for any real x."""
    nodes, weights = npleg.leggauss(basis.quad_order)
    ws = weights * npleg.legval(nodes, basis.legendre_coeffs[k])
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    return 0.5 * (np.exp(-1j * basis.c * np.outer(x_arr, nodes)) @ ws)


def _check_consistency(basis, B, T):
    if B <= 0 or T <= 0:
        raise DomainError(f"B and T must be > 0, got B={B}, T={T}")
    c = math.pi * B * T / 2.0
    if abs(c - basis.c) > 1e-12 * max(1.0, basis.c):
        raise DomainError(f"pi*B*T/2 = {c} does not match basis c = {basis.c}")


def eval_mode_functions(basis, k, B, T, *, omega=None, t=None):
    """Frequency-domain Phi_k(c, omega) or time-domain Psi_k(c, t).

    Exactly one of ``omega`` (rad/s) or ``t`` (s) must be given. Phi_k is
    zero outside |omega| <= pi*B. Psi_k extends over the whole real line;
    outside [-T/2, T/2] it is computed from its defining Fourier integral.
    """
    k = _check_mode(basis, k)
    _check_consistency(basis, B, T)
    if (omega is None) == (t is None):
        raise DomainError("give exactly one of omega or t")
    if omega is not None:
        w = np.asarray(omega, dtype=float)
        y = w / (math.pi * B)
        inside = np.abs(y) <= 1.0
        vals = np.zeros(w.shape)
        vals[inside] = npleg.legval(y[inside], basis.legendre_coeffs[k])
        out = math.sqrt((2 * k + 1) / B) * vals
        return complex(out) if out.ndim == 0 else out.astype(complex)

    tt = np.asarray(t, dtype=float)
    x = 2.0 * np.atleast_1d(tt) / T
    scale = math.sqrt((2 * k + 1) * B)
    out = np.empty(x.shape, dtype=complex)
    inside = np.abs(x) <= 1.0
    out[inside] = (
        scale * (-1j) ** k * basis.r1_at_one[k]
        * npleg.legval(x[inside], basis.legendre_coeffs[k])
    )
    if np.any(~inside):
        out[~inside] = scale * _half_fourier(basis, k, x[~inside])
    return complex(out[0]) if tt.ndim == 0 else out.reshape(tt.shape)


def legendre_P(k, x):
    """Legendre polynomial P_k(x) by the three-term recurrence."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    x_arr = np.asarray(x, dtype=float)
    p_prev, p = np.ones_like(x_arr), x_arr.copy()
    if k == 0:
        out = p_prev
    else:
        for n in range(1, int(k)):
            p_prev, p = p, ((2 * n + 1) * x_arr * p - n * p_prev) / (n + 1)
        out = p
    return float(out) if out.ndim == 0 else out


def legendre_P_at_zero(k):
    """Closed form P_k(0) = (-1)^(k/2) (k-1)!!/k!! for even k, 0 for odd k."""
    if int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    k = int(k)
    if k % 2:
        return 0.0
    # (k-1)!!/k!! = C(k, k/2) / 2^k
    return (-1) ** (k // 2) * math.comb(k, k // 2) / 2.0**k
