"""Wigner function of the photon-subtracted conditional state.

The conditional state seen by the homodyne detector is a difference of two
centered, axis-aligned Gaussians divided by the trigger probability:

    W(x, p) = [R0(x, p) - R_eta(x, p)] / P_det

where R0 is the unconditional Gaussian and R_eta the Gaussian weighted by
the "off" outcome of the on/off detector. Units are such that the vacuum
Wigner function is exp(-x^2 - p^2) / pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import erf

from .exceptions import ConfigError, DegenerateScenarioError, DomainError
from .photodetection import (
    DetectorModel,
    build_detector,
    gamma_pm,
    log_off_probability_factor,
)
from .pswf import BandTimeProduct, SpheroidalBasis, kmax_cap, solve_spheroidal
from .spectral_modes import (
    Scheme,
    SchemeWeights,
    SqueezingSpec,
    squeezing_spectrum,
    unconditional_variances,
    weight_kmax,
    weights_for_scheme,
)

__all__ = [
    "ScenarioParams",
    "GaussianFactors",
    "WignerResult",
    "ThresholdReport",
    "make_scenario",
    "gaussian_factors",
    "wigner_point",
    "wigner_grid",
    "origin_sweep",
    "negativity_threshold",
    "threshold_report",
    "P_DET_FLOOR",
    "DEFAULT_BANDWIDTH_HZ",
]

P_DET_FLOOR = 1e-12
DROP_TOL = 1e-14
DEFAULT_BANDWIDTH_HZ = 10e6


@dataclass(frozen=True, eq=False)
class ScenarioParams:
    """Everything needed to evaluate the conditional Wigner function."""

    spec: SqueezingSpec
    weights: SchemeWeights
    det: DetectorModel
    tau: float
    basis: SpheroidalBasis | None = None

    def __post_init__(self):
        if not np.isfinite(self.tau) or not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"tau must be in [0, 1], got {self.tau}")
        n_w, n_d = len(self.weights.wS), len(self.det.eta_k)
        if n_w != n_d or n_w > self.spec.k_max:
            raise ConfigError(
                f"weights ({n_w} modes), detector ({n_d}) and spectrum "
                f"({self.spec.k_max}) must share one mode set"
            )
        if self.basis is not None and self.basis.k_max != n_w:
            raise ConfigError("weights and detector must come from the given basis")

    @property
    def bt(self):
        return 0.0 if self.basis is None else self.basis.bt

    def with_dark_rate(self, dark_rate):
        return ScenarioParams(
            self.spec, self.weights, self.det.with_dark_rate(dark_rate), self.tau, self.basis
        )

    def to_dict(self):
        return {
            "scheme": self.weights.scheme.value,
            "bt": self.bt,
            "bandwidth_hz": self.spec.B,
            "duration_s": self.det.T,
            "gamma": self.spec.gamma,
            "tau": self.tau,
            "eta": self.det.eta,
            "dark_rate": self.det.dark_rate,
            "k_max": len(self.weights.wS),
        }


@dataclass(frozen=True)
class GaussianFactors:
    zeta_plus: float
    zeta_minus: float
    gamma_plus: np.ndarray = field(repr=False)
    gamma_minus: np.ndarray = field(repr=False)
    N: float
    log_N: float
    P_det: float
    var_x0: float
    var_p0: float
    truncation_error_bound: float
    # zeta_minus - var_x0 and zeta_plus - var_p0, formed without cancellation
    delta_x: float = 0.0
    delta_p: float = 0.0

    def to_dict(self):
        return {
            "zeta_plus": self.zeta_plus,
            "zeta_minus": self.zeta_minus,
            "N": self.N,
            "P_det": self.P_det,
            "var_x0": self.var_x0,
            "var_p0": self.var_p0,
            "truncation_error_bound": self.truncation_error_bound,
        }


def make_scenario(
    bt=None,
    *,
    scheme=Scheme.CW_FILTERED,
    bandwidth_hz=DEFAULT_BANDWIDTH_HZ,
    duration_s=None,
    gamma=0.35,
    tau=0.9,
    eta=0.1,
    dark_rate=0.0,
    k_max=None,
):
    """Build a :class:`ScenarioParams` from physical inputs.

    Give either ``bt`` or ``duration_s`` (with ``bandwidth_hz``). A product
    B*T of zero, or ``scheme="single_mode"``, selects the perfectly matched
    single mode; its dark-count window defaults to 1/B when no duration is
    given. ``k_max=None`` keeps the smallest mode set whose eigenvalue tail
    is below 1e-10.
    """
    scheme = Scheme(scheme)
    if bandwidth_hz is None or not np.isfinite(bandwidth_hz) or bandwidth_hz <= 0:
        raise ConfigError(f"bandwidth_hz must be > 0, got {bandwidth_hz}")
    if bt is not None and duration_s is not None:
        raise ConfigError("give bt or duration_s, not both")
    if bt is None and duration_s is None:
        raise ConfigError("one of bt or duration_s is required")
    product = BandTimeProduct(bt if bt is not None else bandwidth_hz * duration_s)

    if product.bt == 0.0 or scheme is Scheme.SINGLE_MODE:
        if duration_s is not None and duration_s > 0:
            T = duration_s
        elif product.bt > 0:
            T = product.bt / bandwidth_hz
        else:
            T = 1.0 / bandwidth_hz
        spec = squeezing_spectrum(gamma, bandwidth_hz, 1)
        det = build_detector(eta, dark_rate, T)
        return ScenarioParams(spec, weights_for_scheme(Scheme.SINGLE_MODE), det, tau)

    T = product.bt / bandwidth_hz
    if k_max is None:
        # generous first pass, then keep only modes above the tail tolerance
        trial = min(kmax_cap(), math.ceil(product.bt) + 30)
        basis = solve_spheroidal(product.c, trial)
        basis = basis.truncated(weight_kmax(product.bt, basis.chi))
    else:
        basis = solve_spheroidal(product.c, k_max)
    spec = squeezing_spectrum(gamma, bandwidth_hz, basis.k_max)
    weights = weights_for_scheme(scheme, basis)
    det = build_detector(eta, dark_rate, T, basis)
    return ScenarioParams(spec, weights, det, tau, basis)


def gaussian_factors(params):
    """Parameters of both Gaussians and the trigger probability.

    Raises
    ------
    DegenerateScenarioError
        If P_det < 1e-12, i.e. the detector essentially never fires.
    """
    tau = params.tau
    wS2 = params.weights.wS**2
    n = len(wS2)
    lam = params.spec.lam[:n]
    eta_k = params.det.eta_k
    chi = params.basis.chi if params.basis is not None else np.ones(n)

    keep = ~((wS2 < DROP_TOL) & (chi < DROP_TOL))
    gp, gm = gamma_pm(lam, eta_k, tau)
    zeta_plus = 1.0 + tau * float(np.sum((2.0 * lam * wS2 / gp)[keep]))
    zeta_minus = 1.0 - tau * float(np.sum((2.0 * lam * wS2 / gm)[keep]))
    # with normalized weights, var_x0 = 1 - tau sum 2 lam w^2 / (1 + lam), so the
    # offsets reduce to sums over the detector shift and vanish exactly at eta = 0
    shift = (1.0 - tau) * eta_k * lam
    delta_x = -tau * float(np.sum((2.0 * lam * wS2 * shift / ((1.0 + lam) * gm))[keep]))
    delta_p = -tau * float(np.sum((2.0 * lam * wS2 * shift / ((1.0 - lam) * gp))[keep]))

    log_N = log_off_probability_factor(
        replace(params.spec, r=params.spec.r[:n][keep], lam=lam[keep]),
        replace(params.det, eta_k=eta_k[keep]),
        tau,
    )
    N = math.exp(log_N)
    P_det = -math.expm1(log_N)
    if P_det < P_DET_FLOOR:
        raise DegenerateScenarioError(
            f"trigger probability {P_det:.3e} is below {P_DET_FLOOR:g}; "
            "the detector cannot herald this state",
            p_det=P_det,
        )
    variances = unconditional_variances(params.weights, params.spec, tau)

    dropped = float(np.sum(wS2[~keep]) + np.sum(chi[~keep]))
    tail = 0.0
    if params.basis is not None:
        tail = max(0.0, params.basis.bt - float(np.sum(params.basis.chi)))
    lam_max = float(np.max(np.abs(lam))) if n else 0.0
    bound = (dropped + tail) * 2.0 / (1.0 - lam_max) / P_det

    return GaussianFactors(
        zeta_plus=zeta_plus,
        zeta_minus=zeta_minus,
        gamma_plus=gp,
        gamma_minus=gm,
        N=N,
        log_N=log_N,
        P_det=P_det,
        var_x0=variances.var_x,
        var_p0=variances.var_p,
        truncation_error_bound=bound,
        delta_x=delta_x,
        delta_p=delta_p,
    )


def _gaussian(x, p, var_x, var_p, scale=1.0):
    return scale * np.exp(-(x**2) / var_x - p**2 / var_p) / (math.pi * math.sqrt(var_x * var_p))


def _evaluate(factors, x, p):
    # (R0 - N G_zeta) / P_det = G_zeta + (R0 - G_zeta) / P_det; the difference
    # R0 - G_zeta goes through expm1 so small P_det does not amplify rounding
    vx, vp = factors.var_x0, factors.var_p0
    dx, dp = factors.delta_x, factors.delta_p
    log_ratio = (
        x**2 * dx / (vx * (vx + dx)) + p**2 * dp / (vp * (vp + dp))
        - 0.5 * (math.log1p(dx / vx) + math.log1p(dp / vp))
    )
    r0 = _gaussian(x, p, vx, vp)
    g_zeta = _gaussian(x, p, factors.zeta_minus, factors.zeta_plus)
    return g_zeta - r0 * np.expm1(log_ratio) / factors.P_det


def wigner_point(params, x, p, factors=None):
    """Conditional Wigner function at (x, p); arrays broadcast."""
    factors = gaussian_factors(params) if factors is None else factors
    out = _evaluate(factors, np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class WignerResult:
    """Conditional Wigner function sampled on a rectangular grid.

    ``W[i, j]`` is the value at ``(x[i], p[j])``.
    """

    params: dict
    factors: GaussianFactors
    x: np.ndarray
    p: np.ndarray
    W: np.ndarray
    origin_value: float
    analytic_mass: float
    grid_mass: float
    grid_error_bound: float

    def samples(self):
        """Row-major ``(x, p, W)`` triples."""
        for i, xv in enumerate(self.x):
            for j, pv in enumerate(self.p):
                yield float(xv), float(pv), float(self.W[i, j])

    @property
    def mass_within_bound(self):
        return abs(self.grid_mass - self.analytic_mass) <= self.grid_error_bound


def _analytic_mass(factors):
    # each exp(-x^2/a - p^2/b) / (pi sqrt(ab)) integrates to exactly 1,
    # so the mass is (1 - N) / P_det with both formed from log N
    return -math.expm1(factors.log_N) / factors.P_det


def _trapezoid_error_1d(var, lo, hi, h):
    """Bound on |trapezoid sum - 1| for exp(-x^2/var)/sqrt(pi var) on [lo, hi].

    Combines the lattice aliasing term of the infinite-line rule with the
    mass outside the box and the half-weight end corrections.
    """
    s = var / 2.0
    q = math.exp(-2.0 * math.pi**2 * s / h**2)
    alias = 2.0 * q / (1.0 - q) if q < 1.0 else math.inf
    density = lambda t: math.exp(-t * t / var) / math.sqrt(math.pi * var)
    sd = math.sqrt(var)
    tail_hi = 0.5 * (1.0 - erf(hi / sd)) + h * density(max(hi, 0.0))
    tail_lo = 0.5 * (1.0 + erf(lo / sd)) + h * density(min(lo, 0.0))
    ends = 0.5 * h * (density(lo) + density(hi))
    return alias + tail_hi + tail_lo + ends


def _grid_error_bound(factors, x, p):
    hx = float(x[1] - x[0])
    hp = float(p[1] - p[0])
    total = 0.0
    for var_x, var_p, amp in (
        (factors.var_x0, factors.var_p0, 1.0),
        (factors.zeta_minus, factors.zeta_plus, factors.N),
    ):
        ex = _trapezoid_error_1d(var_x, x[0], x[-1], hx)
        ep = _trapezoid_error_1d(var_p, p[0], p[-1], hp)
        total += amp * ((1.0 + ex) * (1.0 + ep) - 1.0)
    return total / factors.P_det


def wigner_grid(params, x_range, p_range, nx, np_):
    """Sample W on an ``nx`` by ``np_`` grid and attach mass diagnostics."""
    if nx < 2 or np_ < 2:
        raise DomainError(f"grid needs at least 2 points per axis, got {nx} x {np_}")
    if x_range[1] <= x_range[0] or p_range[1] <= p_range[0]:
        raise DomainError("grid ranges must be increasing")
    factors = gaussian_factors(params)
    x = np.linspace(x_range[0], x_range[1], nx)
    p = np.linspace(p_range[0], p_range[1], np_)
    W = _evaluate(factors, x[:, None], p[None, :])
    grid_mass = float(np.trapezoid(np.trapezoid(W, p, axis=1), x))
    return WignerResult(
        params=params.to_dict(),
        factors=factors,
        x=x,
        p=p,
        W=W,
        origin_value=float(_evaluate(factors, 0.0, 0.0)),
        analytic_mass=_analytic_mass(factors),
        grid_mass=grid_mass,
        grid_error_bound=_grid_error_bound(factors, x, p),
    )


def _origin(params):
    try:
        return float(_evaluate(gaussian_factors(params), 0.0, 0.0))
    except DegenerateScenarioError:
        return math.nan


def origin_sweep(params, n_values):
    """W(0, 0) as a function of the dark-count rate.

    Points where the trigger probability is degenerate come back as NaN.
    """
    out = []
    for n in n_values:
        if not np.isfinite(n) or n < 0:
            raise DomainError(f"dark rates must be >= 0, got {n}")
        out.append((float(n), _origin(params.with_dark_rate(float(n)))))
    return out


class ThresholdReport(NamedTuple):
    threshold: float | None
    reason: str
    origin_at_zero: float
    origin_at_max: float


def threshold_report(params, n_max, rtol=1e-6):
    """Locate the dark-count rate where W(0, 0) crosses zero.

    ``reason`` is one of ``"found"``, ``"nonnegative"`` (no dip even without
    dark counts), ``"beyond_n_max"`` (still negative at ``n_max``) or
    ``"degenerate"`` (the detector cannot fire without dark counts).
    """
    if not np.isfinite(n_max) or n_max <= 0:
        raise DomainError(f"n_max must be > 0, got {n_max}")
    w0 = _origin(params.with_dark_rate(0.0))
    w_max = _origin(params.with_dark_rate(n_max))
    if math.isnan(w0):
        return ThresholdReport(None, "degenerate", w0, w_max)
    if not w0 < 0:
        return ThresholdReport(None, "nonnegative", w0, w_max)
    if w_max < 0:
        return ThresholdReport(None, "beyond_n_max", w0, w_max)
    root = bisect(
        lambda n: _origin(params.with_dark_rate(n)), 0.0, float(n_max),
        xtol=1e-300, rtol=rtol, maxiter=2000,
    )
    return ThresholdReport(float(root), "found", w0, w_max)


def negativity_threshold(params, n_max, rtol=1e-6):
    """Dark-count rate n* below which W(0, 0) < 0, or None if there is none in (0, n_max]."""
    return threshold_report(params, n_max, rtol).threshold
