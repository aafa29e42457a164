"""Brute-force checks of the closed-form conditional Wigner function.

Two routes, independent of the closed form and of each other:

* a truncated Fock-space calculation for a single mode (squeezed vacuum,
  beamsplitter, "off" POVM on the reflected mode, partial trace);
* a phase-space Gaussian-operator calculation for several modes, where the
  beamsplitter is a symplectic map on a covariance matrix, the detector's
  "off" element is integrated out as a Gaussian, and the LO-matched mode is
  a linear marginal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .conditional_state import make_scenario, wigner_point
from .exceptions import ConvergenceError, DegenerateScenarioError, DomainError, TruncationError
from .photodetection import povm_counts
from .spectral_modes import Scheme

__all__ = [
    "FockOracleConfig",
    "GaussianOracleConfig",
    "squeezed_vacuum_amplitudes",
    "squeezed_tail_mass",
    "fock_conditional_state",
    "fock_wigner",
    "density_wigner",
    "fock_wigner_origin",
    "gaussian_operator_wigner",
    "run_verification",
    "VERIFY_TOL",
]

TAIL_TOL = 1e-12
VERIFY_TOL = 1e-8
COND_LIMIT = 1e13


@dataclass(frozen=True)
class FockOracleConfig:
    """Single-mode scenario for the Fock-space oracle.

    ``cutoff=None`` picks 40, or 80 when ``gamma > 0.5``.
    """

    gamma: float
    tau: float
    eta: float
    nu: float
    cutoff: int | None = None

    @property
    def resolved_cutoff(self):
        if self.cutoff is not None:
            return int(self.cutoff)
        return 80 if abs(self.gamma) > 0.5 else 40


def squeezed_vacuum_amplitudes(gamma, cutoff):
    """Fock amplitudes of exp[(gamma/2)(a^2 - a^dag^2)]|0> up to ``cutoff``."""
    amps = np.zeros(cutoff + 1)
    t = math.tanh(gamma)
    for n in range(cutoff // 2 + 1):
        amps[2 * n] = _even_amplitude(n, t, gamma)
    return amps


def _even_amplitude(n, t, gamma):
    if n == 0:
        return 1.0 / math.sqrt(math.cosh(gamma))
    if t == 0.0:
        return 0.0
    log_mag = (
        n * math.log(abs(t)) + 0.5 * math.lgamma(2 * n + 1) - n * math.log(2.0)
        - math.lgamma(n + 1) - 0.5 * math.log(math.cosh(gamma))
    )
    return (-math.copysign(1.0, t)) ** n * math.exp(log_mag)


def squeezed_tail_mass(gamma, cutoff):
    """Probability of more than ``cutoff`` photons in the squeezed vacuum."""
    t = math.tanh(gamma)
    if t == 0.0:
        return 0.0
    total = 0.0
    n = cutoff // 2 + 1
    while True:
        term = _even_amplitude(n, t, gamma) ** 2
        total += term
        if term < 1e-30 * max(total, 1e-300) or n > 100000:
            return total
        n += 1


def _minimal_cutoff(gamma):
    cutoff = 2
    while squeezed_tail_mass(gamma, cutoff) >= TAIL_TOL:
        cutoff += 2
    return cutoff


def fock_conditional_state(cfg):
    """Return ``(rho_A, P_det)`` for the heralded single-mode state.

    ``rho_A`` is the normalized density matrix on the transmitted mode.
    """
    cutoff = cfg.resolved_cutoff
    tail = squeezed_tail_mass(cfg.gamma, cutoff)
    if tail >= TAIL_TOL:
        need = _minimal_cutoff(cfg.gamma)
        raise TruncationError(
            f"squeezed-state tail mass {tail:.2e} beyond cutoff {cutoff}; "
            f"use cutoff >= {need}",
            safe_bound=need,
        )
    amps = squeezed_vacuum_amplitudes(cfg.gamma, cutoff)
    tau = cfg.tau
    # |m> -> sum_j sqrt(C(m, j)) tau^{(m-j)/2} (-sqrt(1-tau))^j |m-j>_A |j>_B
    joint = np.zeros((cutoff + 1, cutoff + 1))
    for m in np.nonzero(amps)[0]:
        j = np.arange(m + 1)
        log_binom = 0.5 * (gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1))
        coef = np.exp(log_binom) * _pow(math.sqrt(tau), m - j) * _pow(-math.sqrt(1.0 - tau), j)
        joint[m - j, j] += amps[m] * coef
    rho_all = joint @ joint.T
    off = povm_counts(0, cfg.eta, cfg.nu, cutoff)
    rho_off = (joint * off[None, :]) @ joint.T
    p_det = 1.0 - float(np.trace(rho_off))
    if p_det < 1e-12:
        raise DegenerateScenarioError(f"trigger probability {p_det:.3e} too small", p_det=p_det)
    return (rho_all - rho_off) / p_det, p_det


def _pow(base, exponent):
    exponent = np.asarray(exponent, dtype=float)
    if base == 0.0:
        return np.where(exponent == 0, 1.0, 0.0)
    return np.sign(base) ** exponent * np.abs(base) ** exponent


def density_wigner(rho, x, p):
    """Wigner function of a real Fock-basis density matrix at (x, p).

    Uses the Laguerre expansion of |m><n|, with alpha = (x + ip)/sqrt(2) and
    the vacuum mapped to exp(-x^2 - p^2)/pi.
    """
    alpha = (x + 1j * p) / math.sqrt(2.0)
    r2 = 4.0 * abs(alpha) ** 2
    dim = rho.shape[0]
    total = 0.0
    for m in range(dim):
        if rho[m, m] != 0.0:
            total += rho[m, m] * (-1) ** m * eval_genlaguerre(m, 0, r2)
        for n in range(m + 1, dim):
            if rho[m, n] == 0.0 and rho[n, m] == 0.0:
                continue
            k = n - m
            pref = (-1) ** m * math.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
            term = pref * (2.0 * alpha) ** k * eval_genlaguerre(m, k, r2)
            total += 2.0 * (rho[m, n] * term).real
    return float(total * math.exp(-0.5 * r2) / math.pi)


def fock_wigner(cfg, x, p):
    """Wigner function of the Fock-space conditional state at (x, p)."""
    rho, _ = fock_conditional_state(cfg)
    return density_wigner(rho, float(x), float(p))


def fock_wigner_origin(cfg):
    """W(0, 0) from the parity expectation, (1/pi) sum_m (-1)^m rho_mm."""
    rho, _ = fock_conditional_state(cfg)
    signs = (-1.0) ** np.arange(rho.shape[0])
    return float(signs @ np.diag(rho)) / math.pi


@dataclass(frozen=True, eq=False)
class GaussianOracleConfig:
    """Multimode scenario for the Gaussian-operator oracle."""

    lam: np.ndarray
    wS: np.ndarray
    wV: np.ndarray
    tau: float
    eta_k: np.ndarray
    nu_total: float

    def __post_init__(self):
        if not (len(self.lam) == len(self.wS) == len(self.eta_k)):
            raise DomainError("lam, wS and eta_k must have one entry per mode")
        if np.any(np.abs(self.lam) >= 1.0):
            raise DomainError("|lam| must be < 1")

    @property
    def M(self):
        return len(self.lam)

    @classmethod
    def from_scenario(cls, params):
        n = len(params.weights.wS)
        return cls(
            lam=np.array(params.spec.lam[:n]),
            wS=np.array(params.weights.wS),
            wV=np.array(params.weights.wV),
            tau=params.tau,
            eta_k=np.array(params.det.eta_k),
            nu_total=params.det.nu_total,
        )


def _check_conditioning(name, mat):
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConvergenceError(f"{name} is numerically singular (condition number {cond:.2e})")


def _lo_marginal(cov_a, cfg):
    """2x2 covariance of the LO-matched quadratures (x~, p~)."""
    M = cfg.M
    vac = 0.5 * float(np.sum(cfg.wV**2))
    e = np.zeros((2, 2 * M))
    e[0, :M] = cfg.wS
    e[1, M:] = cfg.wS
    return e @ cov_a @ e.T + vac * np.eye(2)


def _gauss2(x, p, cov):
    v = np.array([x, p])
    return math.exp(-0.5 * v @ np.linalg.solve(cov, v)) / (2.0 * math.pi * math.sqrt(np.linalg.det(cov)))


def gaussian_operator_terms(cfg):
    """Return ``(cov_uncond, cov_off, trace_off)`` on the LO-matched mode."""
    M = cfg.M
    r = np.arctanh(cfg.lam)
    # phase-space ordering: (xA, pA, xB, pB), each block M long
    var_in = np.concatenate([np.exp(-2 * r) / 2, np.exp(2 * r) / 2, np.full(2 * M, 0.5)])
    cov_in = np.diag(var_in)
    t, s = math.sqrt(cfg.tau), math.sqrt(1.0 - cfg.tau)
    eye = np.eye(2 * M)
    bs = np.block([[t * eye, s * eye], [-s * eye, t * eye]])
    cov = bs @ cov_in @ bs.T
    _check_conditioning("joint covariance", cov)

    n = 2 * M
    cov_a = cov[:n, :n]
    # off element: prod_k e^{-nu_k} (1 - eta_k)^{n_k}; its Wigner function is
    # exp(-nu) / (pi (1 + s)) exp(-(1 - s)/(1 + s) (x^2 + p^2)), s = 1 - eta
    surv = 1.0 - cfg.eta_k
    d = np.tile(2.0 * (1.0 - surv) / (1.0 + surv), 2)
    log_const = -cfg.nu_total - float(np.sum(np.log(math.pi * (1.0 + surv))))
    Q = np.linalg.inv(cov)
    qaa, qab, qbb = Q[:n, :n], Q[:n, n:], Q[n:, n:] + np.diag(d)
    _check_conditioning("detector-weighted precision", qbb)
    q_cond = qaa - qab @ np.linalg.solve(qbb, qab.T)
    _check_conditioning("conditioned precision", q_cond)
    cov_off = np.linalg.inv(q_cond)
    _, logdet_cov = np.linalg.slogdet(cov)
    _, logdet_qbb = np.linalg.slogdet(qbb)
    _, logdet_off = np.linalg.slogdet(cov_off)
    # trace = (2pi)^M * const * (2pi)^{-2M} det(cov)^{-1/2} (2pi)^M det(qbb)^{-1/2}
    #         * (2pi)^M det(cov_off)^{1/2}, one 2pi per traced B mode
    log_trace = (
        M * math.log(2.0 * math.pi) + log_const
        - 0.5 * logdet_cov - 0.5 * logdet_qbb + 0.5 * logdet_off
    )
    return _lo_marginal(cov_a, cfg), _lo_marginal(cov_off, cfg), log_trace


def gaussian_operator_wigner(cfg, x, p):
    """Conditional Wigner function of the LO-matched mode from Gaussian operators."""
    cov_u, cov_off, log_trace = gaussian_operator_terms(cfg)
    p_det = -math.expm1(log_trace)
    if p_det < 1e-12:
        raise DegenerateScenarioError(f"trigger probability {p_det:.3e} too small", p_det=p_det)
    w_u = _gauss2(x, p, cov_u)
    w_off = math.exp(log_trace) * _gauss2(x, p, cov_off)
    return (w_u - w_off) / p_det


VERIFY_GRID = {
    "bt": (0.1, 0.5, 1.0),
    "gamma": (0.0, 0.2, 0.35),
    "tau": (0.8, 0.9, 0.99),
    "eta": (0.0, 0.1, 0.7, 1.0),
    "dark_rate": (0.0, 500.0, 5000.0),
    "scheme": (Scheme.CW_FILTERED.value, Scheme.CW_WIDEBAND.value, Scheme.PULSED.value),
}
VERIFY_MODES = 5
VERIFY_POINTS = 5
VERIFY_BANDWIDTH_HZ = 10e6


def _draw(rng):
    return {key: values[int(rng.integers(len(values)))] for key, values in VERIFY_GRID.items()}


def verify_draw(draw, points):
    """Compare closed form against both oracles for one parameter draw."""
    common = dict(
        gamma=draw["gamma"], tau=draw["tau"], eta=draw["eta"],
        dark_rate=draw["dark_rate"], bandwidth_hz=VERIFY_BANDWIDTH_HZ,
    )
    multi = make_scenario(draw["bt"], scheme=draw["scheme"], k_max=VERIFY_MODES, **common)
    single = make_scenario(
        scheme=Scheme.SINGLE_MODE, duration_s=draw["bt"] / VERIFY_BANDWIDTH_HZ, **common
    )
    result = {"gaussian_oracle": None, "fock_oracle": None, "status": "ok"}
    try:
        g_cfg = GaussianOracleConfig.from_scenario(multi)
        result["gaussian_oracle"] = max(
            abs(wigner_point(multi, x, p) - gaussian_operator_wigner(g_cfg, x, p)) for x, p in points
        )
    except DegenerateScenarioError:
        result["status"] = "degenerate"
    try:
        f_cfg = FockOracleConfig(
            draw["gamma"], draw["tau"], draw["eta"], single.det.nu_total
        )
        rho, _ = fock_conditional_state(f_cfg)
        result["fock_oracle"] = max(
            abs(wigner_point(single, x, p) - density_wigner(rho, x, p)) for x, p in points
        )
    except DegenerateScenarioError:
        result["status"] = "degenerate"
    return result


def run_verification(seed=0, draws=20, tol=VERIFY_TOL):
    """Randomized closed-form versus oracle comparison.

    Returns a report dict; ``report["passed"]`` is False if any deviation
    exceeds ``tol``. Draws whose trigger probability is degenerate in either
    route are reported with status ``"degenerate"`` and the other route's
    deviation where available.
    """
    if draws < 0:
        raise DomainError(f"draws must be >= 0, got {draws}")
    rng = np.random.default_rng(seed)
    rows = []
    for index in range(draws):
        draw = _draw(rng)
        points = [tuple(float(v) for v in rng.uniform(-2.0, 2.0, size=2)) for _ in range(VERIFY_POINTS)]
        outcome = verify_draw(draw, points)
        devs = [v for v in (outcome["gaussian_oracle"], outcome["fock_oracle"]) if v is not None]
        rows.append({
            "draw": index,
            "params": draw,
            "points": points,
            "max_deviation_gaussian": outcome["gaussian_oracle"],
            "max_deviation_fock": outcome["fock_oracle"],
            "max_deviation": max(devs) if devs else None,
            "status": outcome["status"],
        })
    worst = max((r["max_deviation"] for r in rows if r["max_deviation"] is not None), default=0.0)
    return {
        "seed": seed,
        "draws": draws,
        "tolerance": tol,
        "max_deviation": worst,
        "passed": bool(worst <= tol),
        "results": rows,
    }
