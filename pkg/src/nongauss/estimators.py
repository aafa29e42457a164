"""scikit-learn style wrappers around the library.

``ConditionalWigner`` treats phase-space points as samples: ``fit`` builds
the scenario and its Gaussian factors, ``predict`` returns W at each
(x, p) row. ``SpheroidalBasisTransformer`` expands a column of x in
[-1, 1] into spheroidal-function features S_0k(c, x).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .conditional_state import DEFAULT_BANDWIDTH_HZ, gaussian_factors, make_scenario, wigner_point
from .exceptions import DomainError
from .pswf import BandTimeProduct, eval_S, solve_spheroidal

__all__ = ["ConditionalWigner", "SpheroidalBasisTransformer"]


class ConditionalWigner(BaseEstimator):
    """Conditional Wigner function of photon-subtracted squeezed light.

    Parameters
    ----------
    bt : float
        Band-time product; 0 selects the perfectly matched single mode.
    scheme : str
        ``"cw_wideband"``, ``"cw_filtered"``, ``"pulsed"`` or ``"single_mode"``.
    gamma, tau, eta : float
        Squeezing parameter, beamsplitter transmittance, detector efficiency.
    dark_rate : float
        Detector dark counts per second.
    bandwidth_hz : float
        Squeezing bandwidth B.
    k_max : int or None
        Number of spheroidal modes; None picks it from the eigenvalue tail.

    Attributes
    ----------
    scenario_ : ScenarioParams
    factors_ : GaussianFactors
    p_det_ : float
        Trigger probability.
    origin_value_ : float
        W(0, 0).
    """

    def __init__(
        self,
        bt=1.0,
        scheme="cw_filtered",
        gamma=0.35,
        tau=0.9,
        eta=0.1,
        dark_rate=0.0,
        bandwidth_hz=DEFAULT_BANDWIDTH_HZ,
        k_max=None,
    ):
        self.bt = bt
        self.scheme = scheme
        self.gamma = gamma
        self.tau = tau
        self.eta = eta
        self.dark_rate = dark_rate
        self.bandwidth_hz = bandwidth_hz
        self.k_max = k_max

    def fit(self, X=None, y=None):
        """Build the scenario. ``X`` and ``y`` are ignored."""
        self.scenario_ = make_scenario(
            self.bt,
            scheme=self.scheme,
            bandwidth_hz=self.bandwidth_hz,
            gamma=self.gamma,
            tau=self.tau,
            eta=self.eta,
            dark_rate=self.dark_rate,
            k_max=self.k_max,
        )
        self.factors_ = gaussian_factors(self.scenario_)
        self.p_det_ = self.factors_.P_det
        self.origin_value_ = wigner_point(self.scenario_, 0.0, 0.0, self.factors_)
        return self

    def predict(self, X):
        """W at each row (x, p) of ``X``, shape (n_samples, 2)."""
        check_is_fitted(self, "factors_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns (x, p), got {X.shape[1]}")
        return np.asarray(wigner_point(self.scenario_, X[:, 0], X[:, 1], self.factors_))


class SpheroidalBasisTransformer(TransformerMixin, BaseEstimator):
    """Map a single column x in [-1, 1] to features S_0k(c, x), k < n_modes."""

    def __init__(self, bt=1.0, n_modes=5):
        self.bt = bt
        self.n_modes = n_modes

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column, got {X.shape[1]}")
        self.n_features_in_ = 1
        self.basis_ = solve_spheroidal(BandTimeProduct(self.bt).c, self.n_modes)
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column, got {X.shape[1]}")
        x = X[:, 0]
        if np.any(np.abs(x) > 1.0):
            raise DomainError("inputs must lie in [-1, 1]")
        return np.column_stack([eval_S(self.basis_, k, x) for k in range(self.n_modes)])
