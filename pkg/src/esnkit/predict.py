"""h-step probabilistic prediction from a filtered belief.

The h-step output distribution of a linear-Gaussian surrogate is Gaussian
with mean C A^h mu + sum_j C A^j B u and covariance C Sigma_h C' + R, where
Sigma_h accumulates the propagated belief covariance and h process-noise
injections.  Everything is built iteratively (never through explicit matrix
powers).  For the nonlinear reservoir, compose an EKF pass with this
operation on the final linearization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._linalg import as_float_array, check_psd, symmetrize
from .identify import NoiseModel
from .linearize import LtiModel

__all__ = ["PredictiveDistribution", "predictive"]

# two-sided 95% normal quantile
_Z95 = 1.959963984540054


@dataclass(frozen=True)
class PredictiveDistribution:
    """Gaussian forecast of y_{t+h}: output mean/covariance plus the
    propagated state covariance Sigma_h."""

    horizon: int
    mean: np.ndarray
    covariance: np.ndarray
    state_cov: np.ndarray

    def interval_half_widths(self) -> np.ndarray:
        """Half-widths of the central 95% credible interval per output."""
        return _Z95 * np.sqrt(np.diag(self.covariance))


def predictive(lti: LtiModel, noise: NoiseModel,
               belief: Tuple[np.ndarray, np.ndarray],
               future_inputs) -> PredictiveDistribution:
    """Distribution of y_{t+h} given the filtered belief (mu, P) at time t
    and the h future inputs u_t .. u_{t+h-1}."""
    mu = as_float_array(belief[0], "belief mean")
    cov = check_psd(np.asarray(belief[1], dtype=np.float64), "belief covariance")
    inputs = np.atleast_2d(as_float_array(future_inputs, "future_inputs"))
    if mu.shape != (lti.n,) or cov.shape != (lti.n, lti.n):
        raise ValueError("belief dimensions do not match the model")
    if inputs.shape[1] != lti.m:
        raise ValueError(f"future inputs must be (h, {lti.m}), got {inputs.shape}")
    horizon = inputs.shape[0]
    if horizon < 1:
        raise ValueError("need at least one future input (h >= 1)")

    mean = mu.copy()
    sigma = cov.copy()
    for j in range(horizon):
        mean = lti.A @ mean + lti.B @ inputs[j]
        sigma = symmetrize(lti.A @ sigma @ lti.A.T + noise.Q)
    out_mean = lti.C @ mean
    out_cov = symmetrize(lti.C @ sigma @ lti.C.T + noise.R)
    return PredictiveDistribution(horizon=horizon, mean=out_mean,
                                  covariance=out_cov, state_cov=sigma)
