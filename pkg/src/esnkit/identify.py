"""State estimation and hyperparameter learning for linear(ized) surrogates.

Conventions (shared with :mod:`esnkit.core` and the CSV loader):

* states are indexed 0..T, inputs 0..T-1, observations 1..T;
* ``outputs[t-1]`` measures ``states[t]``;
* the filter prior ``(mu0, P0)`` describes x_0, and the first measurement
  update happens at t = 1 after one prediction.

The EM machinery estimates (A, B, Q, R) -- optionally with A constrained to
the structured span ``theta1 * I + theta2 * W_bar`` so that leak and spectral
scaling are recovered as ``lam = 1 - theta1``, ``alpha = theta2 / lam``.  The
structured M-step projects the unconstrained transition estimate onto the
span in Frobenius norm and then rescales ``alpha`` until the small-gain
margin ``(1 - lam) + lam * L_sigma * ||alpha * W_bar|| <= 1 - 1e-6`` holds;
because that projection is not exact coordinate ascent, a structured step is
allowed to decrease the likelihood and is flagged instead of failing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from ._linalg import as_float_array, check_psd, spectral_norm, symmetrize
from .core import Readout, ReservoirParams, activation_eval
from .linearize import LtiModel, jacobians_at
from .stability import Certificate, CertificateMethod, Verdict

__all__ = [
    "NoiseModel", "SmoothedPosterior", "StructuredBasis", "StructuredTheta",
    "EmStepResult", "EmResult", "SubspaceResult", "kalman_filter",
    "rts_smoother", "ekf_filter", "em_step", "em_run", "readout_ml",
    "readout_bayes", "BayesReadoutPosterior", "project_structured",
    "excitation_sigma_min", "subspace_shape",
]

logger = logging.getLogger(__name__)

_JITTER = 1e-12
_FEASIBILITY_MARGIN = 1e-6
_LAM_FLOOR = 1e-6
_ALPHA_FLOOR = 1e-12
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NoiseModel:
    """Process / measurement covariances (Q, R), symmetrized on construction."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", check_psd(self.Q, "Q"))
        object.__setattr__(self, "R", check_psd(self.R, "R"))

    def to_dict(self) -> dict:
        return {"Q": self.Q.tolist(), "R": self.R.tolist()}


@dataclass(frozen=True)
class SmoothedPosterior:
    """Filter / smoother outputs.

    ``filtered_*`` run over t = 0..T, ``predicted_*`` over t = 1..T (index
    t-1 stores the one-step prediction of x_t), smoothed quantities over
    t = 0..T, and ``cross_covs[t]`` is Cov(x_t, x_{t+1} | y_{1:T}) for
    t = 0..T-1.  Smoothed fields are None on a pure filter pass.
    ``time_varying`` flags that per-step linearizations were used (the
    smoother then reuses the LTI cross-covariance formula per step).
    """

    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    predicted_means: np.ndarray
    predicted_covs: np.ndarray
    loglik: float
    smoothed_means: Optional[np.ndarray] = None
    smoothed_covs: Optional[np.ndarray] = None
    cross_covs: Optional[np.ndarray] = None
    time_varying: bool = False
    transition_seq: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return self.predicted_means.shape[0]


def _validate_io(n: int, m: int, p: int, inputs, outputs, prior):
    inputs = as_float_array(inputs, "inputs")
    outputs = as_float_array(outputs, "outputs")
    if inputs.ndim != 2 or inputs.shape[1] != m:
        raise ValueError(f"inputs must be (T, {m}), got {inputs.shape}")
    if outputs.ndim != 2 or outputs.shape[1] != p:
        raise ValueError(f"outputs must be (T, {p}), got {outputs.shape}")
    if inputs.shape[0] != outputs.shape[0]:
        raise ValueError("inputs and outputs must have equal length")
    mu0 = as_float_array(prior[0], "mu0")
    p0 = check_psd(np.asarray(prior[1], dtype=np.float64), "P0")
    if mu0.shape != (n,) or p0.shape != (n, n):
        raise ValueError("prior dimensions do not match the state")
    return inputs, outputs, mu0, p0


def _innovation_chol(s: np.ndarray, t: int):
    try:
        return scipy.linalg.cho_factor(s, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        pass
    jitter = _JITTER * max(1.0, float(np.trace(s)) / s.shape[0])
    try:
        return scipy.linalg.cho_factor(s + jitter * np.eye(s.shape[0]),
                                       lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError(
            f"innovation covariance not positive definite at time index {t}") from exc


def kalman_filter(lti: LtiModel, noise: NoiseModel, inputs, outputs,
                  prior: Tuple[np.ndarray, np.ndarray]) -> SmoothedPosterior:
    """Forward Kalman pass with innovations log-likelihood.

    Covariance updates use the Joseph form and are re-symmetrized each step.
    The model must be strictly proper (D = 0); observations are ``y_t = C x_t
    + v_t``.
    """
    if np.any(lti.D != 0.0):
        raise ValueError("kalman_filter requires D = 0")
    inputs, outputs, mu0, p0 = _validate_io(lti.n, lti.m, lti.p, inputs,
                                            outputs, prior)
    return _filter_loop(lti.A, lti.B, lti.C, noise, inputs, outputs, mu0, p0,
                        nonlinear=None)


def _filter_loop(a, b, c, noise, inputs, outputs, mu0, p0, nonlinear):
    """Shared filter core.  ``nonlinear``, when given, is a callable
    (mu, u) -> (next_mean, A_t) implementing EKF mean propagation; the
    linear path uses the constant (a, b)."""
    horizon, n = inputs.shape[0], mu0.shape[0]
    p_dim = outputs.shape[1]
    q, r = noise.Q, noise.R
    eye = np.eye(n)

    f_means = np.empty((horizon + 1, n))
    f_covs = np.empty((horizon + 1, n, n))
    p_means = np.empty((horizon, n))
    p_covs = np.empty((horizon, n, n))
    a_seq = np.empty((horizon, n, n)) if nonlinear is not None else None

    f_means[0] = mu0
    f_covs[0] = p0
    mu, cov = mu0, p0
    loglik = 0.0
    offset = nonlinear[1] if nonlinear is not None else np.zeros(p_dim)
    for t in range(horizon):
        if nonlinear is not None:
            mu_pred, a_t = nonlinear[0](mu, inputs[t])
            a_seq[t] = a_t
        else:
            mu_pred = a @ mu + b @ inputs[t]
            a_t = a
        cov_pred = symmetrize(a_t @ cov @ a_t.T + q)
        p_means[t] = mu_pred
        p_covs[t] = cov_pred

        innov = outputs[t] - c @ mu_pred - offset
        s = symmetrize(c @ cov_pred @ c.T + r)
        chol = _innovation_chol(s, t + 1)
        gain = scipy.linalg.cho_solve(chol, c @ cov_pred).T
        mu = mu_pred + gain @ innov
        ikc = eye - gain @ c
        cov = symmetrize(ikc @ cov_pred @ ikc.T + gain @ r @ gain.T)
        f_means[t + 1] = mu
        f_covs[t + 1] = cov

        white = scipy.linalg.solve_triangular(chol[0], innov, lower=True)
        logdet = 2.0 * float(np.log(np.diag(chol[0])).sum())
        loglik -= 0.5 * (p_dim * _LOG_2PI + logdet + float(white @ white))

    return SmoothedPosterior(filtered_means=f_means, filtered_covs=f_covs,
                             predicted_means=p_means, predicted_covs=p_covs,
                             loglik=loglik,
                             time_varying=nonlinear is not None,
                             transition_seq=a_seq)


def rts_smoother(filtered: SmoothedPosterior, lti: LtiModel,
                 noise: NoiseModel) -> SmoothedPosterior:
    """Backward Rauch-Tung-Striebel pass.

    Produces smoothed means/covariances and the cross-covariances
    ``Cov(x_t, x_{t+1} | y_{1:T}) = J_t P_{t+1|T}``.  For time-varying filter
    output the per-step transition matrices recorded by the filter are used
    with the same (LTI) cross-covariance formula.
    """
    horizon = filtered.horizon
    n = filtered.filtered_means.shape[1]
    s_means = np.empty((horizon + 1, n))
    s_covs = np.empty((horizon + 1, n, n))
    cross = np.empty((horizon, n, n))
    s_means[horizon] = filtered.filtered_means[horizon]
    s_covs[horizon] = filtered.filtered_covs[horizon]

    for t in range(horizon - 1, -1, -1):
        a_t = (filtered.transition_seq[t]
               if filtered.transition_seq is not None else lti.A)
        p_f = filtered.filtered_covs[t]
        p_pred = filtered.predicted_covs[t]
        try:
            gain = np.linalg.solve(p_pred, a_t @ p_f).T
        except np.linalg.LinAlgError:
            p_pred = p_pred + _JITTER * np.eye(n)
            try:
                gain = np.linalg.solve(p_pred, a_t @ p_f).T
            except np.linalg.LinAlgError as exc:
                raise ValueError(
                    f"singular predicted covariance at time index {t + 1}") from exc
        s_means[t] = filtered.filtered_means[t] + gain @ (
            s_means[t + 1] - filtered.predicted_means[t])
        s_covs[t] = symmetrize(p_f + gain @ (s_covs[t + 1] - p_pred) @ gain.T)
        cross[t] = gain @ s_covs[t + 1]

    return SmoothedPosterior(
        filtered_means=filtered.filtered_means,
        filtered_covs=filtered.filtered_covs,
        predicted_means=filtered.predicted_means,
        predicted_covs=filtered.predicted_covs,
        loglik=filtered.loglik,
        smoothed_means=s_means,
        smoothed_covs=s_covs,
        cross_covs=cross,
        time_varying=filtered.time_varying,
        transition_seq=filtered.transition_seq)


def ekf_filter(params: ReservoirParams, readout: Readout, noise: NoiseModel,
               inputs, outputs, prior) -> SmoothedPosterior:
    """Extended Kalman filter on the nonlinear reservoir.

    The mean is propagated through the full nonlinear update; covariances use
    the Jacobian linearization at the current filtered mean (so the recorded
    transition sequence is time varying).
    """
    inputs, outputs, mu0, p0 = _validate_io(params.n, params.m, readout.p,
                                            inputs, outputs, prior)
    lam = params.leak

    def step(mu, u):
        xi = params.preactivation(mu, u)
        value, slope = activation_eval(params.activation, xi)
        mean_next = (1.0 - lam) * mu + lam * value
        a_t = (1.0 - lam) * np.eye(params.n) + lam * (slope[:, None] * params.W)
        return mean_next, a_t

    return _filter_loop(None, None, readout.C, noise, inputs, outputs, mu0,
                        p0, nonlinear=(step, readout.d))


# ---------------------------------------------------------------------------
# EM


@dataclass(frozen=True)
class StructuredBasis:
    """Span basis {I, W_bar} with the activation slope bound used by the
    feasibility constraint."""

    W_bar: np.ndarray
    l_sigma: float = 1.0

    def __post_init__(self):
        w = as_float_array(self.W_bar, "W_bar")
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("W_bar must be square")
        if not self.l_sigma > 0.0:
            raise ValueError("l_sigma must be positive")
        object.__setattr__(self, "W_bar", w)


@dataclass(frozen=True)
class StructuredTheta:
    """Structured transition coordinates after feasibility projection.

    Invariants: theta1 = 1 - lam and theta2 = lam * alpha exactly, and the
    small-gain margin holds whenever ``feasible`` is True.  ``clamped``
    records that the raw least-squares coordinates were moved.
    """

    theta1: float
    theta2: float
    lam: float
    alpha: float
    basis: StructuredBasis
    clamped: bool = False
    feasible: bool = True

    @property
    def A(self) -> np.ndarray:
        n = self.basis.W_bar.shape[0]
        return self.theta1 * np.eye(n) + self.theta2 * self.basis.W_bar


def project_structured(a_matrix: np.ndarray,
                       basis: StructuredBasis) -> StructuredTheta:
    """Frobenius projection of a transition matrix onto span{I, W_bar},
    followed by the nearest-feasible rescaling of (lam, alpha).

    The projection solves the 2x2 normal equations of
    ``min || theta1 I + theta2 W_bar - A ||_F``; leak is clamped to
    (1e-6, 1], alpha floored positive, then alpha shrunk until
    ``(1 - lam) + lam * L_sigma * alpha * ||W_bar|| <= 1 - 1e-6``.
    """
    a_matrix = np.asarray(a_matrix, dtype=np.float64)
    w_bar = basis.W_bar
    n = w_bar.shape[0]
    if a_matrix.shape != (n, n):
        raise ValueError("matrix and basis dimensions differ")
    gram = np.array([
        [float(n), float(np.trace(w_bar))],
        [float(np.trace(w_bar)), float(np.sum(w_bar * w_bar))],
    ])
    rhs = np.array([float(np.trace(a_matrix)), float(np.sum(w_bar * a_matrix))])
    # lstsq keeps degenerate bases (W_bar proportional to I, or zero) defined:
    # the minimum-norm coordinates are used
    theta, *_ = np.linalg.lstsq(gram, rhs, rcond=None)

    clamped = False
    lam = 1.0 - theta[0]
    if not (_LAM_FLOOR < lam <= 1.0):
        lam = min(max(lam, _LAM_FLOOR), 1.0)
        clamped = True
    alpha = theta[1] / lam
    if alpha <= 0.0:
        alpha = _ALPHA_FLOOR
        clamped = True

    feasible = True
    w_norm = spectral_norm(w_bar)
    if w_norm > 0.0:
        alpha_max = (lam - _FEASIBILITY_MARGIN) / (lam * basis.l_sigma * w_norm)
        if alpha_max <= 0.0:
            feasible = False
        elif alpha > alpha_max:
            alpha = alpha_max
            clamped = True
    return StructuredTheta(theta1=1.0 - lam, theta2=lam * alpha, lam=lam,
                           alpha=alpha, basis=basis, clamped=clamped,
                           feasible=feasible)


@dataclass(frozen=True)
class EmStepResult:
    lti: LtiModel
    noise: NoiseModel
    loglik: float
    theta: Optional[StructuredTheta] = None
    constrained: bool = False


def em_step(lti: LtiModel, noise: NoiseModel, inputs, outputs, prior,
            structure: Optional[StructuredBasis] = None) -> EmStepResult:
    """One EM iteration: smoother E-step, then closed-form (A, B, Q, R).

    The returned log-likelihood is the one evaluated under the *input*
    parameters (the quantity EM drives upward).  The transition update solves
    the stacked normal equations for [A B] jointly; with a structured basis
    the A part is projected afterwards (see :func:`project_structured`).
    A singular regression Gram is repaired with a logged ridge of
    ``1e-10 * trace / dim``.
    """
    post = rts_smoother(kalman_filter(lti, noise, inputs, outputs, prior),
                        lti, noise)
    inputs = np.asarray(inputs, dtype=np.float64)
    outputs = np.asarray(outputs, dtype=np.float64)
    horizon = post.horizon
    n, m = lti.n, lti.m
    mu = post.smoothed_means
    covs = post.smoothed_covs
    cross = post.cross_covs

    s_xx = covs[:-1].sum(axis=0) + mu[:-1].T @ mu[:-1]
    s_11 = covs[1:].sum(axis=0) + mu[1:].T @ mu[1:]
    s_1x = cross.sum(axis=0).T + mu[1:].T @ mu[:-1]
    s_xu = mu[:-1].T @ inputs
    s_1u = mu[1:].T @ inputs
    s_uu = inputs.T @ inputs

    gram = np.block([[s_xx, s_xu], [s_xu.T, s_uu]])
    rhs = np.hstack([s_1x, s_1u])
    svals = np.linalg.svd(gram, compute_uv=False)
    if svals[-1] <= 1e-13 * max(svals[0], 1.0):
        ridge = 1e-10 * float(np.trace(gram)) / gram.shape[0]
        logger.warning("singular EM regression Gram; adding ridge %.3e", ridge)
        gram = gram + ridge * np.eye(gram.shape[0])
    coeffs = np.linalg.solve(gram, rhs.T).T
    a_ls = coeffs[:, :n]
    b_new = coeffs[:, n:]

    theta = None
    constrained = False
    if structure is not None:
        theta = project_structured(a_ls, structure)
        a_new = theta.A
        constrained = theta.clamped
    else:
        a_new = a_ls

    resid = (s_11
             - a_new @ s_1x.T - s_1x @ a_new.T
             - b_new @ s_1u.T - s_1u @ b_new.T
             + a_new @ s_xx @ a_new.T
             + a_new @ s_xu @ b_new.T + b_new @ s_xu.T @ a_new.T
             + b_new @ s_uu @ b_new.T)
    q_new = _floor_psd(symmetrize(resid / horizon))

    y_resid = outputs - mu[1:] @ lti.C.T
    r_new = (y_resid.T @ y_resid
             + lti.C @ covs[1:].sum(axis=0) @ lti.C.T) / horizon
    r_new = _floor_psd(symmetrize(r_new))

    new_lti = LtiModel(A=a_new, B=b_new, C=lti.C, D=lti.D)
    return EmStepResult(lti=new_lti, noise=NoiseModel(Q=q_new, R=r_new),
                        loglik=post.loglik, theta=theta,
                        constrained=constrained)


def _floor_psd(mat: np.ndarray, floor: float = _JITTER) -> np.ndarray:
    min_eig = float(np.linalg.eigvalsh(mat).min())
    if min_eig < floor:
        mat = mat + (floor - min_eig) * np.eye(mat.shape[0])
    return mat


@dataclass(frozen=True)
class EmResult:
    lti: LtiModel
    noise: NoiseModel
    loglik_trace: np.ndarray
    theta: Optional[StructuredTheta] = None
    constrained_steps: Tuple[bool, ...] = ()

    @property
    def iterations(self) -> int:
        return self.loglik_trace.shape[0]


def em_run(lti: LtiModel, noise: NoiseModel, inputs, outputs, prior,
           structure: Optional[StructuredBasis] = None,
           max_iters: int = 200, rel_tol: float = 1e-8) -> EmResult:
    """Iterate :func:`em_step` until the relative log-likelihood improvement
    drops below ``rel_tol`` or ``max_iters`` is reached.

    On unconstrained runs a likelihood decrease beyond 1e-9 aborts (that is a
    bug, not a numerical quirk).  On structured runs a decrease can be caused
    by the span/feasibility projection; it is tolerated and the step is
    flagged in ``constrained_steps``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    trace: List[float] = []
    flags: List[bool] = []
    theta = None
    for _ in range(max_iters):
        step = em_step(lti, noise, inputs, outputs, prior, structure)
        constrained = step.constrained
        if trace:
            delta = step.loglik - trace[-1]
            if delta < -1e-9:
                if structure is None:
                    raise RuntimeError(
                        f"EM log-likelihood decreased by {-delta:.3e} on an "
                        "unconstrained run; this indicates a bug")
                constrained = True
        trace.append(step.loglik)
        flags.append(constrained)
        lti, noise, theta = step.lti, step.noise, step.theta
        if len(trace) >= 2:
            improvement = trace[-1] - trace[-2]
            if abs(improvement) < rel_tol * max(abs(trace[-2]), 1.0):
                break
    return EmResult(lti=lti, noise=noise, loglik_trace=np.array(trace),
                    theta=theta, constrained_steps=tuple(flags))


# ---------------------------------------------------------------------------
# Readout learning


def _states_and_covs(states) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if isinstance(states, SmoothedPosterior):
        if states.smoothed_means is None:
            raise ValueError("posterior has no smoothed estimates; run the smoother")
        return states.smoothed_means[1:], states.smoothed_covs[1:]
    arr = as_float_array(states, "states")
    if arr.ndim != 2:
        raise ValueError("states must be a (T, n) array or a SmoothedPosterior")
    return arr, None


def readout_ml(states, outputs, ridge: float = 0.0) -> Readout:
    """Maximum-likelihood readout under state uncertainty.

    ``states`` is a raw (T, n) array (zero state covariance) or a smoothed
    posterior, whose covariances enter the Gram as ``sum_t (P_t + x_t x_t')``.
    The offset d is fit by centering: means of x and y are removed before the
    solve and d recovered afterwards.
    """
    x_hat, covs = _states_and_covs(states)
    y = as_float_array(outputs, "outputs")
    if y.ndim != 2 or y.shape[0] != x_hat.shape[0]:
        raise ValueError("outputs must be (T, p) aligned with the states")
    if ridge < 0.0:
        raise ValueError("ridge must be >= 0")
    x_mean = x_hat.mean(axis=0)
    y_mean = y.mean(axis=0)
    xc = x_hat - x_mean
    yc = y - y_mean
    gram = xc.T @ xc
    if covs is not None:
        gram = gram + covs.sum(axis=0)
    gram = gram + ridge * np.eye(gram.shape[0])
    try:
        c = np.linalg.solve(gram, (yc.T @ xc).T).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular readout Gram; set ridge > 0") from exc
    d = y_mean - c @ x_mean
    return Readout(C=c, d=d)


@dataclass(frozen=True)
class BayesReadoutPosterior:
    """Gaussian posterior over vec(C) with Kronecker-structured precision
    ``tau * I + sum_t X_t (x) R^{-1}``; stored structurally and only
    densified on request (and refused beyond p*n = 10^4)."""

    tau: float
    state_moment: np.ndarray      # sum_t (P_t + x_t x_t'), n x n
    r_inv: np.ndarray             # p x p

    def dense_precision(self) -> np.ndarray:
        n = self.state_moment.shape[0]
        p = self.r_inv.shape[0]
        if p * n > 10_000:
            raise ValueError("dense precision refused for p * n > 1e4")
        return self.tau * np.eye(p * n) + np.kron(self.state_moment, self.r_inv)


def readout_bayes(states, outputs, tau_p: float,
                  R) -> Tuple[Readout, BayesReadoutPosterior]:
    """Bayesian readout: Gaussian prior vec(C) ~ N(0, tau_p^{-1} I).

    The posterior mean solves the Sylvester equation
    ``tau_p R C + C S = sum_t y_t x_t'`` with S the centered state second
    moment, which avoids densifying the Kronecker precision.  At p = 1,
    R = 1 this reduces exactly to :func:`readout_ml` with ridge = tau_p.
    """
    if not tau_p > 0.0:
        raise ValueError("prior precision tau_p must be positive")
    r = check_psd(np.asarray(R, dtype=np.float64), "R")
    if float(np.linalg.eigvalsh(r).min()) <= 0.0:
        raise ValueError("R must be positive definite")
    x_hat, covs = _states_and_covs(states)
    y = as_float_array(outputs, "outputs")
    if y.ndim != 2 or y.shape[0] != x_hat.shape[0]:
        raise ValueError("outputs must be (T, p) aligned with the states")
    x_mean = x_hat.mean(axis=0)
    y_mean = y.mean(axis=0)
    xc = x_hat - x_mean
    yc = y - y_mean
    s_moment = xc.T @ xc
    if covs is not None:
        s_moment = s_moment + covs.sum(axis=0)
    s_moment = symmetrize(s_moment)
    g = yc.T @ xc
    c = scipy.linalg.solve_sylvester(tau_p * r, s_moment, g)
    d = y_mean - c @ x_mean
    posterior = BayesReadoutPosterior(tau=float(tau_p), state_moment=s_moment,
                                      r_inv=np.linalg.inv(r))
    return Readout(C=c, d=d), posterior


# ---------------------------------------------------------------------------
# Subspace identification (Ho-Kalman) with structured projection


def excitation_sigma_min(inputs, depth: int) -> float:
    """Smallest singular value of the depth-r block input Toeplitz matrix
    (the persistent-excitation statistic)."""
    inputs = as_float_array(inputs, "inputs")
    horizon, m = inputs.shape
    if depth < 1 or horizon < depth:
        raise ValueError("need depth >= 1 and at least depth input samples")
    cols = np.lib.stride_tricks.sliding_window_view(inputs, (depth, m))
    mat = cols.reshape(-1, depth * m).T
    return float(np.linalg.svd(mat, compute_uv=False)[-1])


@dataclass(frozen=True)
class SubspaceResult:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    markov: np.ndarray
    theta: StructuredTheta
    certificate: Certificate


def _markov_from_io(inputs: np.ndarray, outputs: np.ndarray,
                    n_markov: int) -> np.ndarray:
    """Least-squares Markov parameters g_1..g_L of y_t = sum_k g_k u_{t-k}
    (strictly proper; assumes the run started at rest)."""
    horizon, m = inputs.shape
    p = outputs.shape[1]
    if horizon <= n_markov + m * n_markov:
        raise ValueError("not enough data for the requested Markov horizon")
    rows = horizon - n_markov
    regress = np.empty((rows, n_markov * m))
    for i, t in enumerate(range(n_markov, horizon)):
        # regressor [u_{t}, u_{t-1}, ..., u_{t-L+1}] paired with outputs[t]
        window = inputs[t - n_markov + 1:t + 1][::-1]
        regress[i] = window.ravel()
    target = outputs[n_markov:]
    coeffs, *_ = np.linalg.lstsq(regress, target, rcond=None)
    return coeffs.T.reshape(p, n_markov, m).transpose(1, 0, 2)


def subspace_shape(order: int, basis: StructuredBasis, *,
                   impulse: Optional[np.ndarray] = None,
                   inputs=None, outputs=None,
                   n_markov: Optional[int] = None,
                   sv_floor: float = 0.0) -> SubspaceResult:
    """Ho-Kalman realization followed by the structured contraction projection.

    Either pass ``impulse`` (the kernel blocks h_k = C A^k B, shape
    (K+1, p, m)) directly, or input/output data from a run started at rest,
    in which case Markov parameters are estimated by least squares after a
    persistent-excitation check (smallest block-Toeplitz singular value must
    exceed 1e-8).

    The balanced realization of order ``order`` comes from the truncated SVD
    of the block Hankel matrix (singular values below ``1e-8 * s_1`` or
    ``sv_floor`` are treated as rank); its transition matrix is then projected
    onto span{I, W_bar} and rescaled to the contraction margin, and the
    resulting small-gain certificate is attached.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if impulse is not None:
        markov = np.asarray(impulse, dtype=np.float64)
        if markov.ndim != 3:
            raise ValueError("impulse data must have shape (K+1, p, m)")
    else:
        if inputs is None or outputs is None:
            raise ValueError("provide either impulse data or inputs/outputs")
        inputs = as_float_array(inputs, "inputs")
        outputs = as_float_array(outputs, "outputs")
        sigma_min = excitation_sigma_min(inputs, order)
        if sigma_min <= 1e-8:
            raise ValueError(
                f"inputs are not persistently exciting at depth {order} "
                f"(sigma_min = {sigma_min:.3e})")
        length = n_markov if n_markov is not None else min(
            max(2 * order + 2, 20), inputs.shape[0] // 2)
        markov = _markov_from_io(inputs, outputs, length)

    count = markov.shape[0]
    if count < 2 * order + 1:
        raise ValueError(
            f"need at least 2 * order + 1 = {2 * order + 1} Markov blocks, "
            f"got {count}")
    p, m = markov.shape[1], markov.shape[2]
    q_blocks = (count + 1) // 2
    s_blocks = count - q_blocks          # q + s - 1 <= count - 1 for the shift
    hankel0 = np.block([[markov[i + j] for j in range(s_blocks)]
                        for i in range(q_blocks)])
    hankel1 = np.block([[markov[i + j + 1] for j in range(s_blocks)]
                        for i in range(q_blocks)])
    u_svd, svals, vt = np.linalg.svd(hankel0, full_matrices=False)
    effective = int(np.sum((svals >= 1e-8 * svals[0]) & (svals >= sv_floor)))
    if effective < order:
        raise ValueError(
            f"Hankel numerical rank {effective} is below the requested "
            f"order {order}")
    sqrt_s = np.sqrt(svals[:order])
    obs = u_svd[:, :order] * sqrt_s
    ctr = sqrt_s[:, None] * vt[:order]
    a_ssi = (u_svd[:, :order] / sqrt_s).T @ hankel1 @ (vt[:order].T / sqrt_s)
    c_ssi = obs[:p]
    b_ssi = ctr[:, :m]

    theta = project_structured(a_ssi, basis)
    kappa = ((1.0 - theta.lam) + theta.lam * basis.l_sigma
             * spectral_norm(theta.alpha * basis.W_bar))
    verdict = Verdict.PASS if (theta.feasible and kappa < 1.0) else Verdict.FAIL
    cert = Certificate(CertificateMethod.LIPSCHITZ_C1, kappa, verdict)
    return SubspaceResult(A=a_ssi, B=b_ssi, C=c_ssi, markov=markov,
                          theta=theta, certificate=cert)
