"""Contraction certificates, memory horizons, and stacked-reservoir radii.

Three checkable routes to a geometric contraction rate kappa < 1 (which is
what guarantees unique input-driven trajectories and fading memory):

* ``certify_lipschitz`` -- the global small-gain bound
  kappa = (1 - leak) + leak * ||W||_2 * L_sigma.
* ``certify_weighted`` -- a quadratic (weighted-norm) certificate obtained by
  solving a discrete Lyapunov equation for a candidate weight P and then
  verifying the slope-vertex matrix inequalities.
* spectral radius of a small-signal Jacobian (via :func:`spectral_radius`),
  a local condition composed by callers.

Why vertices suffice for the weighted test: the one-step Jacobian family is
M(D) = (1-leak) I + leak * D W with D diagonal, slopes D_ii in [0, L_sigma].
For any vector v, the quadratic form v' M(D)' P M(D) v is convex in the
entries of D (affine map composed with a squared seminorm), so its maximum
over the slope box is attained at a vertex of {0, L_sigma}^n.  Checking all
2^n vertices is therefore exact; when the budget forbids enumeration we fall
back to deterministic low-discrepancy samples, which can only ever report
"Unknown" on success.  Slopes are taken in [0, L_sigma], which is correct
for the closed activation table (tanh/identity/leaky all have nonnegative
slopes).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from ._linalg import solve_discrete_lyapunov, spectral_norm, symmetrize
from .core import ReservoirParams

__all__ = [
    "CertificateMethod",
    "Verdict",
    "Certificate",
    "HorizonEstimate",
    "certify_lipschitz",
    "certify_weighted",
    "spectral_radius",
    "memory_horizon",
    "deep_stack_radius",
]

# Bisection controls for the weighted certificate.
_BISECT_ITERS = 60
_BISECT_TOL = 1e-6
_VERTEX_SLACK = 1e-11


class CertificateMethod(str, Enum):
    LIPSCHITZ_C1 = "LipschitzC1"
    SPECTRAL_C3 = "SpectralC3"
    WEIGHTED_C2 = "WeightedC2"
    RF_SMALL_GAIN = "RfSmallGain"


class Verdict(str, Enum):
    PASS = "Pass"
    FAIL = "Fail"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Certificate:
    """Outcome of a stability test.

    ``kappa`` is the contraction factor the test established (or the bound it
    failed at), ``margin = 1 - kappa``.  ``weight_P`` is only present for the
    weighted certificate and then defines the norm in which contraction was
    verified.
    """

    method: CertificateMethod
    kappa: float
    verdict: Verdict
    weight_P: Optional[np.ndarray] = None

    @property
    def margin(self) -> float:
        return 1.0 - self.kappa

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def to_dict(self) -> dict:
        out = {
            "method": self.method.value,
            "kappa": self.kappa,
            "margin": self.margin,
            "verdict": self.verdict.value,
        }
        if self.weight_P is not None:
            out["P"] = self.weight_P.tolist()
        return out


@dataclass(frozen=True)
class HorizonEstimate:
    """Effective memory horizon: lags beyond ``horizon`` move the state by < tolerance."""

    kappa: float
    input_gain: float
    amplitude: float
    tolerance: float
    horizon: int


def certify_lipschitz(params: ReservoirParams) -> Certificate:
    """Global small-gain certificate kappa = (1 - leak) + leak ||W|| L_sigma.

    Pass requires kappa < 1 strictly; the boundary kappa = 1 fails.
    """
    lam = params.leak
    kappa = (1.0 - lam) + lam * spectral_norm(params.W) * params.activation.lipschitz
    verdict = Verdict.PASS if kappa < 1.0 else Verdict.FAIL
    return Certificate(CertificateMethod.LIPSCHITZ_C1, kappa, verdict)


def spectral_radius(a) -> float:
    """max |eigenvalue| of a square matrix; raises instead of silently estimating."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if a.size == 0:
        return 0.0
    try:
        eigs = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("eigensolver did not converge") from exc
    return float(np.abs(eigs).max())


def _slope_vertices(n: int, l_sigma: float, budget: int):
    """Diagonal slope matrices to check: exhaustive if 2^n fits the budget,
    otherwise Halton samples of the box plus the two extreme vertices."""
    if n <= 60 and 2 ** n <= budget:
        grid = (np.array(v, dtype=np.float64) * l_sigma
                for v in itertools.product((0.0, 1.0), repeat=n))
        return list(grid), True
    sampler = qmc.Halton(d=n, scramble=False)
    samples = sampler.random(budget) * l_sigma
    diags = [np.zeros(n), np.full(n, l_sigma)]
    diags.extend(samples)
    return diags, False


def _weighted_gain(m: np.ndarray, p_chol_t: np.ndarray) -> float:
    """Operator norm of m in the P-norm, with p_chol_t = L^T from P = L L^T."""
    return spectral_norm(p_chol_t @ m @ np.linalg.inv(p_chol_t))


def certify_weighted(params: ReservoirParams, vertex_budget: int = 4096) -> Certificate:
    """Weighted quadratic contraction certificate over the slope box.

    Candidate weights come from the Lyapunov equation
    ``A+' P A+ - kappa^2 P = -I`` at ``A+ = (1-leak) I + leak L_sigma W``,
    with kappa bisected over [max(0, 1-leak), 1].  Each candidate is accepted
    only if every slope vertex satisfies ``M' P M <= kappa^2 P``; sampled
    (non-exhaustive) verification can at best report Unknown.
    """
    if vertex_budget < 1:
        raise ValueError("vertex_budget must be >= 1")
    n = params.n
    lam = params.leak
    l_sigma = params.activation.lipschitz
    a_plus = (1.0 - lam) * np.eye(n) + lam * l_sigma * params.W
    rho_plus = spectral_radius(a_plus)
    diags, exhaustive = _slope_vertices(n, l_sigma, vertex_budget)

    def try_kappa(kappa: float):
        # Lyapunov solve is only defined past the spectral radius of A+.
        if kappa <= rho_plus or kappa <= 0.0:
            return None
        try:
            p = solve_discrete_lyapunov(a_plus.T / kappa, np.eye(n) / kappa ** 2)
        except np.linalg.LinAlgError:
            return None
        k2p = kappa ** 2 * p
        scale = float(np.abs(k2p).max())
        for d in diags:
            m = (1.0 - lam) * np.eye(n) + lam * (d[:, None] * params.W)
            gap = symmetrize(m.T @ p @ m) - k2p
            if float(np.linalg.eigvalsh(gap).max()) > _VERTEX_SLACK * max(scale, 1.0):
                return None
        return p

    lo = max(0.0, 1.0 - lam)
    hi = 1.0 - 1e-9
    best = try_kappa(hi)
    if best is None:
        return _weighted_failure(params, a_plus, rho_plus, diags)
    best_kappa = hi
    for _ in range(_BISECT_ITERS):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        p = try_kappa(mid)
        if p is not None:
            hi, best, best_kappa = mid, p, mid
        else:
            lo = mid
    verdict = Verdict.PASS if exhaustive else Verdict.UNKNOWN
    return Certificate(CertificateMethod.WEIGHTED_C2, best_kappa, verdict,
                       weight_P=best)


def _weighted_failure(params: ReservoirParams, a_plus: np.ndarray,
                      rho_plus: float, diags) -> Certificate:
    """No kappa < 1 was certifiable: report the actual bound in the best
    available weighted norm (>= 1 by construction)."""
    n = params.n
    lam = params.leak
    if rho_plus < 1.0 - 1e-9:
        p = solve_discrete_lyapunov(a_plus.T / (1.0 - 1e-9), np.eye(n))
    else:
        p = np.eye(n)
    chol_t = np.linalg.cholesky(symmetrize(p) + 1e-12 * np.eye(n)).T
    bound = 0.0
    for d in diags:
        m = (1.0 - lam) * np.eye(n) + lam * (d[:, None] * params.W)
        bound = max(bound, _weighted_gain(m, chol_t))
    return Certificate(CertificateMethod.WEIGHTED_C2, max(bound, 1.0),
                       Verdict.FAIL)


def memory_horizon(kappa: float, input_gain: float, amplitude: float,
                   tolerance: float) -> HorizonEstimate:
    """Smallest lag H with input_gain * amplitude * kappa^H <= tolerance.

    Raises if kappa >= 1 (no fading-memory certificate, the horizon is
    undefined).
    """
    if not (0.0 < kappa < 1.0):
        raise ValueError(
            f"no fading-memory certificate: kappa must be in (0, 1), got {kappa}")
    if input_gain <= 0.0 or amplitude <= 0.0 or tolerance <= 0.0:
        raise ValueError("input_gain, amplitude, and tolerance must be positive")
    ratio = input_gain * amplitude / tolerance
    if ratio <= 1.0:
        horizon = 0
    else:
        horizon = int(math.ceil(math.log(ratio) / (-math.log(kappa))))
    return HorizonEstimate(kappa=kappa, input_gain=input_gain,
                           amplitude=amplitude, tolerance=tolerance,
                           horizon=horizon)


def deep_stack_radius(diag_blocks: Sequence[np.ndarray]) -> float:
    """Spectral radius of a block-triangular stack = max over diagonal blocks."""
    blocks = list(diag_blocks)
    if not blocks:
        raise ValueError("need at least one diagonal block")
    return max(spectral_radius(b) for b in blocks)
