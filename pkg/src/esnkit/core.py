"""Reservoir core: activations with slope data, parameters, and exact simulation.

The state recursion implemented here is the leaky update

    x_{t+1} = (1 - leak) * x_t + leak * sigma(W x_t + U u_t + b)

with an optional linear readout ``y_t = C x_t + d``.  Everything downstream
(stability certificates, linearization, lifting, identification) treats this
map as the ground-truth nonlinear system, so this module keeps it exact:
float64 arithmetic, no approximations, reproducible seeded noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ._linalg import (as_float_array, check_finite, check_psd, cholesky_psd,
                      rng_from_seed)

__all__ = [
    "Activation",
    "ReservoirParams",
    "Readout",
    "Trajectory",
    "activation_eval",
    "reservoir_step",
    "simulate",
]

# sup |tanh''| attained at tanh(x) = 1/sqrt(3)
_TANH_SECOND_DERIV_BOUND = 4.0 / (3.0 * np.sqrt(3.0))


@dataclass(frozen=True)
class Activation:
    """Componentwise activation together with the slope data certificates need.

    The table is closed on purpose: ``tanh``, ``identity``, and
    ``leaky_slope`` all satisfy sigma(0) = 0 and have known global Lipschitz
    constants, which is what the contraction machinery trusts.  The curvature
    bound ``second_deriv_bound`` is ``None`` for the piecewise-linear kind
    (its second derivative is a point mass, so no tube bound exists).

    Attributes:
        kind: one of "tanh", "identity", "leaky_slope".
        negative_slope: slope used for x < 0 when kind == "leaky_slope".
    """

    kind: str
    negative_slope: float = 1.0

    def __post_init__(self):
        if self.kind not in ("tanh", "identity", "leaky_slope"):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        a = float(self.negative_slope)
        if not np.isfinite(a) or a < 0.0:
            raise ValueError("negative_slope must be finite and >= 0")
        object.__setattr__(self, "negative_slope", a)

    @classmethod
    def tanh(cls) -> "Activation":
        return cls("tanh")

    @classmethod
    def identity(cls) -> "Activation":
        return cls("identity")

    @classmethod
    def leaky_slope(cls, negative_slope: float) -> "Activation":
        return cls("leaky_slope", negative_slope=negative_slope)

    @property
    def lipschitz(self) -> float:
        """Global Lipschitz constant; slopes live in [0, lipschitz]."""
        if self.kind == "leaky_slope":
            return max(1.0, self.negative_slope)
        return 1.0

    @property
    def second_deriv_bound(self) -> Optional[float]:
        """sup |sigma''| over the real line, or None if the kink makes it undefined."""
        if self.kind == "tanh":
            return _TANH_SECOND_DERIV_BOUND
        if self.kind == "identity":
            return 0.0
        return None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "tanh":
            return np.tanh(x)
        if self.kind == "identity":
            return x.copy()
        return np.where(x >= 0.0, x, self.negative_slope * x)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "tanh":
            t = np.tanh(x)
            return 1.0 - t * t
        if self.kind == "identity":
            return np.ones_like(x)
        return np.where(x >= 0.0, 1.0, self.negative_slope)


def activation_eval(activation: Activation, x) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate sigma and its componentwise derivative at ``x``.

    Returns ``(value, derivative_diag)``; the derivative entries are the
    diagonal of the activation Jacobian and always lie in
    ``[-lipschitz, lipschitz]``.

    Raises:
        ValueError: on non-finite input (message carries the offending index).
    """
    x = np.asarray(x, dtype=np.float64)
    check_finite(x, "activation input")
    return activation(x), activation.derivative(x)


@dataclass(frozen=True)
class ReservoirParams:
    """Fixed reservoir: recurrent weights ``W``, input weights ``U``, bias ``b``,
    leak in (0, 1], and the activation."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray
    leak: float
    activation: Activation = field(default_factory=Activation.tanh)

    def __post_init__(self):
        w = as_float_array(self.W, "W")
        u = as_float_array(self.U, "U")
        b = as_float_array(self.b, "b")
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"W must be square, got shape {w.shape}")
        n = w.shape[0]
        if u.ndim != 2 or u.shape[0] != n:
            raise ValueError(f"U must be {n} x m, got shape {u.shape}")
        if b.shape != (n,):
            raise ValueError(f"b must have shape ({n},), got {b.shape}")
        leak = float(self.leak)
        if not (0.0 < leak <= 1.0):
            raise ValueError(f"leak must be in (0, 1], got {leak}")
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "leak", leak)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[1]

    def preactivation(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.W @ x + self.U @ u + self.b


@dataclass(frozen=True)
class Readout:
    """Linear readout ``y = C x + d``."""

    C: np.ndarray
    d: Optional[np.ndarray] = None

    def __post_init__(self):
        c = as_float_array(self.C, "C")
        if c.ndim != 2:
            raise ValueError(f"C must be 2-d, got shape {c.shape}")
        if self.d is None:
            d = np.zeros(c.shape[0])
        else:
            d = as_float_array(self.d, "d")
            if d.shape != (c.shape[0],):
                raise ValueError(f"d must have shape ({c.shape[0]},), got {d.shape}")
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.C @ x + self.d


@dataclass(frozen=True)
class Trajectory:
    """A simulated run: states x_0..x_T, inputs u_0..u_{T-1}, optional outputs y_1..y_T.

    Output ``outputs[t-1]`` is the measurement of state ``states[t]``; this is
    the pairing the filtering code expects (observations start one step after
    the initial condition).
    """

    states: np.ndarray
    inputs: np.ndarray
    outputs: Optional[np.ndarray] = None

    def __post_init__(self):
        states = as_float_array(self.states, "states")
        inputs = as_float_array(self.inputs, "inputs")
        if states.ndim != 2 or inputs.ndim != 2:
            raise ValueError("states and inputs must be 2-d arrays")
        if states.shape[0] != inputs.shape[0] + 1:
            raise ValueError(
                f"need len(states) == len(inputs) + 1, got {states.shape[0]} "
                f"and {inputs.shape[0]}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)
        if self.outputs is not None:
            outputs = as_float_array(self.outputs, "outputs")
            if outputs.ndim != 2 or outputs.shape[0] != inputs.shape[0]:
                raise ValueError("outputs must be (T, p) aligned with inputs")
            object.__setattr__(self, "outputs", outputs)

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]


def reservoir_step(params: ReservoirParams, x, u) -> np.ndarray:
    """One exact step of the leaky recursion (deterministic, no noise)."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if x.shape != (params.n,):
        raise ValueError(f"state must have shape ({params.n},), got {x.shape}")
    if u.shape != (params.m,):
        raise ValueError(f"input must have shape ({params.m},), got {u.shape}")
    lam = params.leak
    return (1.0 - lam) * x + lam * params.activation(params.preactivation(x, u))


def simulate(params: ReservoirParams,
             x0,
             inputs,
             readout: Optional[Readout] = None,
             process_noise: Optional[Tuple[np.ndarray, int]] = None,
             measurement_noise: Optional[Tuple[np.ndarray, int]] = None) -> Trajectory:
    """Roll the reservoir forward over an input sequence.

    Args:
        params: the fixed reservoir.
        x0: initial state (length n).
        inputs: (T, m) array of driving inputs.
        readout: if given, outputs ``y_t = C x_t + d`` are recorded for
            t = 1..T (aligned as in :class:`Trajectory`).
        process_noise: optional ``(Q, seed)``; adds N(0, Q) to every state
            transition, drawn from a counter-based generator so the run is
            bit-reproducible for a fixed seed.
        measurement_noise: optional ``(R, seed)``; adds N(0, R) to the
            outputs (requires a readout).

    Returns:
        Trajectory with states (T+1, n), the inputs, and outputs when a
        readout was supplied.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    check_finite(x0, "x0")
    check_finite(inputs, "inputs")
    if x0.shape != (params.n,):
        raise ValueError(f"x0 must have shape ({params.n},), got {x0.shape}")
    if inputs.shape[1] != params.m:
        raise ValueError(f"inputs must be (T, {params.m}), got {inputs.shape}")
    horizon = inputs.shape[0]

    w_draws = None
    if process_noise is not None:
        q, seed = process_noise
        q = check_psd(np.asarray(q, dtype=np.float64), "Q")
        chol = cholesky_psd(q)
        w_draws = rng_from_seed(seed).standard_normal((horizon, params.n)) @ chol.T

    v_draws = None
    if measurement_noise is not None:
        if readout is None:
            raise ValueError("measurement noise requires a readout")
        r, seed = measurement_noise
        r = check_psd(np.asarray(r, dtype=np.float64), "R")
        chol = cholesky_psd(r)
        v_draws = rng_from_seed(seed).standard_normal((horizon, readout.p)) @ chol.T

    states = np.empty((horizon + 1, params.n))
    states[0] = x0
    x = x0
    for t in range(horizon):
        x = reservoir_step(params, x, inputs[t])
        if w_draws is not None:
            x = x + w_draws[t]
        states[t + 1] = x

    outputs = None
    if readout is not None:
        outputs = states[1:] @ readout.C.T + readout.d
        if v_draws is not None:
            outputs = outputs + v_draws
    return Trajectory(states=states, inputs=inputs, outputs=outputs)
