"""Small-signal LTI/LTV surrogates of the reservoir with remainder bounds.

At an operating pair (x_bar, u_bar) with preactivation xi = W x_bar + U u_bar + b,
the exact Jacobians of the leaky update are

    A = (1 - leak) I + leak * diag(sigma'(xi)) W
    B = leak * diag(sigma'(xi)) U

and the readout contributes C with zero feedthrough.  The surrogate is valid
on the tube ||W dx + U du|| <= r with one-step error at most
(leak / 2) * sup|sigma''| * r^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ._linalg import as_float_array
from .core import Readout, ReservoirParams, Trajectory, activation_eval

__all__ = ["LtiModel", "LtvModel", "jacobians_at", "remainder_bound",
           "linearize_trajectory"]


@dataclass(frozen=True)
class LtiModel:
    """Discrete-time linear system (A, B, C, D), optionally tagged with the
    operating pair it was linearized at."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    x_bar: Optional[np.ndarray] = None
    u_bar: Optional[np.ndarray] = None

    def __post_init__(self):
        a = as_float_array(self.A, "A")
        b = as_float_array(self.B, "B")
        c = as_float_array(self.C, "C")
        d = as_float_array(self.D, "D")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got shape {a.shape}")
        n = a.shape[0]
        if b.ndim != 2 or b.shape[0] != n:
            raise ValueError(f"B must be {n} x m, got shape {b.shape}")
        if c.ndim != 2 or c.shape[1] != n:
            raise ValueError(f"C must be p x {n}, got shape {c.shape}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise ValueError(f"D must be {c.shape[0]} x {b.shape[1]}, got {d.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "D", d)
        for name in ("x_bar", "u_bar"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, as_float_array(val, name))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        out = {"A": self.A.tolist(), "B": self.B.tolist(),
               "C": self.C.tolist(), "D": self.D.tolist()}
        if self.x_bar is not None:
            out["x_bar"] = self.x_bar.tolist()
        if self.u_bar is not None:
            out["u_bar"] = self.u_bar.tolist()
        return out


@dataclass(frozen=True)
class LtvModel:
    """Time-varying surrogate: one (A_t, B_t) pair per step along a nominal
    trajectory, shared C and D."""

    A_seq: Tuple[np.ndarray, ...]
    B_seq: Tuple[np.ndarray, ...]
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        a_seq = tuple(as_float_array(a, "A_t") for a in self.A_seq)
        b_seq = tuple(as_float_array(b, "B_t") for b in self.B_seq)
        if len(a_seq) != len(b_seq):
            raise ValueError("A_seq and B_seq must have equal length")
        for a, b in zip(a_seq, b_seq):
            if a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
                raise ValueError("inconsistent per-step dimensions")
        object.__setattr__(self, "A_seq", a_seq)
        object.__setattr__(self, "B_seq", b_seq)
        object.__setattr__(self, "C", as_float_array(self.C, "C"))
        object.__setattr__(self, "D", as_float_array(self.D, "D"))

    def __len__(self) -> int:
        return len(self.A_seq)


def jacobians_at(params: ReservoirParams, x_bar, u_bar,
                 readout: Optional[Readout] = None) -> LtiModel:
    """Exact Jacobians of the reservoir update at an operating pair.

    With no readout the state itself is observed (C = I).  D is always zero:
    the readout has no feedthrough.
    """
    x_bar = np.asarray(x_bar, dtype=np.float64)
    u_bar = np.asarray(u_bar, dtype=np.float64)
    if x_bar.shape != (params.n,) or u_bar.shape != (params.m,):
        raise ValueError("operating pair has inconsistent dimensions")
    xi = params.preactivation(x_bar, u_bar)
    _, slope = activation_eval(params.activation, xi)
    lam = params.leak
    a = (1.0 - lam) * np.eye(params.n) + lam * (slope[:, None] * params.W)
    b = lam * (slope[:, None] * params.U)
    c = readout.C if readout is not None else np.eye(params.n)
    d = np.zeros((c.shape[0], params.m))
    return LtiModel(A=a, B=b, C=c, D=d, x_bar=x_bar, u_bar=u_bar)


def remainder_bound(params: ReservoirParams, radius: float) -> float:
    """One-step linearization error bound on the tube of the given radius.

    Raises if the activation has no curvature bound (piecewise-linear kinds).
    """
    if radius < 0.0:
        raise ValueError("tube radius must be nonnegative")
    l2 = params.activation.second_deriv_bound
    if l2 is None:
        raise ValueError(
            f"activation {params.activation.kind!r} has no second-derivative "
            "bound; no tube remainder bound exists")
    return 0.5 * params.leak * l2 * radius * radius


def linearize_trajectory(params: ReservoirParams, traj: Trajectory,
                         readout: Optional[Readout] = None) -> LtvModel:
    """Per-step Jacobians along a nominal trajectory (frozen-time surrogate)."""
    if traj.states.shape[1] != params.n or traj.inputs.shape[1] != params.m:
        raise ValueError("trajectory dimensions do not match the reservoir")
    a_seq: List[np.ndarray] = []
    b_seq: List[np.ndarray] = []
    for t in range(traj.horizon):
        lti = jacobians_at(params, traj.states[t], traj.inputs[t], readout)
        a_seq.append(lti.A)
        b_seq.append(lti.B)
    c = readout.C if readout is not None else np.eye(params.n)
    d = np.zeros((c.shape[0], params.m))
    return LtvModel(A_seq=tuple(a_seq), B_seq=tuple(b_seq), C=c, D=d)
