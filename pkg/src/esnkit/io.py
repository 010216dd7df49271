"""File schemas shared by the modules and the CLI.

All structured artifacts are JSON with a *strict* key policy: unknown keys
are rejected so that typos in configs fail loudly instead of being ignored.
Time series travel as CSV with the header ``t,u_1..u_m,y_1..y_p`` where row t
pairs the input applied at step t-1 with the measurement of the resulting
state x_t (the alignment the filtering code expects).
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from typing import Optional, Tuple

import numpy as np

from .core import Activation, Readout, ReservoirParams
from .identify import NoiseModel
from .linearize import LtiModel


class SchemaError(ValueError):
    """Malformed or unrecognized content in an input file."""


def check_keys(obj: dict, allowed, required, where: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise SchemaError(f"unrecognized key {sorted(unknown)[0]!r} in {where}")
    missing = set(required) - set(obj)
    if missing:
        raise SchemaError(f"missing key {sorted(missing)[0]!r} in {where}")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"{path} must contain a JSON object")
    return obj


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Reservoir model files


def _activation_from_spec(spec) -> Activation:
    if spec == "tanh":
        return Activation.tanh()
    if spec == "identity":
        return Activation.identity()
    if isinstance(spec, dict):
        check_keys(spec, {"leaky_slope"}, {"leaky_slope"}, "activation")
        return Activation.leaky_slope(float(spec["leaky_slope"]))
    raise SchemaError(f"unrecognized activation spec {spec!r}")


def _activation_to_spec(act: Activation):
    if act.kind == "leaky_slope":
        return {"leaky_slope": act.negative_slope}
    return act.kind


_MODEL_KEYS = {"n", "m", "p", "leak", "activation", "W", "U", "b", "C", "d"}


def load_model(path: str) -> Tuple[ReservoirParams, Optional[Readout]]:
    """Read a reservoir model file; returns the params and the readout if
    the file carries one."""
    obj = _load_json(path)
    check_keys(obj, _MODEL_KEYS, {"n", "m", "p", "leak", "activation",
                                  "W", "U", "b"}, path)
    n, m, p = int(obj["n"]), int(obj["m"]), int(obj["p"])
    try:
        params = ReservoirParams(
            W=np.array(obj["W"], dtype=np.float64),
            U=np.array(obj["U"], dtype=np.float64),
            b=np.array(obj["b"], dtype=np.float64),
            leak=float(obj["leak"]),
            activation=_activation_from_spec(obj["activation"]))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if params.n != n or params.m != m:
        raise SchemaError(f"{path}: declared n/m do not match matrix shapes")
    readout = None
    if "C" in obj:
        c = np.array(obj["C"], dtype=np.float64)
        d = np.array(obj["d"], dtype=np.float64) if "d" in obj else None
        try:
            readout = Readout(C=c, d=d)
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
        if readout.p != p or readout.C.shape[1] != n:
            raise SchemaError(f"{path}: readout shape does not match n/p")
    return params, readout


def model_to_dict(params: ReservoirParams, readout: Optional[Readout] = None,
                  p: Optional[int] = None) -> dict:
    out = {
        "n": params.n,
        "m": params.m,
        "p": readout.p if readout is not None else (p if p is not None else params.n),
        "leak": params.leak,
        "activation": _activation_to_spec(params.activation),
        "W": params.W.tolist(),
        "U": params.U.tolist(),
        "b": params.b.tolist(),
    }
    if readout is not None:
        out["C"] = readout.C.tolist()
        out["d"] = readout.d.tolist()
    return out


def save_model(path: str, params: ReservoirParams,
               readout: Optional[Readout] = None) -> None:
    write_json(path, model_to_dict(params, readout))


# ---------------------------------------------------------------------------
# LTI / noise / belief files


def load_lti(path: str) -> LtiModel:
    obj = _load_json(path)
    check_keys(obj, {"A", "B", "C", "D", "x_bar", "u_bar"},
               {"A", "B", "C", "D"}, path)
    try:
        return LtiModel(
            A=np.array(obj["A"], dtype=np.float64),
            B=np.array(obj["B"], dtype=np.float64),
            C=np.array(obj["C"], dtype=np.float64),
            D=np.array(obj["D"], dtype=np.float64),
            x_bar=np.array(obj["x_bar"], dtype=np.float64) if "x_bar" in obj else None,
            u_bar=np.array(obj["u_bar"], dtype=np.float64) if "u_bar" in obj else None)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def save_lti(path: str, lti: LtiModel) -> None:
    write_json(path, lti.to_dict())


def load_noise(path: str) -> NoiseModel:
    obj = _load_json(path)
    check_keys(obj, {"Q", "R"}, {"Q"}, path)
    q = np.array(obj["Q"], dtype=np.float64)
    r = np.array(obj["R"], dtype=np.float64) if "R" in obj else np.zeros((0, 0))
    try:
        return NoiseModel(Q=q, R=r)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def load_belief(path: str) -> Tuple[np.ndarray, np.ndarray]:
    obj = _load_json(path)
    check_keys(obj, {"mean", "cov"}, {"mean", "cov"}, path)
    return (np.array(obj["mean"], dtype=np.float64),
            np.array(obj["cov"], dtype=np.float64))


# ---------------------------------------------------------------------------
# Time-series CSV


def save_series(path: str, inputs: np.ndarray,
                outputs: Optional[np.ndarray] = None) -> None:
    """Write ``t,u_1..u_m[,y_1..y_p]`` rows; row t holds u_{t-1} and y_t."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    horizon, m = inputs.shape
    header = ["t"] + [f"u_{i + 1}" for i in range(m)]
    if outputs is not None:
        outputs = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        if outputs.shape[0] != horizon:
            raise ValueError("outputs and inputs must have equal length")
        header += [f"y_{i + 1}" for i in range(outputs.shape[1])]
    lines = [",".join(header)]
    for t in range(horizon):
        row = [str(t + 1)] + [repr(v) for v in inputs[t]]
        if outputs is not None:
            row += [repr(v) for v in outputs[t]]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_series(path: str) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Read a data CSV; returns (inputs, outputs-or-None)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty")
        rows = [row for row in reader if row]
    if not header or header[0] != "t":
        raise SchemaError(f"{path}: first CSV column must be 't'")
    u_cols = [i for i, name in enumerate(header) if name.startswith("u_")]
    y_cols = [i for i, name in enumerate(header) if name.startswith("y_")]
    extra = [name for i, name in enumerate(header)
             if i != 0 and i not in u_cols and i not in y_cols]
    if extra:
        raise SchemaError(f"{path}: unrecognized column {extra[0]!r}")
    if not u_cols:
        raise SchemaError(f"{path}: no input columns (u_1..u_m)")
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell ({exc})") from exc
    if data.size == 0:
        raise SchemaError(f"{path} has no data rows")
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    inputs = data[:, u_cols]
    outputs = data[:, y_cols] if y_cols else None
    return inputs, outputs
