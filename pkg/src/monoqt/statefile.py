"""JSON state files: ``{"kind": "pure" | "mixed", "dims": [...], "data": [[re, im], ...]}``.

Matrices are stored row-major as a flat list.  Floats are written with
``repr`` precision, so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ContractError
from .states import DensityMatrix, PureState


class StateFileError(ContractError):
    """Malformed state file; the message names the offending field."""


def state_to_dict(state) -> dict:
    if isinstance(state, PureState):
        kind, flat = "pure", state.amplitudes
    elif isinstance(state, DensityMatrix):
        kind, flat = "mixed", state.matrix.reshape(-1)
    else:
        raise ContractError(f"cannot serialize {type(state).__name__}")
    return {"kind": kind, "dims": [int(d) for d in state.dims], "data": [[float(z.real), float(z.imag)] for z in flat]}


def _field(doc, name):
    if name not in doc:
        raise StateFileError(f"missing field {name!r}")
    return doc[name]


def state_from_dict(doc):
    if not isinstance(doc, dict):
        raise StateFileError("top level must be a JSON object")
    kind = _field(doc, "kind")
    if kind not in ("pure", "mixed"):
        raise StateFileError(f"field 'kind' must be 'pure' or 'mixed', got {kind!r}")
    dims = _field(doc, "dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise StateFileError(f"field 'dims' must be a non-empty list of positive integers, got {dims!r}")
    data = _field(doc, "data")
    n = math.prod(dims)
    expected = n if kind == "pure" else n * n
    if not isinstance(data, list) or len(data) != expected:
        got = len(data) if isinstance(data, list) else type(data).__name__
        raise StateFileError(f"field 'data' must hold {expected} entries for dims {dims}, got {got}")
    vals = np.empty(expected, dtype=np.complex128)
    for i, z in enumerate(data):
        if not (isinstance(z, list) and len(z) == 2 and all(isinstance(x, (int, float)) for x in z)):
            raise StateFileError(f"field 'data' entry {i} must be a [re, im] pair of numbers, got {z!r}")
        vals[i] = complex(z[0], z[1])
    try:
        if kind == "pure":
            return PureState(dims, vals)
        return DensityMatrix(dims, vals.reshape(n, n))
    except ContractError as exc:
        raise StateFileError(f"field 'data': {exc}") from exc


def dumps_state(state) -> str:
    return json.dumps(state_to_dict(state))


def load_state(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StateFileError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return state_from_dict(doc)


def save_state(state, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_state(state) + "\n")
