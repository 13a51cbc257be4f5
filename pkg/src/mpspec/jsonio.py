"""JSON/CSV (de)serialization of pencils, grids, numbers and results.

Complex numbers travel as ``[re, im]`` pairs; plain reals are accepted on
input.  Unbounded results are written as the string ``"inf"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .pencil import MultiParamPencil

__all__ = [
    "encode_complex",
    "decode_complex",
    "encode_matrix",
    "decode_matrix",
    "pencil_to_dict",
    "pencil_from_dict",
    "load_pencil",
    "save_pencil",
    "encode_real",
    "to_jsonable",
    "dumps",
]


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ValueError(f"cannot read a complex number from {v!r}")


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[encode_complex(z) for z in row] for row in a]


def decode_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not isinstance(rows[0], list):
        raise ValueError("matrix must be a non-empty list of rows")
    out = np.array([[decode_complex(z) for z in row] for row in rows], dtype=complex)
    if out.ndim != 2:
        raise ValueError("ragged matrix")
    return out


def pencil_to_dict(pencil: MultiParamPencil) -> dict:
    return {
        "k": pencil.k,
        "l": pencil.l,
        "m": pencil.m,
        "terms": [
            {"exp": [int(e) for e in exp], "matrix": encode_matrix(c)}
            for exp, c in zip(pencil.exponents, pencil.coeffs)
        ],
    }


def pencil_from_dict(d: dict) -> MultiParamPencil:
    if "A" in d:
        pencil = MultiParamPencil.linear([decode_matrix(a) for a in d["A"]])
    elif "terms" in d:
        pencil = MultiParamPencil.from_terms(
            (t["exp"], decode_matrix(t["matrix"])) for t in d["terms"]
        )
    else:
        raise ValueError("pencil JSON needs either 'terms' or 'A'")
    for key, val in (("k", pencil.k), ("l", pencil.l), ("m", pencil.m)):
        if key in d and int(d[key]) != val:
            raise DimensionError(f"declared {key}={d[key]} but matrices give {val}")
    return pencil


def load_pencil(path) -> MultiParamPencil:
    with open(path) as fh:
        return pencil_from_dict(json.load(fh))


def save_pencil(pencil: MultiParamPencil, path):
    Path(path).write_text(json.dumps(pencil_to_dict(pencil), indent=1) + "\n")


def encode_real(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def to_jsonable(obj):
    """Recursively turn numpy scalars/arrays and complex values into JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return encode_real(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=1, sort_keys=True)
