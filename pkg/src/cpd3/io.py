"""File formats: the "CPD3" binary tensor container and factor JSON files.

CPD3 layout: magic bytes ``43 50 44 33`` ("CPD3"), one u8 version byte
(currently 1), three little-endian u32 dimensions I, J, K, then I*J*K
IEEE-754 binary64 little-endian values in the flat layout of
:class:`~cpd3.core.Tensor3` (k fastest).

Factor matrices are serialized as JSON objects
``{"rows": n, "cols": r, "data": [row-major numbers]}``; a factor file
bundles three of them under the keys "A", "B", "C" plus an optional
"diagnostics" object.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .core import FactorTriple, Tensor3
from .errors import MalformedFileError

MAGIC = b"CPD3"
VERSION = 1
_HEADER = struct.Struct("<4sBIII")


def write_tensor(path, t: Tensor3) -> None:
    """Write a tensor in the CPD3 binary format."""
    i, j, k = t.dims
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, i, j, k))
        fh.write(t.flat().astype("<f8").tobytes())


def read_tensor(path) -> Tensor3:
    """Read a CPD3 binary tensor, validating the header and payload size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise MalformedFileError(f"{path}: shorter than the CPD3 header")
    magic, version, i, j, k = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MalformedFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MalformedFileError(f"{path}: unsupported version {version}")
    if min(i, j, k) < 1:
        raise MalformedFileError(f"{path}: invalid dimensions {(i, j, k)}")
    expected = _HEADER.size + 8 * i * j * k
    if len(blob) != expected:
        raise MalformedFileError(
            f"{path}: payload has {len(blob) - _HEADER.size} bytes, "
            f"expected {expected - _HEADER.size}"
        )
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    if not np.all(np.isfinite(data)):
        raise MalformedFileError(f"{path}: non-finite tensor entries")
    return Tensor3.from_flat((i, j, k), data)


def write_gram(path, gram) -> None:
    """Debug export of a Gram operator as a (D, D, 1) CPD3 tensor."""
    d = gram.dim
    write_tensor(path, Tensor3(np.asarray(gram.q).reshape(d, d, 1)))


def _matrix_to_obj(m: np.ndarray) -> dict:
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": m.reshape(-1).tolist()}


def _matrix_from_obj(obj, name) -> np.ndarray:
    try:
        rows = int(obj["rows"])
        cols = int(obj["cols"])
        data = np.asarray(obj["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFileError(f"factor {name}: {exc}") from exc
    if rows < 1 or cols < 1 or data.shape != (rows * cols,):
        raise MalformedFileError(
            f"factor {name}: got {data.size} values for a {rows}x{cols} matrix"
        )
    if not np.all(np.isfinite(data)):
        raise MalformedFileError(f"factor {name}: non-finite entries")
    return data.reshape(rows, cols)


def write_factors(path, f: FactorTriple, diagnostics: dict | None = None) -> None:
    """Write a factor triple (and optional diagnostics) as JSON."""
    doc = {"A": _matrix_to_obj(f.A), "B": _matrix_to_obj(f.B), "C": _matrix_to_obj(f.C)}
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_factors(path) -> FactorTriple:
    """Read a factor-triple JSON file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedFileError(f"{path}: expected a JSON object at top level")
    try:
        mats = {name: _matrix_from_obj(doc[name], name) for name in ("A", "B", "C")}
    except KeyError as exc:
        raise MalformedFileError(f"{path}: missing factor {exc}") from exc
    try:
        return FactorTriple(**mats)
    except Exception as exc:  # shape/zero-column violations
        raise MalformedFileError(f"{path}: {exc}") from exc
