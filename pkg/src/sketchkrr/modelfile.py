"""Binary model files.

Layout (all integers little-endian)::

    b"KRRM"                 magic
    u32                     format version (1)
    u32                     length of the metadata block in bytes
    UTF-8 JSON              metadata: kernel, lambda, n, d, t, label_map, seed, ...
    float64[n*d]            support inputs X, row-major
    float64[n*t]            coefficients C, row-major
"""

from __future__ import annotations

import json
import struct

import numpy as np

from . import __version__
from .errors import ModelFormatError
from .kernels import KernelSpec
from .solver import KrrModel

MAGIC = b"KRRM"
VERSION = 1
_HEADER = struct.Struct("<4sII")


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def dumps_model(model: KrrModel) -> bytes:
    n, d = model.X.shape
    t = model.C.shape[1]
    meta = dict(model.meta)
    meta.update(
        kernel=model.kernel.to_dict(),
        n=n,
        d=d,
        t=t,
        label_map=model.label_map,
        tool_version=__version__,
    )
    blob = json.dumps(_jsonable(meta), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([
        _HEADER.pack(MAGIC, VERSION, len(blob)),
        blob,
        np.ascontiguousarray(model.X, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.C, dtype="<f8").tobytes(),
    ])


def loads_model(data: bytes) -> KrrModel:
    if len(data) < _HEADER.size:
        raise ModelFormatError("file too short for a model header")
    magic, version, meta_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    start = _HEADER.size
    try:
        meta = json.loads(data[start:start + meta_len].decode("utf-8"))
        n, d, t = int(meta["n"]), int(meta["d"]), int(meta["t"])
        kernel = KernelSpec.from_dict(meta["kernel"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelFormatError(f"corrupt metadata: {exc}") from None
    offset = start + meta_len
    expected = offset + 8 * (n * d + n * t)
    if len(data) != expected:
        raise ModelFormatError(f"payload is {len(data)} bytes, header implies {expected}")
    X = np.frombuffer(data, dtype="<f8", count=n * d, offset=offset).reshape(n, d)
    C = np.frombuffer(data, dtype="<f8", count=n * t, offset=offset + 8 * n * d).reshape(n, t)
    label_map = meta.pop("label_map")
    for key in ("kernel", "n", "d", "t", "tool_version"):
        meta.pop(key, None)
    return KrrModel(kernel=kernel, X=X.astype(np.float64), C=C.astype(np.float64),
                    label_map=label_map, meta=meta)


def save_model(model: KrrModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> KrrModel:
    with open(path, "rb") as fh:
        return loads_model(fh.read())
