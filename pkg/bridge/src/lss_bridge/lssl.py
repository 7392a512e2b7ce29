"""LSSL latent-file reader/writer.

This is the byte contract shared with the watermarking pipeline and is kept
deliberately independent of it: magic ``LSSL``, u32 version=1, u32 n, u32 T,
f64 frame rate, then float32 data row-major (n rows by T columns), all
little-endian.
"""

import struct

import numpy as np

from .errors import BridgeError

_HEADER = struct.Struct("<4sIIId")
MAGIC = b"LSSL"
VERSION = 1


def write_lssl(path, data: np.ndarray, frame_rate_hz: float) -> None:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.size == 0:
        raise BridgeError(f"latent array must be 2-D and non-empty, got {data.shape}")
    n, t = data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, t, float(frame_rate_hz)))
        fh.write(data.astype("<f4").tobytes(order="C"))


def read_lssl(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise BridgeError(f"{path}: truncated LSSL header")
    magic, version, n, t, frame_rate = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BridgeError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BridgeError(f"{path}: unsupported LSSL version {version}")
    body = blob[_HEADER.size :]
    expected = 4 * n * t
    if len(body) != expected:
        raise BridgeError(
            f"{path}: payload is {len(body)} bytes, header implies {expected}"
        )
    data = np.frombuffer(body, dtype="<f4").reshape(n, t).astype(np.float64)
    return data, frame_rate
