"""Byte-level codecs for the two on-disk interchange formats.

``LSSB`` (basis)::

    magic  b"LSSB"
    u32    version (= 1)
    u32    n
    f64[n]     mean
    f64[n]     eigenvalues
    f64[n*n]   components, column-major

``LSSL`` (latents)::

    magic  b"LSSL"
    u32    version (= 1)
    u32    n
    u32    T
    f64    frame_rate_hz
    f32[n*T]   data, row-major

All integers and floats are little-endian. Readers are strict: bad magic,
unknown version, truncation, or trailing bytes are all rejected, so a file
round-trips bit-exactly or not at all.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

BASIS_MAGIC = b"LSSB"
LATENT_MAGIC = b"LSSL"
FORMAT_VERSION = 1

_BASIS_HEADER = struct.Struct("<4sII")
_LATENT_HEADER = struct.Struct("<4sIIId")


def pack_basis(mean: np.ndarray, eigenvalues: np.ndarray, components: np.ndarray) -> bytes:
    n = mean.shape[0]
    header = _BASIS_HEADER.pack(BASIS_MAGIC, FORMAT_VERSION, n)
    body = (
        np.ascontiguousarray(mean, dtype="<f8").tobytes()
        + np.ascontiguousarray(eigenvalues, dtype="<f8").tobytes()
        + np.asarray(components, dtype="<f8").flatten(order="F").tobytes()
    )
    return header + body


def unpack_basis(blob: bytes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (mean, eigenvalues, components) from an LSSB byte string."""
    if len(blob) < _BASIS_HEADER.size:
        raise FormatError("LSSB: truncated header")
    magic, version, n = _BASIS_HEADER.unpack_from(blob)
    if magic != BASIS_MAGIC:
        raise FormatError(f"LSSB: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"LSSB: unsupported version {version}")
    expected = _BASIS_HEADER.size + 8 * (n + n + n * n)
    if len(blob) != expected:
        raise FormatError(f"LSSB: expected {expected} bytes, got {len(blob)}")
    off = _BASIS_HEADER.size
    mean = np.frombuffer(blob, dtype="<f8", count=n, offset=off).astype(np.float64)
    off += 8 * n
    eigenvalues = np.frombuffer(blob, dtype="<f8", count=n, offset=off).astype(np.float64)
    off += 8 * n
    flat = np.frombuffer(blob, dtype="<f8", count=n * n, offset=off)
    components = flat.reshape((n, n), order="F").astype(np.float64)
    return mean, eigenvalues, components


def pack_latents(data: np.ndarray, frame_rate_hz: float) -> bytes:
    n, t = data.shape
    header = _LATENT_HEADER.pack(LATENT_MAGIC, FORMAT_VERSION, n, t, float(frame_rate_hz))
    return header + np.ascontiguousarray(data, dtype="<f4").tobytes()


def unpack_latents(blob: bytes) -> tuple[np.ndarray, float]:
    """Return (data, frame_rate_hz) from an LSSL byte string.

    Data comes back as float64; the f32 payload bytes are preserved exactly,
    so pack(unpack(blob)) == blob.
    """
    if len(blob) < _LATENT_HEADER.size:
        raise FormatError("LSSL: truncated header")
    magic, version, n, t, frame_rate = _LATENT_HEADER.unpack_from(blob)
    if magic != LATENT_MAGIC:
        raise FormatError(f"LSSL: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"LSSL: unsupported version {version}")
    expected = _LATENT_HEADER.size + 4 * n * t
    if len(blob) != expected:
        raise FormatError(f"LSSL: expected {expected} bytes, got {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", count=n * t, offset=_LATENT_HEADER.size)
    return flat.reshape((n, t)).astype(np.float64), float(frame_rate)
