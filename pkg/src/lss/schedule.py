"""Keyed expansion of (key, nonce, payload) into the full watermark schedule.

The schedule fixes, for every chunk of frames, which component planes get
rotated, the signed payload bit each plane carries, and the per-subchunk chip
sign that spreads that bit over time. Embedder and detector derive it
independently and must agree bit for bit, so everything below is a pure
function of its inputs.

Randomness comes from an HMAC-SHA256 counter stream keyed by the secret key.
Each draw purpose gets its own stream, separated by a fixed-width label::

    block_i = HMAC-SHA256(key, nonce || purpose || u32(chunk) || u32(slot) || u64(i))

with purpose 0x01 for plane selection (slot = 0), 0x02 for chips (slot =
plane index), and 0x03 for content-derived nonces. Uniform integers are
drawn from 4-byte words by rejection, so there is no modulo bias. A reference
output of this construction is pinned in the test suite; changing any of it
breaks compatibility with previously embedded material.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

KEY_BYTES = 32
NONCE_BYTES = 16

_PURPOSE_PLANES = 0x01
_PURPOSE_CHIPS = 0x02
_PURPOSE_NONCE = 0x03


@dataclass(frozen=True)
class SecretKey:
    key: bytes

    def __post_init__(self):
        if not isinstance(self.key, bytes) or len(self.key) != KEY_BYTES:
            raise ValidationError(f"secret key must be exactly {KEY_BYTES} bytes")

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise ValidationError(f"key is not valid hex: {exc}") from exc
        return cls(raw)


@dataclass(frozen=True)
class Nonce:
    nonce: bytes

    def __post_init__(self):
        if not isinstance(self.nonce, bytes) or len(self.nonce) != NONCE_BYTES:
            raise ValidationError(f"nonce must be exactly {NONCE_BYTES} bytes")

    @classmethod
    def from_hex(cls, text: str) -> "Nonce":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise ValidationError(f"nonce is not valid hex: {exc}") from exc
        return cls(raw)


@dataclass(frozen=True)
class Payload:
    """The B message bits carried by the watermark, B >= 1."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=np.int8).ravel()
        if arr.size < 1:
            raise ValidationError("payload needs at least one bit")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValidationError("payload bits must be 0 or 1")
        object.__setattr__(self, "bits", arr)

    @classmethod
    def from_hex(cls, text: str, bit_length: int | None = None) -> "Payload":
        """Hex string to bits, MSB first within each byte; optionally truncated."""
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise ValidationError(f"payload is not valid hex: {exc}") from exc
        if not raw:
            raise ValidationError("payload hex is empty")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8)).astype(np.int8)
        if bit_length is not None:
            if not 1 <= bit_length <= bits.size:
                raise ValidationError(
                    f"bit_length {bit_length} out of range for {bits.size} hex bits"
                )
            bits = bits[:bit_length]
        return cls(bits)

    @property
    def num_bits(self) -> int:
        return self.bits.size

    def signed(self) -> np.ndarray:
        """Bit values as +/-1: bit 1 -> +1, bit 0 -> -1."""
        return (2 * self.bits.astype(np.int8) - 1).astype(np.int8)

    def inverted(self) -> "Payload":
        return Payload(bits=1 - self.bits)


@dataclass(frozen=True)
class ScheduleParams:
    """Embedding geometry knobs; defaults give 32-frame chunks, 8-frame
    subchunks, 24 planes at 0.18 rad drawn from the top 64 components."""

    chunk_frames: int = 32
    subchunk_frames: int = 8
    planes_per_chunk: int = 24
    theta: float = 0.18
    candidate_components: int = 64

    def __post_init__(self):
        if self.chunk_frames < 1 or self.subchunk_frames < 1:
            raise ValidationError("chunk_frames and subchunk_frames must be positive")
        if self.chunk_frames % self.subchunk_frames != 0:
            raise ValidationError(
                f"subchunk_frames ({self.subchunk_frames}) must divide "
                f"chunk_frames ({self.chunk_frames})"
            )
        if self.planes_per_chunk < 1:
            raise ValidationError("planes_per_chunk must be positive")
        if 2 * self.planes_per_chunk > self.candidate_components:
            raise ValidationError(
                f"need 2*P ({2 * self.planes_per_chunk}) <= candidate_components "
                f"({self.candidate_components}) for disjoint planes"
            )
        if not self.theta >= 0:
            raise ValidationError(f"theta must be non-negative, got {self.theta}")

    @property
    def subchunks_per_chunk(self) -> int:
        return self.chunk_frames // self.subchunk_frames


class _PrfStream:
    """HMAC-SHA256 counter stream bound to (key, nonce, purpose, chunk, slot)."""

    def __init__(self, key: bytes, nonce: bytes, purpose: int, chunk: int = 0, slot: int = 0):
        self._key = key
        self._prefix = nonce + bytes([purpose]) + struct.pack("<II", chunk, slot)
        self._counter = 0
        self._buf = b""

    def take(self, nbytes: int) -> bytes:
        while len(self._buf) < nbytes:
            msg = self._prefix + struct.pack("<Q", self._counter)
            self._buf += hmac.new(self._key, msg, hashlib.sha256).digest()
            self._counter += 1
        out, self._buf = self._buf[:nbytes], self._buf[nbytes:]
        return out

    def uniform_int(self, bound: int) -> int:
        # Rejection sampling over 32-bit words: no modulo bias for any bound.
        limit = (2**32 // bound) * bound
        while True:
            (v,) = struct.unpack("<I", self.take(4))
            if v < limit:
                return v % bound


@dataclass(frozen=True)
class WatermarkSchedule:
    """Fully expanded schedule for one utterance.

    ``planes[c, p] = (i, j)`` with ``i < j``, all 2P indices distinct within a
    chunk; ``beta[c, p]`` the signed payload bit for that slot; and
    ``chips[c, p, l]`` the +/-1 spreading sign per subchunk.
    """

    params: ScheduleParams
    num_frames: int
    planes: np.ndarray
    beta: np.ndarray
    chips: np.ndarray
    payload_bits: int = field(default=0, compare=False)

    @property
    def chunk_count(self) -> int:
        return self.planes.shape[0]

    @property
    def frames_watermarked(self) -> int:
        return self.chunk_count * self.params.chunk_frames

    @property
    def num_chips(self) -> int:
        return self.chips.size


def derive_schedule(
    key: SecretKey,
    nonce: Nonce,
    payload: Payload,
    params: ScheduleParams,
    num_frames: int,
) -> WatermarkSchedule:
    """Expand (key, nonce, payload) into planes, bits, and chips for
    ``floor(num_frames / chunk_frames)`` chunks; trailing frames stay clean.

    Per chunk, 2P distinct component indices are drawn without replacement
    from {0..D-1} and paired in draw order into P disjoint planes (i < j).
    Signed payload bits walk the payload cyclically in (chunk, plane) order:
    ``beta[c, p] = signed_bits[(c*P + p) mod B]``.
    """
    m = params.chunk_frames
    if num_frames < m:
        raise ValidationError(
            f"need at least one full chunk ({m} frames); sequence has {num_frames}"
        )
    chunk_count = num_frames // m
    p_count = params.planes_per_chunk
    l_count = params.subchunks_per_chunk
    d = params.candidate_components

    planes = np.empty((chunk_count, p_count, 2), dtype=np.int32)
    chips = np.empty((chunk_count, p_count, l_count), dtype=np.int8)
    for c in range(chunk_count):
        stream = _PrfStream(key.key, nonce.nonce, _PURPOSE_PLANES, chunk=c)
        chosen: list[int] = []
        seen: set[int] = set()
        while len(chosen) < 2 * p_count:
            v = stream.uniform_int(d)
            if v not in seen:
                seen.add(v)
                chosen.append(v)
        for p in range(p_count):
            a, b = chosen[2 * p], chosen[2 * p + 1]
            planes[c, p, 0] = min(a, b)
            planes[c, p, 1] = max(a, b)
            chip_stream = _PrfStream(key.key, nonce.nonce, _PURPOSE_CHIPS, chunk=c, slot=p)
            raw = chip_stream.take(l_count)
            chips[c, p] = [1 if byte & 1 else -1 for byte in raw]

    signed = payload.signed()
    slots = np.arange(chunk_count * p_count) % payload.num_bits
    beta = signed[slots].reshape(chunk_count, p_count)

    return WatermarkSchedule(
        params=params,
        num_frames=num_frames,
        planes=planes,
        beta=beta,
        chips=chips,
        payload_bits=payload.num_bits,
    )


def chip_balance(schedule: WatermarkSchedule) -> float:
    """Mean of all chip signs; near zero for any real schedule."""
    return float(schedule.chips.mean())


def derive_nonce(key: SecretKey, content_hash: bytes) -> Nonce:
    """Deterministic per-content nonce: first 16 bytes of
    HMAC-SHA256(key, 0x03 || content_hash). Used when no explicit nonce is
    supplied; the embedder must hand the value to the detector out of band,
    since the watermarked copy no longer hashes to the same nonce."""
    msg = bytes([_PURPOSE_NONCE]) + content_hash
    digest = hmac.new(key.key, msg, hashlib.sha256).digest()
    return Nonce(digest[:NONCE_BYTES])
