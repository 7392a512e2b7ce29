"""Waveform I/O and invertible waveform <-> latent transforms.

Two built-in codecs stand in for a neural encoder/decoder pair:

* ``frame_stack``: consecutive non-overlapping blocks of frame_len samples
  become latent columns verbatim.
* ``dct_bank``: each block additionally passes through an orthonormal type-II
  DCT, giving a frequency-ordered latent.

Both are critically sampled (hop == frame_len) and exactly invertible, so
watermark behavior can be tested without codec loss. A third kind,
``external_latents``, marks pipelines whose latents come from LSSL files
produced elsewhere; it has no waveform transform of its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.io.wavfile

from . import formats
from .errors import FormatError, ValidationError
from .latent import LatentSequence

CODEC_KINDS = ("frame_stack", "dct_bank", "external_latents")


@dataclass(frozen=True)
class Waveform:
    """Mono waveform: float64 samples at an integer sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValidationError(f"waveform must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("waveform contains non-finite samples")
        if int(self.sample_rate_hz) <= 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_seconds(self) -> float:
        return self.num_samples / self.sample_rate_hz


@dataclass(frozen=True)
class CodecSpec:
    """Which codec to use and its block size. hop is tied to frame_len."""

    kind: str = "frame_stack"
    frame_len: int = 320
    hop: int = field(default=0)

    def __post_init__(self):
        if self.kind not in CODEC_KINDS:
            raise ValidationError(
                f"unknown codec kind {self.kind!r}, expected one of {CODEC_KINDS}"
            )
        if self.hop == 0:
            object.__setattr__(self, "hop", self.frame_len)
        if self.kind != "external_latents":
            if self.frame_len < 2:
                raise ValidationError(f"frame_len must be >= 2, got {self.frame_len}")
            if self.hop != self.frame_len:
                raise ValidationError(
                    f"critically sampled codecs require hop == frame_len "
                    f"({self.hop} != {self.frame_len})"
                )


def parse_codec(text: str) -> CodecSpec:
    """Parse a codec string like ``frame_stack:frame_len=320``."""
    head, _, rest = text.strip().partition(":")
    kind = head.strip()
    kwargs = {}
    if rest:
        for part in rest.split(","):
            k, sep, v = part.partition("=")
            if not sep:
                raise ValidationError(f"bad codec option {part!r} in {text!r}")
            k = k.strip()
            if k not in ("frame_len", "hop"):
                raise ValidationError(f"unknown codec option {k!r} in {text!r}")
            try:
                kwargs[k] = int(v)
            except ValueError:
                raise ValidationError(f"codec option {k!r} must be an integer, got {v!r}")
    if kind not in CODEC_KINDS:
        raise ValidationError(f"unknown codec kind {kind!r}, expected one of {CODEC_KINDS}")
    return CodecSpec(kind=kind, **kwargs)


def codec_to_string(spec: CodecSpec) -> str:
    if spec.kind == "external_latents":
        return spec.kind
    return f"{spec.kind}:frame_len={spec.frame_len}"


def _blocks(x: Waveform, frame_len: int) -> tuple[np.ndarray, int]:
    if x.num_samples < frame_len:
        raise ValidationError(
            f"input has {x.num_samples} samples, needs at least frame_len={frame_len}"
        )
    t = x.num_samples // frame_len
    remainder = x.num_samples - t * frame_len
    return x.samples[: t * frame_len].reshape(t, frame_len), remainder


def encode(x: Waveform, spec: CodecSpec) -> LatentSequence:
    """Waveform -> latent columns. Trailing samples short of a full block are
    dropped; the count is recorded in meta["remainder_samples"]."""
    if spec.kind == "external_latents":
        raise ValidationError(
            "external_latents has no encoder; read latents from an LSSL file instead"
        )
    blocks, remainder = _blocks(x, spec.frame_len)
    if spec.kind == "dct_bank":
        blocks = scipy.fft.dct(blocks, type=2, norm="ortho", axis=1)
    meta = {
        "codec": codec_to_string(spec),
        "sample_rate_hz": x.sample_rate_hz,
        "remainder_samples": remainder,
    }
    return LatentSequence(
        data=blocks.T.copy(),
        frame_rate_hz=x.sample_rate_hz / spec.frame_len,
        meta=meta,
    )


def decode(f: LatentSequence, spec: CodecSpec) -> Waveform:
    """Latent columns -> waveform; exact inverse of encode (minus remainder)."""
    if spec.kind == "external_latents":
        raise ValidationError(
            "external_latents has no decoder; use the tool that produced the latents"
        )
    if f.dim != spec.frame_len:
        raise ValidationError(
            f"latent dimension {f.dim} does not match codec frame_len {spec.frame_len}"
        )
    blocks = f.data.T
    if spec.kind == "dct_bank":
        blocks = scipy.fft.idct(blocks, type=2, norm="ortho", axis=1)
    rate = f.frame_rate_hz * spec.frame_len
    rate_int = int(round(rate))
    if rate_int <= 0 or abs(rate - rate_int) > 1e-6 * max(rate, 1.0):
        raise ValidationError(
            f"frame rate {f.frame_rate_hz} * frame_len {spec.frame_len} is not an "
            f"integer sample rate"
        )
    return Waveform(samples=blocks.reshape(-1).copy(), sample_rate_hz=rate_int)


def standardize_duration(x: Waveform, target_seconds: float) -> Waveform:
    """Cyclically pad or truncate to exactly round(target_seconds * rate) samples.

    Padding repeats the signal (sample t = x[t mod len]) rather than inserting
    zeros, so frame statistics stay representative of the content.
    """
    if target_seconds <= 0:
        raise ValidationError(f"target duration must be positive, got {target_seconds}")
    if x.num_samples == 0:
        raise ValidationError("cannot standardize an empty waveform")
    target = int(round(target_seconds * x.sample_rate_hz))
    if target == x.num_samples:
        return x
    if target < x.num_samples:
        samples = x.samples[:target].copy()
    else:
        samples = np.resize(x.samples, target)  # np.resize repeats cyclically
    return Waveform(samples=samples, sample_rate_hz=x.sample_rate_hz)


def read_latents(path) -> LatentSequence:
    with open(path, "rb") as fh:
        blob = fh.read()
    data, frame_rate = formats.unpack_latents(blob)
    return LatentSequence(data=data, frame_rate_hz=frame_rate, meta={"source": str(path)})


def write_latents(f: LatentSequence, path) -> None:
    blob = formats.pack_latents(f.data, f.frame_rate_hz)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_wav(path) -> Waveform:
    """Read a mono WAV file (PCM 16-bit or IEEE float-32).

    PCM samples are scaled to [-1, 1) by 1/32768; float data is passed through
    unscaled. Multichannel files and other sample formats are rejected.
    """
    try:
        rate, data = scipy.io.wavfile.read(path)
    except ValueError as exc:
        raise FormatError(f"{path}: not a readable WAV file ({exc})")
    if data.ndim != 1:
        raise ValidationError(
            f"{path}: expected mono audio, got {data.shape[1]} channels"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise FormatError(
            f"{path}: unsupported WAV sample format {data.dtype}, "
            f"expected int16 PCM or float32"
        )
    return Waveform(samples=samples, sample_rate_hz=int(rate))


def write_wav(x: Waveform, path, fmt: str = "float32") -> None:
    """Write a mono WAV file. Samples are clamped to [-1, 1] on the way out."""
    clipped = np.clip(x.samples, -1.0, 1.0)
    if fmt == "float32":
        payload = clipped.astype(np.float32)
    elif fmt == "pcm16":
        payload = np.round(clipped * 32767.0).astype(np.int16)
    else:
        raise ValidationError(f"unknown WAV format {fmt!r}, expected float32 or pcm16")
    scipy.io.wavfile.write(path, x.sample_rate_hz, payload)
