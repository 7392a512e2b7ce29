"""Export WAV files to LSSL latents and decode watermarked latents to WAV."""

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.io.wavfile
import scipy.signal

from .errors import BridgeError
from .lssl import read_lssl, write_lssl
from .models import ModelConfig, load_model


@dataclass(frozen=True)
class BridgeJob:
    input: str
    output: str
    model_id: str = "encodec_24khz"
    bandwidth_khz: float = 6.0

    def config(self) -> ModelConfig:
        return ModelConfig(self.model_id, self.bandwidth_khz)


@dataclass(frozen=True)
class BridgeManifest:
    jobs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        for job in self.jobs:
            job.config()  # validates model id and bandwidth

    @classmethod
    def from_pairs(cls, pairs, model_id="encodec_24khz", bandwidth_khz=6.0):
        return cls(
            jobs=[BridgeJob(str(a), str(b), model_id, bandwidth_khz) for a, b in pairs]
        )


def read_wav_mono(path) -> tuple[np.ndarray, int]:
    try:
        rate, data = scipy.io.wavfile.read(path)
    except Exception as exc:
        raise BridgeError(f"{path}: not a readable WAV file ({exc})")
    if data.ndim != 1:
        raise BridgeError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise BridgeError(f"{path}: unsupported sample dtype {data.dtype}")
    return x, int(rate)


def write_wav(path, samples: np.ndarray, rate: int) -> None:
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    scipy.io.wavfile.write(path, rate, x.astype(np.float32))


def _resample(x: np.ndarray, src: int, dst: int) -> np.ndarray:
    ratio = Fraction(dst, src)
    return scipy.signal.resample_poly(x, ratio.numerator, ratio.denominator)


def _load_at_model_rate(path, model) -> np.ndarray:
    x, rate = read_wav_mono(path)
    if rate != model.sample_rate_hz:
        warnings.warn(
            f"{path}: resampling {rate} Hz -> {model.sample_rate_hz} Hz for "
            f"{model.model_id}"
        )
        x = _resample(x, rate, model.sample_rate_hz)
    return x


def export_latents(manifest: BridgeManifest) -> list[str]:
    """Encode every manifest job's WAV into an LSSL latent file.

    Latents are continuous (pre-quantization) model outputs stored as f32.
    Returns the list of written paths in job order.
    """
    written = []
    for job in manifest.jobs:
        model = load_model(job.config())
        x = _load_at_model_rate(job.input, model)
        z = model.encode(x)
        if job.model_id == "encodec_24khz" and (
            z.shape[0] != 128 or model.frame_rate_hz != 75.0
        ):
            raise BridgeError(
                f"{job.model_id} produced n={z.shape[0]} at "
                f"{model.frame_rate_hz} Hz; expected 128 at 75 Hz"
            )
        write_lssl(job.output, z, model.frame_rate_hz)
        written.append(job.output)
    return written


def import_and_decode(lssl_path, out_wav, config: ModelConfig | None = None) -> str:
    """Decode an LSSL latent file (watermarked or not) back to a WAV file."""
    config = config or ModelConfig()
    model = load_model(config)
    z, frame_rate = read_lssl(lssl_path)
    if z.shape[0] != model.latent_dim:
        raise BridgeError(
            f"{lssl_path}: latent dimension {z.shape[0]} does not match "
            f"{config.model_id} (n={model.latent_dim})"
        )
    if abs(frame_rate - model.frame_rate_hz) > 1e-6:
        raise BridgeError(
            f"{lssl_path}: frame rate {frame_rate} Hz does not match "
            f"{config.model_id} ({model.frame_rate_hz} Hz)"
        )
    y = model.decode(z)
    write_wav(out_wav, y, model.sample_rate_hz)
    return str(out_wav)
