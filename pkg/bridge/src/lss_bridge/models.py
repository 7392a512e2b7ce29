"""Codec backends that turn 24 kHz waveforms into (n, T) latent matrices.

``encodec_24khz`` is the real pretrained neural codec, loaded through
transformers; latents are taken from the encoder output BEFORE residual
vector quantization, so the quantizer acts later as part of the channel.
``dct_proxy`` is a dependency-free stand-in with the same geometry (n=128
at 75 Hz): it projects 320-sample frames onto the lowest 128 orthonormal
DCT basis vectors, and its decode/re-encode cycle is exactly
latent-preserving, which makes it useful for offline pipeline tests.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import BridgeError

MODEL_IDS = ("encodec_24khz", "dct_proxy")


@dataclass(frozen=True)
class ModelConfig:
    model_id: str = "encodec_24khz"
    bandwidth_khz: float = 6.0

    def __post_init__(self):
        if self.model_id not in MODEL_IDS:
            raise BridgeError(
                f"unknown model {self.model_id!r}; choose from {MODEL_IDS}"
            )
        if self.bandwidth_khz <= 0:
            raise BridgeError(f"bandwidth must be positive, got {self.bandwidth_khz}")


class DctProxyModel:
    model_id = "dct_proxy"
    sample_rate_hz = 24_000
    latent_dim = 128
    hop = 320

    def __init__(self):
        full = scipy.fft.dct(np.eye(self.hop), type=2, norm="ortho", axis=0)
        self._basis = full[: self.latent_dim]  # orthonormal rows

    @property
    def frame_rate_hz(self) -> float:
        return self.sample_rate_hz / self.hop

    def encode(self, samples: np.ndarray) -> np.ndarray:
        x = np.asarray(samples, dtype=np.float64)
        frames = math.ceil(x.size / self.hop)
        padded = np.zeros(frames * self.hop)
        padded[: x.size] = x
        return self._basis @ padded.reshape(frames, self.hop).T

    def decode(self, latents: np.ndarray) -> np.ndarray:
        z = np.asarray(latents, dtype=np.float64)
        if z.ndim != 2 or z.shape[0] != self.latent_dim:
            raise BridgeError(
                f"{self.model_id} decodes {self.latent_dim}-dim latents, "
                f"got shape {z.shape}"
            )
        return (self._basis.T @ z).T.reshape(-1)


class EncodecModelWrapper:
    model_id = "encodec_24khz"
    _hub_name = "facebook/encodec_24khz"

    def __init__(self, bandwidth_khz: float = 6.0):
        try:
            import torch
            from transformers import EncodecModel
        except ImportError as exc:
            raise BridgeError(
                f"encodec backend needs torch + transformers ({exc}); "
                "install lss-bridge[encodec]"
            )
        try:
            model = EncodecModel.from_pretrained(self._hub_name)
        except Exception as exc:
            raise BridgeError(f"cannot load pretrained {self._hub_name}: {exc}")
        self._torch = torch
        self._model = model.eval()
        cfg = model.config
        self.sample_rate_hz = int(cfg.sampling_rate)
        self.latent_dim = int(cfg.hidden_size)
        self.hop = int(np.prod(cfg.upsampling_ratios))
        self.bandwidth_khz = bandwidth_khz

    @property
    def frame_rate_hz(self) -> float:
        return self.sample_rate_hz / self.hop

    def encode(self, samples: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = torch.as_tensor(
            np.asarray(samples, dtype=np.float32)
        ).reshape(1, 1, -1)
        with torch.no_grad():
            z = self._model.encoder(x)
        return z.squeeze(0).cpu().numpy().astype(np.float64)

    def decode(self, latents: np.ndarray) -> np.ndarray:
        z = np.asarray(latents, dtype=np.float64)
        if z.ndim != 2 or z.shape[0] != self.latent_dim:
            raise BridgeError(
                f"{self.model_id} decodes {self.latent_dim}-dim latents, "
                f"got shape {z.shape}"
            )
        torch = self._torch
        zt = torch.as_tensor(z[None].astype(np.float32))
        with torch.no_grad():
            y = self._model.decoder(zt)
        return y.squeeze().cpu().numpy().astype(np.float64)


@lru_cache(maxsize=4)
def _cached(model_id: str, bandwidth_khz: float):
    if model_id == "dct_proxy":
        return DctProxyModel()
    return EncodecModelWrapper(bandwidth_khz)


def load_model(config: ModelConfig):
    return _cached(config.model_id, config.bandwidth_khz)
