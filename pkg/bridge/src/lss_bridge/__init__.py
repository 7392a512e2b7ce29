"""Bridge between real codec latents and the LSSL watermarking pipeline."""

from .bridge import (
    BridgeJob,
    BridgeManifest,
    export_latents,
    import_and_decode,
    read_wav_mono,
    write_wav,
)
from .errors import BridgeError
from .lssl import read_lssl, write_lssl
from .models import MODEL_IDS, ModelConfig, load_model

__version__ = "0.1.0"

__all__ = [
    "MODEL_IDS",
    "BridgeError",
    "BridgeJob",
    "BridgeManifest",
    "ModelConfig",
    "export_latents",
    "import_and_decode",
    "load_model",
    "read_lssl",
    "read_wav_mono",
    "write_lssl",
    "write_wav",
]
