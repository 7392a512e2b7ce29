"""Blind watermarking of latent feature sequences.

Payload bits are embedded as keyed rotations of principal-component planes
and recovered, without the original signal, by accumulating sign-demodulated
subchunk covariances. The package provides the PCA front end, the keyed
schedule, embed/detect, invertible stand-in codecs, a manipulation battery,
and an AUC evaluation harness, plus byte-stable file formats (LSSB bases,
LSSL latents) for interoperating with external codecs.

Typical flow::

    basis = lss.fit_pca(corpus)
    z = lss.project(latents, basis)
    schedule = lss.derive_schedule(key, nonce, payload, lss.ScheduleParams(), z.num_frames)
    marked = lss.embed(z, schedule)
    report = lss.detect(marked, schedule, basis.eigenvalues, threshold)
"""

from .codecs import (
    CodecSpec,
    Waveform,
    codec_to_string,
    decode,
    encode,
    parse_codec,
    read_latents,
    read_wav,
    standardize_duration,
    write_latents,
    write_wav,
)
from .errors import ExternalToolError, FormatError, LssError, ValidationError
from .evaluation import (
    CSV_HEADER,
    SyntheticCorpusSpec,
    TrialRecord,
    auc_roc,
    default_experiment,
    generate_synthetic_corpus,
    resolve_spectrum,
    run_experiment,
    write_records_csv,
    write_summary_json,
)
from .latent import (
    LatentSequence,
    PcaBasis,
    ProjectedSequence,
    fit_pca,
    project,
    read_basis,
    unproject,
    write_basis,
)
from .manipulations import (
    FILTER_ORDER,
    ManipulationSpec,
    add_noise,
    apply_manipulation,
    butterworth,
    external_command,
    manipulation_to_string,
    parse_manipulation,
    resample,
)
from .schedule import (
    Nonce,
    Payload,
    ScheduleParams,
    SecretKey,
    WatermarkSchedule,
    chip_balance,
    derive_nonce,
    derive_schedule,
)
from .watermark import (
    DetectionReport,
    RotationStep,
    calibrate_threshold,
    detect,
    embed,
    expected_score,
    rotate_plane,
    rotation_plan,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "CodecSpec",
    "DetectionReport",
    "ExternalToolError",
    "FILTER_ORDER",
    "FormatError",
    "LatentSequence",
    "LssError",
    "ManipulationSpec",
    "Nonce",
    "Payload",
    "PcaBasis",
    "ProjectedSequence",
    "RotationStep",
    "ScheduleParams",
    "SecretKey",
    "SyntheticCorpusSpec",
    "TrialRecord",
    "ValidationError",
    "WatermarkSchedule",
    "Waveform",
    "add_noise",
    "apply_manipulation",
    "auc_roc",
    "butterworth",
    "calibrate_threshold",
    "chip_balance",
    "codec_to_string",
    "decode",
    "default_experiment",
    "derive_nonce",
    "derive_schedule",
    "detect",
    "embed",
    "encode",
    "expected_score",
    "external_command",
    "fit_pca",
    "generate_synthetic_corpus",
    "manipulation_to_string",
    "parse_codec",
    "parse_manipulation",
    "project",
    "read_basis",
    "read_latents",
    "read_wav",
    "resample",
    "resolve_spectrum",
    "rotate_plane",
    "rotation_plan",
    "run_experiment",
    "standardize_duration",
    "unproject",
    "write_basis",
    "write_latents",
    "write_records_csv",
    "write_summary_json",
    "write_wav",
]
