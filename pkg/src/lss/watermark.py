"""Embedding and detection of covariance-signature watermarks.

Embedding applies the scheduled plane rotations to a projected sequence: for
chunk c, plane p = (i, j), subchunk l, every frame in the subchunk has its
(i, j) components rotated by ``beta[c,p] * chips[c,p,l] * theta``. Rotations
are orthogonal and the planes within a chunk are disjoint, so per-frame norms
are preserved exactly and the operation is inverted by embedding the bitwise
inverted payload.

Detection accumulates, per (chunk, plane, subchunk), the locally centered
cross-covariance of the plane's two components, normalized by
``|l| * sqrt(lambda_i * lambda_j)``, demodulated by the schedule's bit and
chip signs, and summed into a score. With the matching schedule every term's
expectation is positive; with a different key, nonce, or payload the signs
are independent of the data and the terms cancel on average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .latent import ProjectedSequence
from .schedule import WatermarkSchedule


@dataclass(frozen=True)
class RotationStep:
    """One scheduled rotation: plane (i, j) by ``angle`` over frames [start, stop)."""

    start_frame: int
    stop_frame: int
    plane: tuple[int, int]
    angle: float


def rotation_plan(schedule: WatermarkSchedule) -> list[RotationStep]:
    """Expand a schedule into its ordered list of rotation steps.

    Canonical order is (chunk, plane-slot, subchunk) ascending; with disjoint
    planes the composition is order-independent, but the order is fixed for
    bitwise reproducibility. Every |angle| equals params.theta.
    """
    params = schedule.params
    sub = params.subchunk_frames
    steps = []
    for c in range(schedule.chunk_count):
        base = c * params.chunk_frames
        for p in range(params.planes_per_chunk):
            i, j = schedule.planes[c, p]
            for l in range(params.subchunks_per_chunk):
                angle = float(schedule.beta[c, p] * schedule.chips[c, p, l]) * params.theta
                start = base + l * sub
                steps.append(RotationStep(start, start + sub, (int(i), int(j)), angle))
    return steps


def rotate_plane(
    z: ProjectedSequence,
    plane: tuple[int, int],
    angle: float,
    frames: tuple[int, int] | None = None,
) -> ProjectedSequence:
    """Rotate components (i, j) of every frame in [start, stop) by ``angle``.

    Only rows i and j change, only inside the range; the 2-norm of the (i, j)
    pair is preserved per frame. ``frames=None`` rotates the whole sequence.
    """
    i, j = plane
    n, t = z.data.shape
    if not (0 <= i < j < n):
        raise ValidationError(f"plane ({i}, {j}) out of range for dimension {n}")
    start, stop = frames if frames is not None else (0, t)
    if not (0 <= start <= stop <= t):
        raise ValidationError(f"frame range [{start}, {stop}) invalid for {t} frames")
    out = z.data.copy()
    if angle != 0.0 and stop > start:
        c, s = math.cos(angle), math.sin(angle)
        zi = out[i, start:stop].copy()
        zj = out[j, start:stop]
        out[i, start:stop] = c * zi - s * zj
        out[j, start:stop] = s * zi + c * zj
    return ProjectedSequence(data=out, basis_id=z.basis_id, frame_rate_hz=z.frame_rate_hz)


def _check_schedule_fits(z: ProjectedSequence, schedule: WatermarkSchedule) -> None:
    if schedule.num_frames != z.num_frames:
        raise ValidationError(
            f"schedule derived for {schedule.num_frames} frames, sequence has {z.num_frames}"
        )
    if schedule.planes.size and int(schedule.planes.max()) >= z.dim:
        raise ValidationError(
            f"schedule addresses component {int(schedule.planes.max())}, "
            f"sequence has dimension {z.dim}"
        )


def embed(z: ProjectedSequence, schedule: WatermarkSchedule) -> ProjectedSequence:
    """Apply every scheduled rotation; frames after the last full chunk are untouched."""
    _check_schedule_fits(z, schedule)
    params = schedule.params
    theta = params.theta
    out = z.data.copy()
    if theta == 0.0:
        return ProjectedSequence(data=out, basis_id=z.basis_id, frame_rate_hz=z.frame_rate_hz)

    m = params.chunk_frames
    sub = params.subchunk_frames
    # (C, P, M): the signed angle applied to each frame of each plane slot.
    angles = np.repeat(schedule.beta[:, :, None] * schedule.chips, sub, axis=2) * theta
    cos_a = np.cos(angles)
    sin_a = np.sin(angles)
    for c in range(schedule.chunk_count):
        seg = out[:, c * m : (c + 1) * m]
        i_idx = schedule.planes[c, :, 0]
        j_idx = schedule.planes[c, :, 1]
        zi = seg[i_idx]
        zj = seg[j_idx]
        seg[i_idx] = cos_a[c] * zi - sin_a[c] * zj
        seg[j_idx] = sin_a[c] * zi + cos_a[c] * zj
    return ProjectedSequence(data=out, basis_id=z.basis_id, frame_rate_hz=z.frame_rate_hz)


@dataclass(frozen=True)
class DetectionReport:
    """Detection outcome: the accumulated score, its signed per-(c,p,l) terms
    in canonical order, and the thresholded decision."""

    score: float
    terms: np.ndarray
    threshold: float
    decision: bool
    num_terms: int

    @property
    def score_per_term(self) -> float:
        return self.score / self.num_terms if self.num_terms else 0.0

    def to_dict(self, include_terms: bool = False) -> dict:
        out = {
            "score": self.score,
            "score_per_term": self.score_per_term,
            "threshold": self.threshold,
            "decision": self.decision,
            "num_terms": self.num_terms,
        }
        if include_terms:
            out["terms"] = [float(v) for v in self.terms]
        return out


def detect(
    z: ProjectedSequence,
    schedule: WatermarkSchedule,
    eigenvalues: np.ndarray,
    threshold: float,
) -> DetectionReport:
    """Score a projected sequence against a schedule.

    Per (chunk, plane, subchunk): center the plane's two component rows on
    their subchunk means, average their product, normalize by
    ``sqrt(lambda_i * lambda_j)``, and demodulate with the schedule's bit and
    chip. The score is the sum of the signed terms; decision is
    ``score > threshold`` (strict).
    """
    _check_schedule_fits(z, schedule)
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.ndim != 1 or lam.shape[0] < z.dim:
        raise ValidationError(
            f"need eigenvalues for all {z.dim} components, got shape {lam.shape}"
        )
    if not np.all(lam > 0):
        raise ValidationError("eigenvalues must be positive for detection")

    params = schedule.params
    m = params.chunk_frames
    sub = params.subchunk_frames
    p_count = params.planes_per_chunk
    l_count = params.subchunks_per_chunk
    c_count = schedule.chunk_count

    terms = np.empty((c_count, p_count, l_count))
    for c in range(c_count):
        seg = z.data[:, c * m : (c + 1) * m]
        i_idx = schedule.planes[c, :, 0]
        j_idx = schedule.planes[c, :, 1]
        zi = seg[i_idx].reshape(p_count, l_count, sub)
        zj = seg[j_idx].reshape(p_count, l_count, sub)
        zi = zi - zi.mean(axis=2, keepdims=True)
        zj = zj - zj.mean(axis=2, keepdims=True)
        cov = (zi * zj).sum(axis=2) / sub
        norm = np.sqrt(lam[i_idx] * lam[j_idx])[:, None]
        terms[c] = schedule.beta[c][:, None] * schedule.chips[c] * (cov / norm)

    flat = terms.reshape(-1)
    score = float(flat.sum())
    return DetectionReport(
        score=score,
        terms=flat,
        threshold=float(threshold),
        decision=score > threshold,
        num_terms=flat.size,
    )


def expected_score(schedule: WatermarkSchedule, eigenvalues: np.ndarray) -> float:
    """Mean detection score for a correctly watermarked Gaussian sequence.

    Each rotated plane contributes an off-diagonal covariance of
    ``(lambda_i - lambda_j) * sin(theta) * cos(theta)`` per subchunk, scaled
    by the detector's normalization. Centering on the local subchunk mean
    shrinks the measured covariance by (|l| - 1) / |l|, so that factor is
    included here rather than left for callers to discover empirically.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    params = schedule.params
    sub = params.subchunk_frames
    i_idx = schedule.planes[:, :, 0]
    j_idx = schedule.planes[:, :, 1]
    per_slot = (lam[i_idx] - lam[j_idx]) / np.sqrt(lam[i_idx] * lam[j_idx])
    factor = 0.5 * math.sin(2.0 * params.theta) * (sub - 1) / sub
    return float(factor * params.subchunks_per_chunk * per_slot.sum())


def calibrate_threshold(null_scores, target_fpr: float) -> float:
    """Empirical threshold at a target false-positive rate.

    Returns the (1 - target_fpr) quantile of the null scores with "higher"
    interpolation: the smallest observed score whose rank reaches the
    quantile. The decision rule is strictly greater-than, so scores equal to
    the threshold do not fire.
    """
    scores = np.asarray(null_scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 100:
        raise ValidationError(f"need at least 100 null scores, got {scores.size}")
    if not 0.0 < target_fpr < 1.0:
        raise ValidationError(f"target_fpr must be in (0, 1), got {target_fpr}")
    return float(np.quantile(scores, 1.0 - target_fpr, method="higher"))
