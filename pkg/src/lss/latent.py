"""Latent sequences, PCA basis estimation, and projection to component space.

A latent sequence is an ``n x T`` real matrix: one column of ``n`` features
per analysis frame. A basis holds the corpus mean, the orthonormal principal
directions (columns), and their variances sorted non-increasing. Projection
centers each frame on the corpus mean and expresses it in the principal
coordinate system; unprojection inverts it exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import formats
from .errors import ValidationError

# Eigenvalues below this fraction of the largest make the detector's
# 1/sqrt(lambda_i lambda_j) normalization blow up; the fit refuses them.
EIGENVALUE_FLOOR_RATIO = 1e-12

# Max per-entry deviation of U^T U from the identity.
ORTHONORMALITY_TOL = 1e-9

# Per-pair eigendecomposition residual bound, relative to ||cov||_2.
EIG_RESIDUAL_TOL = 1e-8


def _as_matrix(data: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{what}: expected a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: entries must be finite")
    return arr


@dataclass(frozen=True)
class LatentSequence:
    """Continuous latent features of one utterance: ``n`` rows, ``T`` frame columns."""

    data: np.ndarray
    frame_rate_hz: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arr = _as_matrix(self.data, "LatentSequence")
        if arr.shape[0] < 2:
            raise ValidationError(f"latent dimension must be >= 2, got {arr.shape[0]}")
        if arr.shape[1] < 1:
            raise ValidationError("latent sequence needs at least one frame")
        if not self.frame_rate_hz > 0:
            raise ValidationError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PcaBasis:
    """Corpus mean, orthonormal component columns, and their variances.

    Eigenvalues are sorted non-increasing and strictly positive; component
    column ``k`` belongs to ``eigenvalues[k]``. Column signs follow the
    convention that the largest-magnitude entry of each column is positive,
    which makes independently fitted bases on the same corpus identical.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        comps = _as_matrix(self.components, "PcaBasis.components")
        eig = np.asarray(self.eigenvalues, dtype=np.float64)
        n = mean.shape[0]
        if mean.ndim != 1 or comps.shape != (n, n) or eig.shape != (n,):
            raise ValidationError(
                f"inconsistent basis shapes: mean {mean.shape}, "
                f"components {comps.shape}, eigenvalues {eig.shape}"
            )
        gram_err = np.abs(comps.T @ comps - np.eye(n)).max()
        if gram_err > ORTHONORMALITY_TOL:
            raise ValidationError(f"components not orthonormal (max |U^T U - I| = {gram_err:.3e})")
        if np.any(np.diff(eig) > 0):
            raise ValidationError("eigenvalues must be sorted non-increasing")
        if not np.all(eig > 0):
            raise ValidationError("eigenvalues must all be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def content_hash(self) -> str:
        """SHA-256 of the LSSB serialization; identifies a basis exactly."""
        return hashlib.sha256(
            formats.pack_basis(self.mean, self.eigenvalues, self.components)
        ).hexdigest()


@dataclass(frozen=True)
class ProjectedSequence:
    """A latent sequence expressed in principal-component coordinates."""

    data: np.ndarray
    basis_id: str
    frame_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "data", _as_matrix(self.data, "ProjectedSequence"))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]


def fit_pca(corpus: Iterable[LatentSequence]) -> PcaBasis:
    """Estimate a PCA basis from the pooled frames of a corpus.

    Single streaming pass: per-sequence means and scatter matrices are merged
    with Chan's parallel update, which is numerically stable and never holds
    more than one sequence in memory. The covariance is the population
    estimate (divide by the total frame count). Eigenpairs come from a
    symmetric solver, are sorted by descending eigenvalue, and get the
    deterministic sign convention; a residual check guards the decomposition.

    Raises
    ------
    ValidationError
        If sequences disagree on dimension, the corpus has fewer than n+1
        frames, or any eigenvalue falls below ``EIGENVALUE_FLOOR_RATIO``
        times the largest (including the all-constant, zero-variance corpus).
    """
    n = None
    count = 0
    mean = None
    scatter = None
    for seq in corpus:
        x = seq.data
        if n is None:
            n = x.shape[0]
            mean = np.zeros(n)
            scatter = np.zeros((n, n))
        elif x.shape[0] != n:
            raise ValidationError(
                f"corpus dimension mismatch: expected {n}, got {x.shape[0]}"
            )
        b = x.shape[1]
        batch_mean = x.mean(axis=1)
        centered = x - batch_mean[:, None]
        batch_scatter = centered @ centered.T
        delta = batch_mean - mean
        scatter += batch_scatter + np.outer(delta, delta) * (count * b / (count + b))
        mean += delta * (b / (count + b))
        count += b
    if n is None:
        raise ValidationError("empty corpus")
    if count < n + 1:
        raise ValidationError(f"corpus has {count} frames; need at least n+1 = {n + 1}")

    cov = scatter / count
    cov = (cov + cov.T) / 2.0
    eigenvalues, vectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]

    if eigenvalues[0] <= 0 or eigenvalues[-1] <= EIGENVALUE_FLOOR_RATIO * eigenvalues[0]:
        raise ValidationError(
            "covariance is rank deficient for watermarking: smallest eigenvalue "
            f"{eigenvalues[-1]:.3e} vs largest {eigenvalues[0]:.3e}"
        )

    # Deterministic sign: largest-|entry| of each column positive.
    flip = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(n)] < 0
    vectors[:, flip] *= -1.0

    residual = np.abs(cov @ vectors - vectors * eigenvalues).max(axis=0)
    bound = EIG_RESIDUAL_TOL * eigenvalues[0]
    if np.any(residual > bound):
        raise ValidationError(
            f"eigendecomposition residual {residual.max():.3e} exceeds {bound:.3e}"
        )

    return PcaBasis(mean=mean, components=vectors, eigenvalues=eigenvalues)


def project(f: LatentSequence, basis: PcaBasis) -> ProjectedSequence:
    """Center on the corpus mean and rotate into principal coordinates."""
    if f.dim != basis.dim:
        raise ValidationError(f"dimension mismatch: sequence {f.dim}, basis {basis.dim}")
    z = basis.components.T @ (f.data - basis.mean[:, None])
    return ProjectedSequence(data=z, basis_id=basis.content_hash(), frame_rate_hz=f.frame_rate_hz)


def unproject(z: ProjectedSequence, basis: PcaBasis) -> LatentSequence:
    """Inverse of :func:`project`: rotate back and restore the mean."""
    if z.dim != basis.dim:
        raise ValidationError(f"dimension mismatch: sequence {z.dim}, basis {basis.dim}")
    f = basis.components @ z.data + basis.mean[:, None]
    return LatentSequence(data=f, frame_rate_hz=z.frame_rate_hz)


def write_basis(basis: PcaBasis, path) -> None:
    with open(path, "wb") as fh:
        fh.write(formats.pack_basis(basis.mean, basis.eigenvalues, basis.components))


def read_basis(path) -> PcaBasis:
    with open(path, "rb") as fh:
        mean, eigenvalues, components = formats.unpack_basis(fh.read())
    return PcaBasis(mean=mean, components=components, eigenvalues=eigenvalues)
