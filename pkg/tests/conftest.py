import numpy as np
import pytest

from lss import (
    LatentSequence,
    Payload,
    ScheduleParams,
    SecretKey,
    SyntheticCorpusSpec,
    fit_pca,
    generate_synthetic_corpus,
)

TEST_KEY = SecretKey(bytes(range(32)))
TEST_PAYLOAD = Payload.from_hex("a5c3", 16)

# Small geometry used by most unit tests: fast, but with enough planes and
# chunks for the statistics to be meaningful.
SMALL_PARAMS = ScheduleParams(
    chunk_frames=32,
    subchunk_frames=8,
    planes_per_chunk=8,
    theta=0.18,
    candidate_components=24,
)


def make_latents(n=32, t=256, seed=0, scale=None, frame_rate=75.0):
    """Random latent sequence with per-component scales (decade by default)."""
    rng = np.random.default_rng(seed)
    if scale is None:
        scale = np.geomspace(1.0, 0.1, n)
    data = rng.standard_normal((n, t)) * np.asarray(scale)[:, None]
    return LatentSequence(data=data, frame_rate_hz=frame_rate, meta={})


@pytest.fixture(scope="session")
def small_corpus_and_basis():
    spec = SyntheticCorpusSpec(
        n=32, num_frames=256, num_utterances=40, eigen_spectrum="decade", seed=7
    )
    corpus = list(generate_synthetic_corpus(spec))
    basis = fit_pca(corpus[:25])
    return corpus, basis
