"""Embed/detect math: rotation geometry, covariance footprint, scoring."""

import math

import numpy as np
import pytest

from lss import (
    Nonce,
    ProjectedSequence,
    ScheduleParams,
    SecretKey,
    ValidationError,
    auc_roc,
    calibrate_threshold,
    derive_schedule,
    detect,
    embed,
    expected_score,
    rotate_plane,
    rotation_plan,
)

from conftest import SMALL_PARAMS, TEST_KEY, TEST_PAYLOAD

ZERO_NONCE = Nonce(bytes(16))


def _projected(n=24, t=256, seed=0, scale=None):
    rng = np.random.default_rng(seed)
    if scale is None:
        scale = np.geomspace(1.0, 0.1, n)
    data = rng.standard_normal((n, t)) * np.asarray(scale)[:, None]
    return ProjectedSequence(data=data, basis_id="test", frame_rate_hz=75.0), np.asarray(
        scale
    ) ** 2


def _schedule(t=256, params=SMALL_PARAMS, nonce=ZERO_NONCE):
    return derive_schedule(TEST_KEY, nonce, TEST_PAYLOAD, params, t)


class TestRotatePlane:
    def test_zero_angle_is_bitwise_identity(self):
        z, _ = _projected()
        out = rotate_plane(z, (0, 1), 0.0)
        assert np.array_equal(out.data, z.data)

    def test_rotation_inverts(self):
        z, _ = _projected()
        out = rotate_plane(rotate_plane(z, (2, 5), 0.3), (2, 5), -0.3)
        assert np.allclose(out.data, z.data, atol=1e-12)

    def test_only_target_rows_and_range_change(self):
        z, _ = _projected()
        out = rotate_plane(z, (1, 4), 0.25, frames=(10, 20))
        mask = np.ones(z.dim, dtype=bool)
        mask[[1, 4]] = False
        assert np.array_equal(out.data[mask], z.data[mask])
        assert np.array_equal(out.data[:, :10], z.data[:, :10])
        assert np.array_equal(out.data[:, 20:], z.data[:, 20:])
        assert not np.array_equal(out.data[1, 10:20], z.data[1, 10:20])

    def test_pair_norm_preserved(self):
        z, _ = _projected()
        out = rotate_plane(z, (0, 3), 0.9)
        before = np.hypot(z.data[0], z.data[3])
        after = np.hypot(out.data[0], out.data[3])
        assert np.abs(before - after).max() <= 1e-12

    def test_bad_plane_rejected(self):
        z, _ = _projected()
        for plane in ((3, 3), (5, 2), (-1, 4), (0, z.dim)):
            with pytest.raises(ValidationError):
                rotate_plane(z, plane, 0.1)

    def test_bad_range_rejected(self):
        z, _ = _projected()
        with pytest.raises(ValidationError):
            rotate_plane(z, (0, 1), 0.1, frames=(10, z.num_frames + 1))


class TestFootprintLaw:
    def test_rotation_leaves_predicted_covariance(self):
        # Rotating N(0, diag(4, 1)) by theta makes the off-diagonal
        # covariance (lambda_i - lambda_j) * sin(theta)cos(theta); the
        # Monte-Carlo tolerance is 3 standard errors of the product-moment
        # estimator, so a correct implementation fails ~0.3% of the time by
        # luck and a wrong constant fails always.
        rng = np.random.default_rng(42)
        frames = 50_000
        theta = 0.18
        data = rng.standard_normal((2, frames)) * np.array([[2.0], [1.0]])
        z = ProjectedSequence(data=data, basis_id="mc", frame_rate_hz=1.0)
        rotated = rotate_plane(z, (0, 1), theta).data
        centered = rotated - rotated.mean(axis=1, keepdims=True)
        products = centered[0] * centered[1]
        emp = products.mean()
        se = products.std(ddof=1) / math.sqrt(frames)
        predicted = 0.5 * (4.0 - 1.0) * math.sin(2 * theta)
        assert abs(emp - predicted) <= 3 * se

    def test_small_angle_form_tracks_exact_form(self):
        # (li - lj) * theta vs (li - lj) * sin(theta)cos(theta): relative
        # error grows as ~(2 theta)^2 / 6 and crosses 2% just above 0.17 rad.
        for theta in np.linspace(0.01, 0.17, 17):
            exact = 0.5 * math.sin(2 * theta)
            approx = theta
            assert abs(approx - exact) / exact <= 0.02
        err_at_default = (0.18 - 0.5 * math.sin(0.36)) / (0.5 * math.sin(0.36))
        assert 0.02 < err_at_default < 0.023


class TestEmbed:
    def test_zero_theta_is_bitwise_identity(self):
        z, _ = _projected()
        params = ScheduleParams(
            chunk_frames=32, subchunk_frames=8, planes_per_chunk=8,
            theta=0.0, candidate_components=24,
        )
        sched = derive_schedule(TEST_KEY, ZERO_NONCE, TEST_PAYLOAD, params, z.num_frames)
        assert np.array_equal(embed(z, sched).data, z.data)

    def test_per_frame_norms_preserved(self):
        z, _ = _projected()
        marked = embed(z, _schedule())
        assert np.abs(
            np.linalg.norm(marked.data, axis=0) - np.linalg.norm(z.data, axis=0)
        ).max() <= 1e-9

    def test_trailing_partial_chunk_untouched(self):
        z, _ = _projected(t=256 + 19)
        marked = embed(z, _schedule(t=256 + 19))
        assert np.array_equal(marked.data[:, 256:], z.data[:, 256:])

    def test_matches_explicit_rotation_plan(self):
        z, _ = _projected()
        sched = _schedule()
        stepwise = z
        for step in rotation_plan(sched):
            stepwise = rotate_plane(
                stepwise, step.plane, step.angle, (step.start_frame, step.stop_frame)
            )
        assert np.allclose(embed(z, sched).data, stepwise.data, atol=1e-12)

    def test_plan_angles_have_theta_magnitude(self):
        sched = _schedule()
        for step in rotation_plan(sched):
            assert abs(step.angle) == pytest.approx(SMALL_PARAMS.theta)
            assert step.stop_frame - step.start_frame == SMALL_PARAMS.subchunk_frames

    def test_inverted_payload_undoes_embedding(self):
        z, _ = _projected()
        forward = derive_schedule(
            TEST_KEY, ZERO_NONCE, TEST_PAYLOAD, SMALL_PARAMS, z.num_frames
        )
        backward = derive_schedule(
            TEST_KEY, ZERO_NONCE, TEST_PAYLOAD.inverted(), SMALL_PARAMS, z.num_frames
        )
        restored = embed(embed(z, forward), backward)
        assert np.allclose(restored.data, z.data, atol=1e-9)

    def test_frame_count_mismatch_rejected(self):
        z, _ = _projected(t=256)
        with pytest.raises(ValidationError):
            embed(z, _schedule(t=224))

    def test_schedule_addressing_beyond_dim_rejected(self):
        z, _ = _projected(n=16)
        with pytest.raises(ValidationError):
            embed(z, _schedule())  # pool of 24 components, sequence has 16


class TestDetect:
    def test_matches_explicit_loop_oracle(self):
        z, lam = _projected()
        sched = _schedule()
        marked = embed(z, sched)
        report = detect(marked, sched, lam, threshold=0.0)

        params = sched.params
        sub = params.subchunk_frames
        expected_terms = []
        for c in range(sched.chunk_count):
            for p in range(params.planes_per_chunk):
                i, j = sched.planes[c, p]
                for l in range(params.subchunks_per_chunk):
                    t0 = c * params.chunk_frames + l * sub
                    zi = marked.data[i, t0 : t0 + sub]
                    zj = marked.data[j, t0 : t0 + sub]
                    cov = np.mean((zi - zi.mean()) * (zj - zj.mean()))
                    cov /= math.sqrt(lam[i] * lam[j])
                    expected_terms.append(
                        float(sched.beta[c, p]) * float(sched.chips[c, p, l]) * cov
                    )
        assert np.allclose(report.terms, expected_terms, atol=1e-12)
        assert report.score == pytest.approx(sum(expected_terms), abs=1e-9)
        assert report.num_terms == len(expected_terms)

    def test_score_equals_term_sum(self):
        z, lam = _projected(seed=3)
        sched = _schedule()
        report = detect(embed(z, sched), sched, lam, threshold=1.0)
        assert report.score == pytest.approx(float(report.terms.sum()), abs=1e-9)

    def test_decision_strictly_greater(self):
        z, lam = _projected(seed=4)
        sched = _schedule()
        marked = embed(z, sched)
        score = detect(marked, sched, lam, threshold=0.0).score
        at_threshold = detect(marked, sched, lam, threshold=score)
        assert at_threshold.decision is False
        below = detect(marked, sched, lam, threshold=score - 1e-9)
        assert below.decision is True

    def test_json_report_fields(self):
        z, lam = _projected(seed=5)
        sched = _schedule()
        report = detect(z, sched, lam, threshold=2.0)
        payload = report.to_dict()
        assert set(payload) == {
            "score", "score_per_term", "threshold", "decision", "num_terms",
        }
        with_terms = report.to_dict(include_terms=True)
        assert len(with_terms["terms"]) == report.num_terms
        assert payload["score_per_term"] == pytest.approx(
            payload["score"] / payload["num_terms"]
        )

    def test_nonpositive_eigenvalues_rejected(self):
        z, lam = _projected(seed=6)
        lam = lam.copy()
        lam[-1] = 0.0
        with pytest.raises(ValidationError):
            detect(z, _schedule(), lam, threshold=0.0)

    def test_unwatermarked_scores_have_zero_mean(self):
        # Chip demodulation of an unrelated signal averages out: over 500
        # independent sequences the mean score should land within 3 standard
        # errors of zero.
        _, lam = _projected(seed=0)
        scores = []
        for trial in range(500):
            z, _ = _projected(seed=1000 + trial)
            sched = _schedule(nonce=Nonce(trial.to_bytes(16, "big")))
            scores.append(detect(z, sched, lam, threshold=0.0).score)
        scores = np.asarray(scores)
        se = scores.std(ddof=1) / math.sqrt(len(scores))
        assert abs(scores.mean()) <= 3 * se

    def test_watermarked_score_positive_in_nearly_all_trials(self):
        _, lam = _projected(seed=0)
        positive = 0
        trials = 1000
        for trial in range(trials):
            z, _ = _projected(seed=5000 + trial)
            sched = _schedule(nonce=Nonce(trial.to_bytes(16, "big")))
            if detect(embed(z, sched), sched, lam, threshold=0.0).score > 0:
                positive += 1
        assert positive >= 0.99 * trials

    def test_expected_score_matches_monte_carlo(self):
        # Closed-form prediction (rotation footprint, eigenvalue
        # normalization, and the (m-1)/m local-mean shrinkage) against the
        # empirical mean over enough terms for a 5% band.
        params = ScheduleParams(
            chunk_frames=32, subchunk_frames=8, planes_per_chunk=8,
            theta=0.18, candidate_components=24,
        )
        t = 32 * 100  # 100 chunks x 8 planes x 4 subchunks = 3200 terms
        _, lam = _projected(seed=0)
        trials = 300
        means, preds = [], []
        for trial in range(trials):
            z, _ = _projected(t=t, seed=9000 + trial)
            sched = derive_schedule(
                TEST_KEY, Nonce(trial.to_bytes(16, "big")), TEST_PAYLOAD, params, t
            )
            means.append(detect(embed(z, sched), sched, lam, 0.0).score)
            preds.append(expected_score(sched, lam))
        assert float(np.mean(means)) == pytest.approx(float(np.mean(preds)), rel=0.05)

    def test_wrong_key_scores_sit_at_chance(self):
        _, lam = _projected(seed=0)
        wrong_key = SecretKey(bytes([TEST_KEY.key[0] ^ 1]) + TEST_KEY.key[1:])
        pos, neg = [], []
        for trial in range(500):
            z, _ = _projected(seed=20_000 + trial)
            nonce = Nonce(trial.to_bytes(16, "big"))
            sched = _schedule(nonce=nonce)
            wrong = derive_schedule(wrong_key, nonce, TEST_PAYLOAD, SMALL_PARAMS, z.num_frames)
            pos.append(detect(embed(z, sched), wrong, lam, 0.0).score)
            neg.append(detect(z, wrong, lam, 0.0).score)
        assert 0.45 <= auc_roc(pos, neg) <= 0.55


class TestExpectedScore:
    def test_scales_with_anisotropy(self):
        sched = _schedule()
        flat = expected_score(sched, np.ones(24))
        tilted = expected_score(sched, np.geomspace(1.0, 0.01, 24))
        assert flat == pytest.approx(0.0, abs=1e-12)
        assert tilted > 1.0

    def test_zero_theta_predicts_zero(self):
        params = ScheduleParams(
            chunk_frames=32, subchunk_frames=8, planes_per_chunk=8,
            theta=0.0, candidate_components=24,
        )
        sched = derive_schedule(TEST_KEY, ZERO_NONCE, TEST_PAYLOAD, params, 256)
        assert expected_score(sched, np.geomspace(1.0, 0.1, 24)) == 0.0


class TestCalibrateThreshold:
    def test_order_statistic_rule(self):
        scores = np.arange(1.0, 101.0)
        assert calibrate_threshold(scores, 0.05) == 96.0

    def test_median_for_half_fpr(self):
        scores = np.arange(1.0, 102.0)  # 101 values, median 51
        assert calibrate_threshold(scores, 0.5) == 51.0

    def test_degenerate_null(self):
        assert calibrate_threshold(np.full(150, 7.25), 0.01) == 7.25

    def test_sample_size_floor(self):
        with pytest.raises(ValidationError):
            calibrate_threshold(np.arange(99.0), 0.05)

    def test_fpr_range(self):
        scores = np.arange(100.0)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValidationError):
                calibrate_threshold(scores, bad)
