"""Acceptance gate: one test per top-level criterion, printed as PASS lines.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
summary values alongside the pass/fail status.
"""

import csv
import json
import math
import time

import numpy as np
import pytest
import scipy.signal

from lss import (
    Payload,
    ScheduleParams,
    SecretKey,
    SyntheticCorpusSpec,
    Waveform,
    add_noise,
    auc_roc,
    butterworth,
    calibrate_threshold,
    default_experiment,
    derive_schedule,
    embed,
    fit_pca,
    generate_synthetic_corpus,
    read_basis,
    read_latents,
    resample,
    write_basis,
    write_latents,
)
from lss.latent import ProjectedSequence

from conftest import TEST_KEY, TEST_PAYLOAD, make_latents


@pytest.fixture(scope="module")
def experiment():
    """The scaled detection experiment shared by criteria 4, 5, and 6."""
    start = time.perf_counter()
    records, summary = default_experiment()
    elapsed = time.perf_counter() - start
    return records, summary, elapsed


def _scores(records, condition, track):
    return [r.score for r in records if r.condition == condition and r.track == track]


def test_c01_footprint_law():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    n = 100_000
    theta = 0.18
    z = rng.standard_normal((2, n)) * np.array([[2.0], [1.0]])  # variances 4, 1
    c, s = math.cos(theta), math.sin(theta)
    zi = c * z[0] - s * z[1]
    zj = s * z[0] + c * z[1]
    prods = zi * zj
    got = float(np.mean(prods))
    want = 0.5 * 3.0 * math.sin(2 * theta)
    se = float(np.std(prods, ddof=1)) / math.sqrt(n)
    elapsed = time.perf_counter() - start
    assert abs(got - want) <= 3.0 * se
    assert elapsed < 1.0
    print(f"PASS C1 footprint: cov={got:.6f} vs {want:.6f} (3 SE = {3*se:.6f}), "
          f"{elapsed*1e3:.0f} ms")


def test_c02_isometry_on_100_utterances():
    params = ScheduleParams(32, 8, 8, 0.18, 24)
    worst = 0.0
    for i in range(100):
        f = make_latents(n=64, t=256, seed=200 + i)
        z = ProjectedSequence(data=f.data, basis_id="t", frame_rate_hz=f.frame_rate_hz)
        schedule = derive_schedule(TEST_KEY, _nonce(i), TEST_PAYLOAD, params, 256)
        marked = embed(z, schedule)
        before = np.linalg.norm(z.data, axis=0)
        after = np.linalg.norm(marked.data, axis=0)
        worst = max(worst, float(np.abs(after - before).max()))
    assert worst < 1e-9
    print(f"PASS C2 isometry: max norm drift {worst:.3g} over 100 utterances")


def _nonce(i: int):
    from lss import Nonce

    return Nonce(i.to_bytes(16, "big"))


def test_c03_inverse_payload_restores_signal():
    params = ScheduleParams(32, 8, 8, 0.18, 24)
    f = make_latents(n=64, t=320, seed=42)
    z = ProjectedSequence(data=f.data, basis_id="t", frame_rate_hz=f.frame_rate_hz)
    fwd = derive_schedule(TEST_KEY, _nonce(1), TEST_PAYLOAD, params, 320)
    rev = derive_schedule(TEST_KEY, _nonce(1), TEST_PAYLOAD.inverted(), params, 320)
    restored = embed(embed(z, fwd), rev)
    err = float(np.abs(restored.data - z.data).max())
    assert err < 1e-9
    print(f"PASS C3 inverse payload: max restore error {err:.3g}")


def test_c04_clean_auc_at_scale(experiment):
    _, summary, elapsed = experiment
    auc = summary["clean"]["auc"]
    assert summary["clean"]["n_pos"] == summary["clean"]["n_neg"] == 100
    assert auc >= 0.97
    assert elapsed < 120.0
    print(f"PASS C4 clean AUC: {auc:.4f} on 100 utterances in {elapsed:.1f} s")


def test_c05_wrong_key_and_nonce_near_chance(experiment):
    _, summary, _ = experiment
    wk = summary["clean"]["wrong_key_auc"]
    wn = summary["clean"]["wrong_nonce_auc"]
    assert 0.43 <= wk <= 0.57
    assert 0.43 <= wn <= 0.57
    print(f"PASS C5 security: wrong-key AUC {wk:.4f}, wrong-nonce AUC {wn:.4f}")


def test_c06_robustness_ordering(experiment):
    records, summary, _ = experiment
    w20, w5 = "white:snr=20,seed=7", "white:snr=5,seed=7"
    auc_clean = summary["clean"]["auc"]
    auc_20 = summary[w20]["auc"]
    auc_5 = summary[w5]["auc"]
    assert auc_clean >= auc_20 >= auc_5
    assert auc_5 >= 0.85

    # accuracy at a fixed operating point must fall as the noise grows
    threshold = calibrate_threshold(_scores(records, "clean", "neg"), 0.05)
    accs = []
    for cond in ("clean", w20, w5):
        pos = np.array(_scores(records, cond, "pos"))
        accs.append(float(np.mean(pos > threshold)))
    assert accs[0] >= accs[1] >= accs[2]
    print(f"PASS C6 robustness: AUC {auc_clean:.4f} >= {auc_20:.4f} >= {auc_5:.4f}; "
          f"TPR {accs[0]:.2f} >= {accs[1]:.2f} >= {accs[2]:.2f}")


def test_c07_schedule_determinism_and_key_sensitivity():
    params = ScheduleParams(32, 8, 8, 0.18, 24)
    frames = 3200  # 100 chunks
    a = derive_schedule(TEST_KEY, _nonce(9), TEST_PAYLOAD, params, frames)
    b = derive_schedule(TEST_KEY, _nonce(9), TEST_PAYLOAD, params, frames)
    assert np.array_equal(a.planes, b.planes)
    assert np.array_equal(a.chips, b.chips)
    assert np.array_equal(a.beta, b.beta)

    rng = np.random.default_rng(0)
    bit_positions = rng.choice(256, size=100, replace=False)
    worst = 1.0
    for bit in bit_positions:
        flipped = bytearray(TEST_KEY.key)
        flipped[bit // 8] ^= 1 << (bit % 8)
        other = derive_schedule(
            SecretKey(bytes(flipped)), _nonce(9), TEST_PAYLOAD, params, frames
        )
        changed = np.array([
            not (
                np.array_equal(a.planes[c], other.planes[c])
                and np.array_equal(a.chips[c], other.chips[c])
                and np.array_equal(a.beta[c], other.beta[c])
            )
            for c in range(a.chunk_count)
        ])
        frac = float(np.mean(changed))
        worst = min(worst, frac)
        assert frac >= 0.99
    print(f"PASS C7 schedule: deterministic; worst flip changed {worst:.0%} of chunks")


def test_c08_auc_matches_brute_force_on_50_sets():
    rng = np.random.default_rng(8)
    for trial in range(50):
        n_pos = int(rng.integers(1, 21))
        n_neg = int(rng.integers(1, 21))
        # integer grid scores force plenty of ties
        pos = rng.integers(0, 6, size=n_pos).astype(float)
        neg = rng.integers(0, 6, size=n_neg).astype(float)
        wins = sum(
            1.0 if p > q else (0.5 if p == q else 0.0) for p in pos for q in neg
        )
        assert auc_roc(pos, neg) == pytest.approx(wins / (n_pos * n_neg), abs=1e-12)
    print("PASS C8 AUC oracle: matches pair enumeration on 50 random sets")


def test_c09_dsp_oracles():
    rate = 24_000

    def tone(hz, seconds=2.0):
        t = np.arange(int(rate * seconds)) / rate
        return Waveform(samples=0.5 * np.sin(2 * np.pi * hz * t), sample_rate_hz=rate)

    def tail_gain_db(y, x):
        n = x.num_samples // 2
        return 20.0 * np.log10(
            np.sqrt(np.mean(y.samples[n:] ** 2)) / np.sqrt(np.mean(x.samples[n:] ** 2))
        )

    g_fc = tail_gain_db(butterworth(tone(3000.0), "lowpass", 3000.0), tone(3000.0))
    assert g_fc == pytest.approx(-3.01, abs=0.1)
    # the (w/wc)^12 magnitude law needs fc well under Nyquist to dodge warping
    g_2fc = tail_gain_db(butterworth(tone(600.0), "lowpass", 300.0), tone(600.0))
    assert g_2fc == pytest.approx(-36.0, abs=1.0)

    x = tone(440.0, seconds=8.0)
    noisy = add_noise(x, "pink", 0.0, seed=11)
    noise = noisy.samples - x.samples
    freqs, psd = scipy.signal.welch(noise, fs=rate, nperseg=4096)
    band = (freqs >= 100.0) & (freqs <= 10_000.0)
    slope = np.polyfit(np.log10(freqs[band]), 10.0 * np.log10(psd[band]), 1)[0]
    assert slope == pytest.approx(-10.0, abs=1.5)

    y = add_noise(x, "white", 17.0, seed=5)
    snr = 10.0 * np.log10(
        np.mean(x.samples**2) / np.mean((y.samples - x.samples) ** 2)
    )
    assert snr == pytest.approx(17.0, abs=1e-9)

    back = resample(resample(tone(440.0), 16_000), rate)
    a = tone(440.0).samples[500:-500]
    b = back.samples[500:-500]
    rt_snr = 10.0 * np.log10(np.mean(a**2) / np.mean((a - b) ** 2))
    assert rt_snr >= 40.0
    print(f"PASS C9 DSP: fc {g_fc:.2f} dB, 2fc {g_2fc:.2f} dB, pink {slope:.2f} "
          f"dB/dec, SNR exact, resample {rt_snr:.0f} dB")


def test_c10_file_formats_and_schemas(tmp_path):
    corpus = list(
        generate_synthetic_corpus(
            SyntheticCorpusSpec(n=16, num_frames=80, num_utterances=6, seed=3)
        )
    )
    basis = fit_pca(corpus[:4])
    p1, p2 = tmp_path / "b1.lssb", tmp_path / "b2.lssb"
    write_basis(basis, p1)
    write_basis(read_basis(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()

    l1, l2 = tmp_path / "f1.lssl", tmp_path / "f2.lssl"
    write_latents(corpus[4], l1)
    write_latents(read_latents(l1), l2)
    assert l1.read_bytes() == l2.read_bytes()

    from lss import CSV_HEADER, TrialRecord, write_records_csv, write_summary_json

    out_csv, out_json = tmp_path / "r.csv", tmp_path / "s.json"
    write_records_csv(
        [TrialRecord("u0", "clean", True, True, 1.25)], out_csv
    )
    with open(out_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == CSV_HEADER
    assert rows[0]["watermarked"] == "true"
    write_summary_json({"clean": {"auc": 1.0, "n_pos": 1, "n_neg": 1}}, out_json)
    parsed = json.loads(out_json.read_text())
    assert set(parsed["clean"]) == {"auc", "n_pos", "n_neg"}
    print("PASS C10 formats: LSSB/LSSL bit-stable, CSV/JSON schemas parse")
