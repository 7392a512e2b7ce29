"""How detection degrades as the channel gets nastier.

Runs the evaluation harness over a ladder of manipulations (through the
lossless frame-stack codec) and prints AUC per condition, plus the wrong-key
and wrong-nonce security tracks that should sit at chance.

Takes about half a minute. Run: python3 demos/03_robustness_sweep.py
"""

import time

from lss import default_experiment

CONDITIONS = (
    "white:snr=20,seed=7",
    "white:snr=10,seed=7",
    "white:snr=5,seed=7",
    "pink:snr=10,seed=7",
    "lowpass:fc=3000",
    "resample:rate=16000",
)


def main():
    start = time.perf_counter()
    records, summary = default_experiment(
        num_train=60, num_eval=60, conditions=CONDITIONS
    )
    elapsed = time.perf_counter() - start

    print(f"{len(records)} trials in {elapsed:.1f} s\n")
    print(f"{'condition':<24} {'auc':>7} {'pos mean':>10} {'neg mean':>10}")
    for name, entry in summary.items():
        if "error" in entry:
            print(f"{name:<24} failed: {entry['error']}")
            continue
        print(f"{name:<24} {entry['auc']:7.4f} {entry['pos_mean']:10.2f} "
              f"{entry['neg_mean']:10.2f}")
    clean = summary["clean"]
    print(f"\nsecurity (should hover near 0.5): "
          f"wrong key {clean['wrong_key_auc']:.3f}, "
          f"wrong nonce {clean['wrong_nonce_auc']:.3f}")
    print("\nlowpass hurts most: it removes the high-variance planes the "
          "schedule leans on.\nnoise mostly dilutes; the accumulated score "
          "shrinks but stays one-sided.")


if __name__ == "__main__":
    main()
