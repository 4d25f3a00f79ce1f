"""Why nulling the speaker subspace helps spoof detection.

Generates a synthetic embedding population where speaker identity dominates
the variance, then compares a plain linear detector against one trained on
speaker-nulled residuals. Prints silhouettes (how strongly the space clusters
by speaker vs by bona fide/spoof) and held-out-speaker EERs.

Run:  python3 demos/entanglement_demo.py
"""

from snap.synth import SynthConfig, run_entanglement_experiment


def main():
    print(f"{'seed':>4} {'spk sil raw':>12} {'spk sil null':>13} "
          f"{'cls sil raw':>12} {'cls sil null':>13} "
          f"{'EER raw':>8} {'EER null':>9}")
    wins = 0
    for seed in range(10):
        r = run_entanglement_experiment(SynthConfig(seed=seed), k=5)
        wins += r.nulled_eer < r.baseline_eer
        print(f"{seed:>4} {r.baseline_speaker_silhouette:>12.3f} "
              f"{r.nulled_speaker_silhouette:>13.3f} "
              f"{r.baseline_class_silhouette:>12.3f} "
              f"{r.nulled_class_silhouette:>13.3f} "
              f"{r.baseline_eer:>8.3f} {r.nulled_eer:>9.3f}")
    print(f"\nnulling lowered the unseen-speaker EER in {wins}/10 seeds")
    print("speaker silhouette drops after nulling (identity removed),")
    print("class silhouette rises (artifact structure left standing)")


if __name__ == "__main__":
    main()
