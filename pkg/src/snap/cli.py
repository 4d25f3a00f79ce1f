"""Command-line surface: fit, score, eval, synth, analyze, sweep.

Every command writes its primary outputs plus a JSON run manifest
(<first output>.manifest.json) recording resolved parameters and content
hashes of the inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import time

import numpy as np

from . import metrics, model_io, store, synth
from .classifier import TrainConfig, predict_batch, train
from .features import prepare_set
from .metrics import ScoredSet, evaluate
from .subspace import fit_speaker_subspace, null_project_matrix, speaker_centroids

TOOL_VERSION = model_io.TOOL_VERSION


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(command, args_ns, inputs, outputs, started):
    params = {k: v for k, v in vars(args_ns).items() if k != "func"}
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": params.get("seed"),
        "tool_version": TOOL_VERSION,
        "duration_seconds": round(time.monotonic() - started, 6),
    }
    path = str(outputs[0]) + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_any_container(path):
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head == store.MAGIC:
        return store.load_container(path)
    with open(path, "r") as fh:
        return store.read_text_table(fh)


def _train_config(args):
    return TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                       l2_penalty=args.l2, seed=args.seed)


def cmd_fit(args):
    started = time.monotonic()
    eset = prepare_set(_load_any_container(args.train))
    train_set, val_set = store.stratified_split(eset, args.split, args.seed)
    sub = fit_speaker_subspace(speaker_centroids(train_set), args.k)

    x_train = null_project_matrix(sub, train_set.embeddings())
    x_val = null_project_matrix(sub, val_set.embeddings())
    y_train, y_val = train_set.labels(), val_set.labels()
    validation = (x_val, y_val) if len(val_set) else None
    clf, _ = train(x_train, y_train, _train_config(args), validation=validation)
    model_io.save_model(sub, clf, args.model)

    if validation is not None and len(np.unique(y_val)) == 2:
        scores = predict_batch(clf, x_val)
        ids = tuple(r.utt_id for r in val_set.records)
        eer, _ = metrics.compute_eer(ScoredSet(ids, y_val, scores))
        print(f"validation EER: {100.0 * eer:.2f}%")
    else:
        print("validation EER: n/a (validation split lacks both classes)")
    _write_manifest("fit", args, [args.train], [args.model], started)
    return 0


def cmd_score(args):
    started = time.monotonic()
    sub, clf = model_io.load_model(args.model)
    eset = prepare_set(_load_any_container(args.input))
    if eset.dim != sub.dim:
        raise ValueError(
            f"model dim {sub.dim} does not match container dim {eset.dim}"
        )
    scores = predict_batch(clf, null_project_matrix(sub, eset.embeddings()))
    scored = ScoredSet(tuple(r.utt_id for r in eset.records), eset.labels(), scores)
    with open(args.out, "w") as fh:
        metrics.write_score_table(scored, fh)
    print(f"scored {len(scored)} records -> {args.out}")
    _write_manifest("score", args, [args.model, args.input], [args.out], started)
    return 0


def _report_lines(report):
    return [
        f"eer_percent {100.0 * report.eer:.17g}",
        f"eer_threshold {report.eer_threshold:.17g}",
        f"accuracy {report.accuracy:.17g}",
        f"precision {report.precision:.17g}",
        f"recall {report.recall:.17g}",
        f"f1 {report.f1:.17g}",
        f"n_pos {report.n_pos}",
        f"n_neg {report.n_neg}",
    ]


def cmd_eval(args):
    started = time.monotonic()
    with open(args.scores) as fh:
        scored = metrics.read_score_table(fh)
    report = evaluate(scored, threshold=args.threshold)
    for line in _report_lines(report):
        print(line)
    outputs = []
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({
                "eer": report.eer, "eer_threshold": report.eer_threshold,
                "accuracy": report.accuracy, "precision": report.precision,
                "recall": report.recall, "f1": report.f1,
                "n_pos": report.n_pos, "n_neg": report.n_neg,
                "threshold": args.threshold,
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(args.out)
        _write_manifest("eval", args, [args.scores], outputs, started)
    return 0


def _load_synth_config(args):
    if args.config:
        with open(args.config) as fh:
            mapping = json.load(fh)
    else:
        mapping = {}
    if args.seed is not None:
        mapping["seed"] = args.seed
    return synth.SynthConfig.from_dict(mapping)


def cmd_synth(args):
    started = time.monotonic()
    cfg = _load_synth_config(args)
    eset, gt = synth.generate(cfg)
    store.save_container(eset, args.out)
    outputs = [args.out]
    if args.ground_truth:
        gt.save(args.ground_truth)
        outputs.append(args.ground_truth)
    print(f"generated {len(eset)} records (dim {cfg.dim}) -> {args.out}")
    inputs = [args.config] if args.config else []
    _write_manifest("synth", args, inputs, outputs, started)
    return 0


def cmd_analyze(args):
    started = time.monotonic()
    eset = prepare_set(_load_any_container(args.input))
    sub = None
    inputs = [args.input]
    if args.model:
        sub, _ = model_io.load_model(args.model)
        inputs.append(args.model)
    report = metrics.entanglement_report(eset, sub)
    rows = [
        ("speaker", report.baseline_speaker_mean, report.nulled_speaker_mean),
        ("class", report.baseline_class_mean, report.nulled_class_mean),
    ]
    print(f"{'clustering':<10} {'baseline':>12} {'nulled':>12}")
    for name, base, nulled in rows:
        print(f"{name:<10} {base:>12.6f} {nulled:>12.6f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("# clustering baseline_silhouette nulled_silhouette\n")
            for name, base, nulled in rows:
                fh.write(f"{name} {base:.17g} {nulled:.17g}\n")
        _write_manifest("analyze", args, inputs, [args.out], started)
    return 0


def cmd_sweep(args):
    started = time.monotonic()
    cfg = _load_synth_config(args)
    counts = [int(c) for c in args.counts.split(",")]
    rows = synth.run_speaker_sweep(cfg, counts, k=args.k, train_cfg=TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, l2_penalty=args.l2, seed=cfg.seed))
    print(f"{'speakers':>8} {'baseline_eer':>14} {'nulled_eer':>12}")
    for count, baseline_eer, nulled_eer in rows:
        print(f"{count:>8} {baseline_eer:>14.6f} {nulled_eer:>12.6f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("# n_train_speakers baseline_eer nulled_eer\n")
            for count, baseline_eer, nulled_eer in rows:
                fh.write(f"{count} {baseline_eer:.17g} {nulled_eer:.17g}\n")
        inputs = [args.config] if args.config else []
        _write_manifest("sweep", args, inputs, [args.out], started)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="snap",
        description="Speaker-nulling residual features for synthetic-speech detection",
    )
    parser.add_argument("--version", action="version", version=TOOL_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_train_flags(p):
        p.add_argument("--lr", type=float, default=0.1)
        p.add_argument("--epochs", type=int, default=500)
        p.add_argument("--l2", type=float, default=1e-4)

    p = sub.add_parser("fit", help="fit subspace + classifier from a container")
    p.add_argument("--train", required=True, help="training container (SNAPEMB1 or text)")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=42)
    add_train_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score a container with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output score table")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="EER and threshold metrics from a score table")
    p.add_argument("--scores", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default=None, help="optional JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic embedding container")
    p.add_argument("--config", default=None, help="JSON generator config")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--ground-truth", default=None, help="optional .npz latent factors")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="speaker/class silhouette comparison")
    p.add_argument("--input", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="EER vs training-speaker count")
    p.add_argument("--config", default=None)
    p.add_argument("--counts", default="2,4,8,16")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    add_train_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
