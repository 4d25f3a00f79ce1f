"""End-to-end acceptance checks for the nulling pipeline.

Each test prints a single PASS/FAIL line so the suite doubles as a
checklist when run with ``pytest -s tests/test_acceptance.py``.
"""

import statistics
import time

import numpy as np

from snap.classifier import LinearClassifier, bce_gradient, bce_loss
from snap.metrics import ScoredSet, compute_eer, silhouette_cosine
from snap.subspace import (CentroidTable, SpeakerSubspace,
                           fit_speaker_subspace, null_project,
                           null_project_matrix, speaker_centroids)
from snap.synth import (SynthConfig, generate, run_entanglement_experiment,
                        run_speaker_sweep)


def _report(name, ok, detail=""):
    suffix = f"  ({detail})" if detail else ""
    print(f"[{'PASS' if ok else 'FAIL'}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


def _random_subspace(rng, dim, k):
    basis, _ = np.linalg.qr(rng.standard_normal((dim, k)))
    eigs = np.sort(rng.uniform(0.5, 2.0, k))[::-1]
    return SpeakerSubspace(dim=dim, k=k,
                           centroid_mean=rng.standard_normal(dim),
                           basis=basis, eigenvalues=eigs)


def test_projection_algebra_suite():
    rng = np.random.default_rng(20240901)
    start = time.perf_counter()
    worst_idem = worst_null = worst_agree = 0.0
    pairs = 0
    # 1000 (z, subspace) pairs: ~13 subspaces per dim, 25 fresh z each,
    # so the dense projector is materialized once per subspace
    for dim, n_sub in ((8, 14), (64, 13), (2048, 13)):
        eye = np.eye(dim)
        for _ in range(n_sub):
            k = int(rng.integers(1, min(dim, 12) + 1))
            sub = _random_subspace(rng, dim, k)
            projector = eye - sub.basis @ sub.basis.T
            for _ in range(25):
                pairs += 1
                z = rng.standard_normal(dim)
                zt = null_project(sub, z)
                worst_idem = max(
                    worst_idem,
                    float(np.linalg.norm(null_project(sub, zt) - zt)))
                worst_null = max(worst_null,
                                 float(np.linalg.norm(sub.basis.T @ zt)))
                assert np.linalg.norm(zt) <= np.linalg.norm(z) + 1e-12
                dense = projector @ z
                worst_agree = max(worst_agree,
                                  float(np.max(np.abs(zt - dense))))
    assert pairs == 1000
    elapsed = time.perf_counter() - start
    ok = worst_idem <= 1e-9 and worst_null <= 1e-9 and \
        worst_agree <= 1e-10 and elapsed < 10.0
    _report("projection algebra suite", ok,
            f"idem {worst_idem:.2e}, null {worst_null:.2e}, "
            f"agree {worst_agree:.2e}, {elapsed:.1f}s")


def test_eigen_oracle():
    rng = np.random.default_rng(20240902)
    start = time.perf_counter()
    worst_rel = worst_angle = 0.0
    for _ in range(200):
        n_spk = int(rng.integers(3, 13))
        dim = int(rng.integers(4, 17))
        centroids = rng.standard_normal((n_spk, dim))
        k = int(rng.integers(1, min(n_spk - 1, dim) + 1))
        table = CentroidTable(tuple(f"s{i}" for i in range(n_spk)), centroids)
        sub = fit_speaker_subspace(table, k)

        centered = centroids - centroids.mean(axis=0)
        cov = centered.T @ centered / (n_spk - 1)
        evals, evecs = np.linalg.eigh(cov)
        evals, evecs = evals[::-1], evecs[:, ::-1]

        rel = np.max(np.abs(sub.eigenvalues - evals[:k]) /
                     np.maximum(np.abs(evals[:k]), 1e-300))
        worst_rel = max(worst_rel, float(rel))
        # principal angles between spans, one eigenvector at a time so
        # near-degenerate pairs are compared span-to-span
        qa, _ = np.linalg.qr(sub.basis)
        qb, _ = np.linalg.qr(evecs[:, :k])
        resid = qb - qa @ (qa.T @ qb)
        sines = np.linalg.svd(resid, compute_uv=False)
        angle = float(np.arcsin(np.clip(np.max(sines), 0.0, 1.0)))
        worst_angle = max(worst_angle, angle)
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-10 and worst_angle <= 1e-8 and elapsed < 5.0
    _report("eigendecomposition vs dense oracle", ok,
            f"rel {worst_rel:.2e}, angle {worst_angle:.2e}, {elapsed:.1f}s")


def _eer_sweep_oracle(scores, labels):
    pos = sorted(scores[labels == 1])
    neg = sorted(scores[labels == 0])
    distinct = sorted(set(scores))
    thresholds = [float("-inf")]
    thresholds += [(a + b) / 2 for a, b in zip(distinct, distinct[1:])]
    thresholds += [float("inf")]
    pts = []
    for t in thresholds:
        far = sum(1 for s in neg if s >= t) / len(neg)
        frr = sum(1 for s in pos if s < t) / len(pos)
        pts.append((t, far, frr))
    for (t0, far0, frr0), (t1, far1, frr1) in zip(pts, pts[1:]):
        d0, d1 = far0 - frr0, far1 - frr1
        if d0 == 0.0:
            return (far0 + frr0) / 2
        if d0 > 0.0 >= d1:
            if d1 == d0:
                return (far1 + frr1) / 2
            w = d0 / (d0 - d1)
            far = far0 + w * (far1 - far0)
            frr = frr0 + w * (frr1 - frr0)
            return (far + frr) / 2
    return (pts[-1][1] + pts[-1][2]) / 2


def test_eer_oracle():
    rng = np.random.default_rng(20240903)
    start = time.perf_counter()
    worst = 0.0
    for i in range(500):
        n = int(rng.integers(4, 1001))
        labels = np.zeros(n, dtype=np.uint8)
        labels[: int(rng.integers(1, n))] = 1
        rng.shuffle(labels)
        if i % 3 == 0:  # heavy ties exercise the midpoint sweep
            scores = rng.integers(0, 8, n).astype(np.float64) / 7.0
        else:
            scores = rng.standard_normal(n)
        eer, _ = compute_eer(ScoredSet(
            utt_ids=tuple(str(j) for j in range(n)),
            labels=labels, scores=scores))
        worst = max(worst, abs(eer - _eer_sweep_oracle(scores, labels)))

    perf = ScoredSet(utt_ids=("a", "b", "c", "d"),
                     labels=np.array([0, 0, 1, 1], dtype=np.uint8),
                     scores=np.array([0.1, 0.2, 0.8, 0.9]))
    rev = ScoredSet(utt_ids=perf.utt_ids, labels=perf.labels,
                    scores=-perf.scores)
    exact = compute_eer(perf)[0] == 0.0 and compute_eer(rev)[0] == 1.0
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and exact and elapsed < 10.0
    _report("EER vs exhaustive sweep oracle", ok,
            f"max dev {worst:.2e}, exact endpoints {exact}, {elapsed:.1f}s")


def _silhouette_oracle(x, labels):
    n = len(labels)
    unit = x / np.linalg.norm(x, axis=1, keepdims=True)
    out = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            out.append(0.0)
            continue
        a = sum(1.0 - float(unit[i] @ unit[j]) for j in own) / len(own)
        b = min(
            sum(1.0 - float(unit[i] @ unit[j]) for j in idx) / len(idx)
            for lab in set(labels) - {labels[i]}
            for idx in [[j for j in range(n) if labels[j] == lab]])
        out.append(0.0 if max(a, b) == 0.0 else (b - a) / max(a, b))
    return np.array(out)


def test_silhouette_oracle():
    rng = np.random.default_rng(20240904)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(4, 41))
        dim = int(rng.integers(2, 9))
        labels = rng.integers(0, int(rng.integers(2, 5)), n)
        if len(set(labels.tolist())) < 2:
            labels[0] = labels[1] + 1
        x = rng.standard_normal((n, dim))
        got, _ = silhouette_cosine(x, labels)
        worst = max(worst, float(np.max(np.abs(
            got - _silhouette_oracle(x, labels.tolist())))))

    dup = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    _, mean = silhouette_cosine(dup, np.array([0, 0, 1, 1]))
    ok = worst <= 1e-12 and mean == 1.0
    _report("silhouette vs double-loop oracle", ok,
            f"max dev {worst:.2e}, orthogonal-pair mean {mean}")


def test_gradient_check():
    rng = np.random.default_rng(20240905)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(8, 40))
        dim = int(rng.integers(2, 12))
        x = rng.standard_normal((n, dim))
        y = rng.integers(0, 2, n).astype(np.float64)
        w = rng.standard_normal(dim) * 0.5
        b = float(rng.standard_normal())
        l2 = float(rng.uniform(0.0, 0.1))
        gw, gb = bce_gradient(LinearClassifier(w, b), x, y, l2)

        eps = 1e-6
        num = np.empty(dim + 1)
        for j in range(dim):
            wp, wm = w.copy(), w.copy()
            wp[j] += eps
            wm[j] -= eps
            num[j] = (bce_loss(LinearClassifier(wp, b), x, y, l2) -
                      bce_loss(LinearClassifier(wm, b), x, y, l2)) / (2 * eps)
        num[dim] = (bce_loss(LinearClassifier(w, b + eps), x, y, l2) -
                    bce_loss(LinearClassifier(w, b - eps), x, y, l2)) / (2 * eps)
        ana = np.concatenate([gw, [gb]])
        rel = np.linalg.norm(ana - num) / max(np.linalg.norm(num), 1e-300)
        worst = max(worst, float(rel))

    x0 = rng.standard_normal((50, 6))
    y0 = rng.integers(0, 2, 50).astype(np.float64)
    at_zero = bce_loss(LinearClassifier(np.zeros(6), 0.0), x0, y0, 0.0)
    ln2_dev = abs(at_zero - np.log(2.0))
    ok = worst <= 1e-6 and ln2_dev <= 1e-12
    _report("analytic gradient vs central differences", ok,
            f"max rel {worst:.2e}, ln2 dev {ln2_dev:.2e}")


def test_entanglement_directionality():
    start = time.perf_counter()
    spk_wins = cls_wins = eer_wins = 0
    for seed in range(10):
        cfg = SynthConfig(seed=seed)
        rep = run_entanglement_experiment(cfg, k=5)
        spk_wins += rep.nulled_speaker_silhouette < rep.baseline_speaker_silhouette
        cls_wins += rep.nulled_class_silhouette > rep.baseline_class_silhouette
        eer_wins += rep.nulled_eer < rep.baseline_eer
    elapsed = time.perf_counter() - start
    ok = spk_wins >= 9 and cls_wins >= 9 and eer_wins >= 9 and elapsed < 120.0
    _report("entanglement directionality", ok,
            f"speaker {spk_wins}/10, class {cls_wins}/10, "
            f"eer {eer_wins}/10, {elapsed:.0f}s")


def test_speaker_count_sweep():
    start = time.perf_counter()
    counts = (2, 4, 8, 16)
    base = {c: [] for c in counts}
    nulled = {c: [] for c in counts}
    for seed in range(10):
        for count, baseline_eer, nulled_eer in run_speaker_sweep(
                SynthConfig(seed=seed), counts, k=5):
            base[count].append(baseline_eer)
            nulled[count].append(nulled_eer)
    med_b = {c: statistics.median(base[c]) for c in counts}
    med_n = {c: statistics.median(nulled[c]) for c in counts}
    elapsed = time.perf_counter() - start
    trend = med_n[16] <= med_n[2]
    beats = all(med_n[c] < med_b[c] for c in counts)
    ok = trend and beats and elapsed < 300.0
    _report("speaker-count sweep medians", ok,
            ", ".join(f"{c}: {med_n[c]:.3f}<{med_b[c]:.3f}" for c in counts)
            + f", {elapsed:.0f}s")


def test_cli_determinism(tmp_path):
    from snap import cli

    def run(*argv):
        assert cli.main([str(a) for a in argv]) == 0

    s1, s2 = tmp_path / "s1.emb", tmp_path / "s2.emb"
    run("synth", "--seed", 13, "--out", s1)
    run("synth", "--seed", 13, "--out", s2)
    synth_same = s1.read_bytes() == s2.read_bytes()

    m1, m2 = tmp_path / "m1.model", tmp_path / "m2.model"
    fit_args = ["--train", s1, "--k", 5, "--seed", 13, "--epochs", 60]
    run("fit", "--model", m1, *fit_args)
    run("fit", "--model", m2, *fit_args)
    fit_same = m1.read_bytes() == m2.read_bytes()
    ok = synth_same and fit_same
    _report("byte-identical reruns of synth and fit", ok,
            f"containers {synth_same}, models {fit_same}")


def test_k0_pipeline_equivalence():
    from snap import prepare_set
    from snap.classifier import TrainConfig, predict_batch, train

    cfg = SynthConfig(n_speakers=8, utts_per_speaker_per_class=8, seed=21)
    eset, _ = generate(cfg)
    eset = prepare_set(eset)
    x = eset.embeddings()
    y = eset.labels().astype(np.float64)

    sub = fit_speaker_subspace(speaker_centroids(eset), 0)
    x_nulled = null_project_matrix(sub, x)
    tcfg = TrainConfig(epochs=80)
    clf_a, _ = train(x_nulled, y, tcfg)
    clf_b, _ = train(x, y, tcfg)
    dev = max(float(np.max(np.abs(x_nulled - x))),
              float(np.max(np.abs(predict_batch(clf_a, x_nulled) -
                                  predict_batch(clf_b, x)))))
    ok = dev <= 1e-12
    _report("k=0 equals no-projection pipeline", ok, f"max dev {dev:.2e}")
