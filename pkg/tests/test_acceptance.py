"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see every line; the
heavier criteria train small models end to end and take a few minutes.
"""

import csv
import json
import math
import os
import time

import numpy as np
import pytest

from threadcurve import curvature as cv
from threadcurve import features as ft
from threadcurve import logreg
from threadcurve import metrics as mt
from threadcurve import newton as nw
from threadcurve.cooccur import CooccurrenceMatrix, build_cooccurrence, title_vector
from threadcurve.corpus import Comment, Window, growth_target, parse_corpus, embedded_users
from threadcurve.embedding import guvec_loss_and_grad, train_guvec
from threadcurve.features import load_word_vectors
from threadcurve.optim import ParameterStore, grad_check
from threadcurve.pipeline import PipelineConfig, run_all, run_stage
from conftest import toy_config, toy_instance

DATA = os.path.join(os.path.dirname(__file__), "data")


def _report(num, name, ok, detail):
    line = "ACCEPTANCE %2d %-24s %s (%s)" % (
        num, name, "PASS" if ok else "FAIL", detail)
    print("\n" + line)
    assert ok, line


# --------------------------------------------------------------- criterion 1

def test_criterion_01_gradient_fidelity():
    t0 = time.time()
    cfg = toy_config()  # d=4, n=3, N=3
    rng = np.random.default_rng(100)
    worst = 0.0
    checked = 0

    for k in range(6):  # curvature model, temporal loss
        inst = toy_instance(rng, cfg)
        store = cv.init_model(cfg, seed=k)
        rep = grad_check(lambda s: cv.discussion_loss(s, inst, lam=1.0),
                         store, max_coords=40, seed=k)
        worst = max(worst, rep["max_rel_error"])
        checked += 1

    for k in range(6):  # inverse-square baseline loss
        inst = toy_instance(rng, cfg, w=2)
        store = nw.init_model(cfg, w=2, seed=k)
        rep = grad_check(lambda s: nw.discussion_loss(s, inst, 2, lam=1.0),
                         store, max_coords=40, seed=k)
        worst = max(worst, rep["max_rel_error"])
        checked += 1

    for k in range(4):  # embedding factorization objective
        n_users, d = 6, 4
        ii = np.array([0, 0, 1, 2, 3, 4])
        jj = np.array([1, 2, 3, 4, 5, 5])
        logw = np.log1p(rng.uniform(0.2, 3.0, size=6))
        store = ParameterStore()
        store.register("vectors", rng.normal(size=(n_users, d)))
        store.register("biases", rng.normal(size=n_users))

        def guvec_into(s):
            loss, gv, gb = guvec_loss_and_grad(
                s.get("vectors"), s.get("biases"), ii, jj, logw)
            s.set_grad("vectors", gv)
            s.set_grad("biases", gb)
            return loss

        rep = grad_check(guvec_into, store, max_coords=40, seed=k)
        worst = max(worst, rep["max_rel_error"])
        checked += 1

    for k in range(4):  # logistic loss
        X = rng.normal(size=(12, 5))
        y = (rng.random(12) < 0.5).astype(float)
        store = ParameterStore()
        store.register("w", rng.normal(size=5))
        store.register("b", rng.normal(size=1))
        rep = grad_check(lambda s: logreg.logreg_loss(s, X, y, l2=0.01),
                         store, max_coords=40, seed=k)
        worst = max(worst, rep["max_rel_error"])
        checked += 1

    elapsed = time.time() - t0
    ok = worst <= 1e-4 and checked >= 20 and elapsed < 60
    _report(1, "gradient fidelity", ok,
            "%d instances, max rel err %.2e, %.1fs" % (checked, worst, elapsed))


# --------------------------------------------------------------- criterion 2

def test_criterion_02_formula_oracles():
    rng = np.random.default_rng(200)
    failures = []

    short = ["ab", "cd", "efg", "hij"]
    long = ["abcdefgh", "ijklmnop", "qrstuvwx"]
    for _ in range(100):  # lix, built from known word mixes
        n_sent = int(rng.integers(1, 4))
        words, sents = [], []
        for _s in range(n_sent):
            picked = [str(rng.choice(short + long))
                      for _ in range(int(rng.integers(1, 6)))]
            words.extend(picked)
            sents.append(" ".join(picked))
        text = ". ".join(sents) + "."
        n_long = sum(1 for w in words if len(w) > 6)
        expect = len(words) / n_sent + 100.0 * n_long / len(words)
        if abs(ft.lix(text) - expect) > 1e-9:
            failures.append(("lix", text))

    for _ in range(100):  # term entropy from known counts
        vocab = int(rng.integers(2, 50))
        counts = {"t%d" % k: int(rng.integers(1, 5))
                  for k in range(int(rng.integers(1, 6)))}
        text = " ".join(t for t, c in counts.items() for _ in range(c))
        expect = sum(c * (math.log(vocab) - math.log(c))
                     for c in counts.values()) / vocab
        if abs(ft.term_entropy(text, vocab) - expect) > 1e-9:
            failures.append(("term_entropy", counts))

    table = {"good": 0.8, "great": 0.6, "bad": -0.5, "awful": -0.7}
    for _ in range(100):  # polarity over unique in-table terms
        chosen = [t for t in table if rng.random() < 0.5]
        fillers = ["misc%d" % k for k in range(int(rng.integers(0, 3)))]
        reps = {t: int(rng.integers(1, 3)) for t in chosen}
        text = " ".join([t for t, c in reps.items() for _ in range(c)] + fillers)
        expect = (sum(table[t] for t in chosen),
                  sum(1 for t in chosen if table[t] > 0),
                  sum(1 for t in chosen if table[t] < 0))
        got = ft.polarity(text, table)
        if (abs(got[0] - expect[0]) > 1e-9 or got[1:] != expect[1:]):
            failures.append(("polarity", text))

    for k in range(100):  # growth target from constructed windows
        m = int(rng.integers(1, 11))
        t0 = int(rng.integers(0, 1000))
        span = int(rng.integers(0, 5000))
        times = sorted([t0, t0 + span]
                       + [int(t0 + rng.integers(0, span + 1))
                          for _ in range(m - 2)]) if m > 1 else [t0]
        comments = tuple(Comment(id="c%d" % j, author="u", parent_id="p",
                                 discussion_id="d", timestamp=t, text="x",
                                 depth=1) for j, t in enumerate(times))
        win = Window(index=1, comments=comments, valid=True, actual_count=m)
        dt = max(1, times[-1] - times[0])
        raw, shifted = growth_target(win)
        if (abs(raw - math.log(m / dt)) > 1e-9
                or abs(shifted - math.log(1 + m / dt)) > 1e-9):
            failures.append(("growth_target", k))

    for k in range(100):  # multi-label metrics, brute force
        m, L = int(rng.integers(1, 8)), int(rng.integers(1, 6))
        pred = (rng.random((m, L)) < 0.5).astype(int)
        truth = (rng.random((m, L)) < 0.5).astype(int)
        rep = mt.multilabel_metrics(pred, truth)
        ham = sum(int(pred[i, j] != truth[i, j])
                  for i in range(m) for j in range(L)) / (m * L)
        inter = sum(int(pred[i, j] and truth[i, j])
                    for i in range(m) for j in range(L))
        denom = int(pred.sum() + truth.sum())
        micro = 2 * inter / denom if denom else 0.0
        per = []
        for j in range(L):
            dj = int(pred[:, j].sum() + truth[:, j].sum())
            ij = sum(int(pred[i, j] and truth[i, j]) for i in range(m))
            per.append(2 * ij / dj if dj else 0.0)
        subset = sum(int(any(pred[i, j] != truth[i, j] for j in range(L)))
                     for i in range(m)) / m
        if (abs(rep.hamming_loss - ham) > 1e-9 or abs(rep.micro_f1 - micro) > 1e-9
                or abs(rep.macro_f1 - sum(per) / L) > 1e-9
                or abs(rep.subset_01 - subset) > 1e-9):
            failures.append(("multilabel", k))

    for k in range(100):  # AUC, brute-force pairwise ranking (with ties)
        n = int(rng.integers(4, 20))
        scores = np.round(rng.random(n), 1)
        labels = (rng.random(n) < 0.5).astype(int)
        labels[0], labels[1] = 1, 0
        total, wins = 0, 0.0
        for i in range(n):
            for j in range(n):
                if labels[i] == 1 and labels[j] == 0:
                    total += 1
                    if scores[i] > scores[j]:
                        wins += 1.0
                    elif scores[i] == scores[j]:
                        wins += 0.5
        if abs(mt.auc(scores, labels) - wins / total) > 1e-9:
            failures.append(("auc", k))

    _report(2, "formula oracles", not failures,
            "600 instances, %d mismatches" % len(failures))


# --------------------------------------------------------------- criterion 3

def test_criterion_03_cooccurrence_fixture():
    discussions, _ = parse_corpus(os.path.join(DATA, "cooccur_fixture.jsonl"))
    users = sorted(embedded_users(discussions))
    index = {u: k for k, u in enumerate(users)}
    wv = load_word_vectors(os.path.join(DATA, "cooccur_fixture_wordvecs.txt"))
    tvecs = {d.id: title_vector(d.post.title, wv, {}) for d in discussions}
    A, _ = build_cooccurrence(discussions, index, tvecs, math.pi / 12)
    got = {(i, j): v for i, j, v in A.items()}

    expected = {}
    with open(os.path.join(DATA, "cooccur_fixture_expected.txt")) as fh:
        for line in fh:
            parts = line.split()
            if parts and not parts[0].startswith("#"):
                expected[(int(parts[0]), int(parts[1]))] = float(parts[2])

    same_support = set(got) == set(expected)
    max_err = max((abs(got[k] - expected[k]) for k in expected), default=np.inf) \
        if same_support else np.inf
    ok = same_support and max_err <= 1e-9
    _report(3, "co-occurrence fixture", ok,
            "%d entries, max |err| %.2e" % (len(expected), max_err))


# --------------------------------------------------------------- criterion 4

def test_criterion_04_embedding_separation():
    t0 = time.time()
    entries = [(0, 1, 6.0), (0, 2, 6.0), (1, 2, 6.0),
               (3, 4, 6.0), (3, 5, 6.0), (4, 5, 6.0)]
    A = CooccurrenceMatrix(6)
    for i, j, v in entries:
        A.add(i, j, v)
    wins = 0
    margins = []
    for seed in range(5):
        model = train_guvec(A, list("abcdef"), d=4, seed=seed, epochs=30,
                            lr=0.05)
        V = model.vectors
        intra = np.mean([V[i] @ V[j] for i, j, _ in entries])
        inter = np.mean([V[i] @ V[j] for i in range(3) for j in range(3, 6)])
        margins.append(intra - inter)
        wins += int(intra > inter)
    elapsed = time.time() - t0
    ok = wins == 5 and elapsed < 30
    _report(4, "embedding separation", ok,
            "5/5 needed, got %d/5, min margin %.3f, %.1fs"
            % (wins, min(margins), elapsed))


# ------------------------------------------------- shared temporal pipeline

@pytest.fixture(scope="module")
def temporal_run(tmp_path_factory):
    work = str(tmp_path_factory.mktemp("temporal") / "run")
    t0 = time.time()
    cfg = PipelineConfig(workdir=work, desk_scale=True, task="temporal",
                         model="rgnet", epochs=120, lr=1e-2, seed=0)
    run_all(cfg)
    with open(cfg.path("report_rgnet_temporal.json")) as fh:
        rg_report = json.load(fh)
    ncfg = PipelineConfig(workdir=work, desk_scale=True, task="temporal",
                          model="newtonian", epochs=120, lr=1e-2, seed=0)
    run_stage("train", ncfg)
    run_stage("evaluate", ncfg)
    with open(ncfg.path("report_newtonian_temporal.json")) as fh:
        nw_report = json.load(fh)
    elapsed = time.time() - t0
    return cfg, rg_report, nw_report, elapsed


# --------------------------------------------------------------- criterion 5

def test_criterion_05_planted_rule_temporal(temporal_run):
    _cfg, rg, nwr, elapsed = temporal_run
    ok = (rg["micro_f1"] >= 0.90
          and rg["growth_mean_error_pct"] <= 15.0
          and rg["micro_f1"] > nwr["micro_f1"]
          and elapsed < 300)
    _report(5, "planted rule (temporal)", ok,
            "MiF %.3f vs baseline %.3f, growth err %.1f%%, %.0fs"
            % (rg["micro_f1"], nwr["micro_f1"],
               rg["growth_mean_error_pct"], elapsed))


# --------------------------------------------------------------- criterion 6

def test_criterion_06_planted_rule_nontemporal(tmp_path):
    t0 = time.time()
    cfg = PipelineConfig(workdir=str(tmp_path / "nt"), desk_scale=True,
                         task="nontemporal", model="rgnet", epochs=300,
                         lr=1e-2, seed=0, synth_posts=120)
    run_all(cfg)
    with open(cfg.path("report_rgnet_nontemporal.json")) as fh:
        report = json.load(fh)
    elapsed = time.time() - t0
    ok = report["auc"] >= 0.90 and elapsed < 120
    _report(6, "planted rule (one-shot)", ok,
            "AUC %.3f, %.0fs" % (report["auc"], elapsed))


# --------------------------------------------------------------- criterion 7

def test_criterion_07_range_and_causality():
    cfg = toy_config()
    rng = np.random.default_rng(700)
    violations = 0
    store = None
    for pass_idx in range(1000):
        if pass_idx % 100 == 0:
            store = cv.init_model(cfg, seed=pass_idx)
        inst = toy_instance(rng, cfg)
        trace, _ = cv.forward(store, inst["x1"], inst["x2"], inst["centers"])
        y1, y2 = trace.y1_array(), trace.y2_array()
        m, g = trace.m_array(), trace.g_inv_array()
        y3, _pv = cv.nontemporal_forward(store, inst["x1"], inst["centers"][0])
        y3 = float(y3.data)
        if not (np.all((y1 > 0) & (y1 < 1)) and np.all(y2 >= 0)
                and 0 < y3 < 1
                and np.all((m > 0) & (m < 1)) and np.all((g > 0) & (g < 1))):
            violations += 1
            continue
        # corrupt every window after a random step; earlier steps must be
        # bit-identical
        k = int(rng.integers(0, cfg.N - 1))
        x2 = inst["x2"].copy()
        x2[k:] = rng.normal(size=x2[k:].shape)
        mutated, _ = cv.forward(store, inst["x1"], x2, inst["centers"])
        for i in range(k + 1):
            if (not np.array_equal(mutated.steps[i].y1.data,
                                   trace.steps[i].y1.data)
                    or float(mutated.steps[i].y2.data) != float(y2[i])):
                violations += 1
                break
    _report(7, "range/causality", violations == 0,
            "1000 passes, %d violations" % violations)


# --------------------------------------------------------------- criterion 8

def test_criterion_08_metric_distance(temporal_run):
    cfg, *_ = temporal_run
    rows = 0
    violations = 0
    with open(cfg.path("diagnostics_distance.csv")) as fh:
        for rec in csv.DictReader(fh):
            rows += 1
            if float(rec["metric_mean"]) < float(rec["euclidean_mean"]):
                violations += 1
    ok = rows > 0 and violations == 0
    _report(8, "metric >= Euclidean", ok,
            "%d diagnostics rows, %d violations" % (rows, violations))


# --------------------------------------------------------------- criterion 9

def test_criterion_09_determinism(tmp_path):
    digests = []
    files = ["model_rgnet_temporal.ckpt", "report_rgnet_temporal.json",
             "predictions_rgnet_temporal.csv", "embeddings.txt",
             "centers.txt", "cooccur.txt"]
    for name in ("one", "two"):
        cfg = PipelineConfig(workdir=str(tmp_path / name), desk_scale=True,
                             task="temporal", model="rgnet", epochs=10,
                             lr=1e-2, seed=42, synth_discussions=12)
        run_all(cfg)
        digests.append([open(cfg.path(f), "rb").read() for f in files])
    identical = [a == b for a, b in zip(*digests)]
    _report(9, "determinism", all(identical),
            "%d/%d artifacts byte-identical" % (sum(identical), len(files)))


# -------------------------------------------------------------- criterion 10

def test_criterion_10_ablation_ordering(tmp_path):
    settings = ["", "user:drop", "user:noise", "surface:drop", "surface:noise"]
    successes = 0
    details = []
    for seed in range(5):
        work = str(tmp_path / ("seed%d" % seed))
        base = PipelineConfig(workdir=work, desk_scale=True, task="temporal",
                              model="rgnet", epochs=50, lr=1e-2, seed=seed)
        for stage in ["synth", "ingest", "cooccur", "embed", "cluster",
                      "featurize"]:
            run_stage(stage, base)
        mif = {}
        for ablation in settings:
            cfg = PipelineConfig(workdir=work, desk_scale=True,
                                 task="temporal", model="rgnet", epochs=50,
                                 lr=1e-2, seed=seed, ablation=ablation)
            run_stage("train", cfg)
            run_stage("evaluate", cfg)
            with open(cfg.path("report_rgnet_temporal.json")) as fh:
                mif[ablation] = json.load(fh)["micro_f1"]
        base_f1 = mif[""]
        drop_ok = (base_f1 - mif["user:drop"]) > (base_f1 - mif["surface:drop"])
        noise_ok = (base_f1 - mif["user:noise"]) > (base_f1 - mif["surface:noise"])
        successes += int(drop_ok and noise_ok)
        details.append("s%d base %.2f ud %.2f sd %.2f un %.2f sn %.2f"
                       % (seed, base_f1, mif["user:drop"], mif["surface:drop"],
                          mif["user:noise"], mif["surface:noise"]))
    ok = successes >= 4
    _report(10, "ablation ordering", ok,
            "%d/5 seeds; %s" % (successes, "; ".join(details)))
