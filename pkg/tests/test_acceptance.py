"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a [PASS] line on success (run with -s to see them all);
a failure reads as the criterion name plus the violated bound.
"""

import json
import shutil
import time
from itertools import permutations

import numpy as np
import pytest

from synex.bilstm import Hyper, gradient_check, init_model, score_context, train_bilstm
from synex.config import (
    DEFAULT_K,
    DEFAULT_NEG_RATIO,
    DEFAULT_POOL_CAP,
    READMORE_CAP,
    EngineConfig,
    load_config,
)
from synex.corpus import EmbeddingTable
from synex.engine import Engine
from synex.gmm import fit_gmm
from synex.alignment import (
    GlossGrouping,
    group_and_intersect,
    restrict_pool,
    train_ibm1,
)
from synex.selection import select_examples

from test_alignment import dictionary_corpus, planted_grouping_fixture
from test_bilstm import LabeledContext, make_table, marker_task
from test_selection import FakeUsage, accept_all, brute_force_select, random_case


def report(name):
    print(f"[PASS] {name}")


class TestClarificationOracleEquivalence:
    def test_selection_matches_brute_force_on_random_sets(self):
        started = time.monotonic()
        rng = np.random.default_rng(2024)
        table = EmbeddingTable(dim=2, entries={})
        for trial in range(20):
            n_words = 2 + (trial % 2)
            cs, pools, raw = random_case(rng, n_words=n_words, max_pool=33)
            total = sum(len(p) for p in pools.pools.values())
            assert total <= 100
            models = {lemma: FakeUsage(raw[lemma]) for lemma in cs.lemmas}
            result = select_examples(
                cs, pools, "gmm", k=5, clf=accept_all(), models=models, table=table
            )
            expected = brute_force_select(cs, pools, k=5, raw_scores=raw)
            for lemma in cs.lemmas:
                got = result.per_word[lemma]
                assert [e.sentence.id for e in got] == [sid for sid, _ in expected[lemma]]
                for example, (_, score) in zip(got, expected[lemma]):
                    assert example.clarification_score == pytest.approx(score, abs=1e-12)
        elapsed = time.monotonic() - started
        assert elapsed < 10.0
        report(f"Clarification-score oracle equivalence: 20 random sets exact within 1e-12 ({elapsed:.1f}s)")


class TestGmmRecovery:
    def test_recovers_planted_mixture(self):
        started = time.monotonic()
        rng = np.random.default_rng(7)
        dim, K, n = 10, 3, 5000
        true_means = np.zeros((K, dim))
        true_means[1, 0] = 8.0
        true_means[2, 1] = 8.0
        # Pairwise mean distances 8 and 8*sqrt(2) with unit variances: >= 5 sigma.
        weights = np.array([0.3, 0.4, 0.3])
        comps = rng.choice(K, p=weights, size=n)
        samples = true_means[comps] + rng.normal(size=(n, dim))

        model = fit_gmm(samples, K=K, seed=1, max_iter=200, tol=1e-9)

        best = min(
            max(
                float(np.linalg.norm(model.means[perm[i]] - true_means[i]))
                for i in range(K)
            )
            for perm in permutations(range(K))
        )
        assert best < 0.1

        hist = model.train_meta.log_likelihood_history
        assert all(b - a >= -1e-9 for a, b in zip(hist, hist[1:]))

        elapsed = time.monotonic() - started
        assert elapsed < 60.0
        report(
            f"GMM recovery: worst matched mean off by {best:.4f} < 0.1, "
            f"log-likelihood monotone over {len(hist)} iterations ({elapsed:.1f}s)"
        )


class TestBilstmGradientCheck:
    def test_twenty_seeded_configurations(self):
        started = time.monotonic()
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(4000 + seed)
            dim = 4
            words = [f"w{i}" for i in range(10)]
            table = make_table(words, dim=dim, seed=seed)
            model = init_model(dim, Hyper(hidden_dim=4, d1=3, seed=seed))
            vocab = words + ["oov1"]
            nl = int(rng.integers(1, 4))
            nr = int(rng.integers(1, 4))
            left = tuple(vocab[int(i)] for i in rng.integers(len(vocab), size=nl))
            right = tuple(vocab[int(i)] for i in rng.integers(len(vocab), size=nr))
            sample = LabeledContext(left=left, right=right, label=int(seed % 2))
            err = gradient_check(model, sample, table)
            worst = max(worst, err)
        assert worst < 1e-4
        elapsed = time.monotonic() - started
        assert elapsed < 60.0
        report(
            f"BiLSTM gradient check: worst relative error {worst:.2e} < 1e-4 "
            f"over 20 seeded configurations ({elapsed:.1f}s)"
        )


class TestBilstmSyntheticDiscrimination:
    def test_marker_template_task(self):
        started = time.monotonic()
        train, table = marker_task(500, seed=11, table_dim=16)
        held, _ = marker_task(200, seed=12, table_dim=16)
        hyper = Hyper(seed=7)  # stated defaults; 20 epochs <= 30
        assert hyper.epochs <= 30
        model = train_bilstm(train, table, hyper)
        correct = sum(
            int((score_context(model, d, table) >= 0.5) == (d.label == 1)) for d in held
        )
        accuracy = correct / len(held)
        assert accuracy >= 0.95
        elapsed = time.monotonic() - started
        assert elapsed < 300.0
        report(
            f"BiLSTM synthetic discrimination: held-out accuracy {accuracy:.3f} "
            f">= 0.95 within {hyper.epochs} epochs ({elapsed:.1f}s)"
        )


class TestIbm1Recovery:
    def test_dictionary_recovered(self):
        started = time.monotonic()
        mapping, pairs = dictionary_corpus(n_pairs=500, n_entries=50, seed=0)
        tbl = train_ibm1(pairs, iterations=10)

        counts = {}
        for src, _ in pairs:
            for w in src:
                counts[w] = counts.get(w, 0) + 1
        checked = 0
        for e, expected in mapping.items():
            if counts.get(e, 0) >= 5:
                best = max(tbl.probs[e].items(), key=lambda kv: kv[1])[0]
                assert best == expected, f"argmax t(.|{e}) is {best}, wanted {expected}"
                checked += 1
        assert checked > 0

        for e, dist in tbl.probs.items():
            assert abs(sum(dist.values()) - 1.0) < 1e-9

        elapsed = time.monotonic() - started
        assert elapsed < 10.0
        report(
            f"IBM Model 1 recovery: argmax translation correct for {checked} "
            f"frequent sources, distributions sum to 1 within 1e-9 ({elapsed:.1f}s)"
        )


class TestL1GroupingEndToEnd:
    def test_common_gloss_and_restriction(self):
        cs, pools, tbl = planted_grouping_fixture()
        grouping = group_and_intersect(cs, pools, tbl)
        assert set(grouping.buckets["alpha"]) == {"g1", "g2"}
        assert set(grouping.buckets["beta"]) == {"g2", "g3"}
        assert grouping.common == {"g2"}

        restricted = restrict_pool(pools, grouping)
        assert not restricted.fallback
        for lemma in cs.lemmas:
            kept_ids = [s.id for s in restricted.pools.pools[lemma]]
            assert kept_ids == list(grouping.buckets[lemma]["g2"])

        report("L1 grouping end-to-end: common gloss {g2}, pools restricted to its buckets")

    def test_empty_intersection_falls_back(self):
        cs, pools, tbl = planted_grouping_fixture()
        grouping = group_and_intersect(cs, pools, tbl)
        disjoint = GlossGrouping(
            buckets={
                "alpha": {"g1": grouping.buckets["alpha"]["g1"]},
                "beta": {"g3": grouping.buckets["beta"]["g3"]},
            },
            common=frozenset(),
        )
        restricted = restrict_pool(pools, disjoint)
        assert restricted.fallback
        assert restricted.pools.pools == pools.pools
        report("L1 grouping fallback: empty intersection leaves pools unchanged, flag set")


class TestInterfaceConstants:
    def test_defaults_pin_published_interface(self):
        assert DEFAULT_K == 5
        assert READMORE_CAP == 5
        assert DEFAULT_POOL_CAP == 5000
        assert DEFAULT_NEG_RATIO == 10

        fields = {f.name: f.default for f in EngineConfig.__dataclass_fields__.values()}
        assert fields["k"] == 5
        assert fields["pool_cap"] == 5000
        assert fields["neg_ratio"] == 10
        # 5,000 positives at 1:10 sampling give 50,000 negatives.
        assert DEFAULT_POOL_CAP * DEFAULT_NEG_RATIO == 50_000
        report(
            "Interface constants: k=5, readmore cap=5, pool cap=5000, "
            "negatives 1:10 (50,000 at full pool)"
        )


class TestDeterminismReplay:
    def test_full_pipeline_twice_byte_identical(self, workspace):
        cfg = load_config(workspace / "config.json")

        def run():
            store = cfg.model_store / cfg.digest()
            if store.exists():
                shutil.rmtree(store)
            engine = Engine(cfg)
            engine.train_all()
            suggestions = {}
            for kind in ("gmm", "bilstm"):
                result = engine.suggest("refuse_reject", kind)
                suggestions[kind] = json.dumps(result.to_json(), sort_keys=True)
            files = {
                p.name: p.read_bytes() for p in sorted(store.iterdir()) if p.is_file()
            }
            return files, suggestions

        files1, suggestions1 = run()
        files2, suggestions2 = run()

        assert files1.keys() == files2.keys()
        for name in files1:
            assert files1[name] == files2[name], f"model file {name} differs"
        assert suggestions1 == suggestions2
        report(
            f"Determinism replay: {len(files1)} model files and 2 suggestion "
            f"documents byte-identical across two full pipeline runs"
        )
