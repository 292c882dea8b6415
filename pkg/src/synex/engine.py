"""Model lifecycle and suggestion orchestration.

Loads data resources once, trains and persists per-word usage models
under a config-digest-keyed store directory, and serves deterministic
suggestion results for the CLI and the HTTP API.
"""

from __future__ import annotations

import logging
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from . import alignment, bilstm, dict_filter, gmm
from .config import EngineConfig, MODEL_CHOICES
from .corpus import (
    ConfusionSet,
    EmbeddingTable,
    Sentence,
    SentencePools,
    build_pool,
    load_embeddings,
    read_confusion_sets,
    read_corpus_file,
    read_parallel_file,
    tokenize,
    write_pool_file,
)
from .selection import SelectedExample, SuggestionResult, select_examples

log = logging.getLogger(__name__)


class UnknownSet(KeyError):
    pass


class ModelMissing(RuntimeError):
    pass


class GmmUsage:
    kind = "gmm"

    def __init__(self, model: gmm.GmmModel, table: EmbeddingTable):
        self.model = model
        self.table = table

    def fitness(self, sentence: Sentence) -> float:
        return gmm.gmm_fitness(self.model, sentence, self.table)


class BilstmUsage:
    kind = "bilstm"

    def __init__(self, model: bilstm.BiLstmModel, table: EmbeddingTable):
        self.model = model
        self.table = table

    def fitness(self, sentence: Sentence) -> float:
        return bilstm.bilstm_fitness(self.model, sentence, self.table)


class Engine:
    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self.digest = cfg.digest()

    # -- resources ---------------------------------------------------------

    @cached_property
    def table(self) -> EmbeddingTable:
        with open(self.cfg.embeddings, encoding="utf-8") as fh:
            return load_embeddings(fh, self.cfg.embedding_dim)

    @cached_property
    def corpus_sentences(self) -> list[Sentence]:
        return read_corpus_file(self.cfg.corpus)

    @cached_property
    def candidates(self) -> list[Sentence]:
        """Corpus sentences followed by parallel-text sentences."""
        sentences = list(self.corpus_sentences)
        if self.cfg.parallel is not None:
            sentences.extend(read_parallel_file(self.cfg.parallel))
        return sentences

    @cached_property
    def sets(self) -> dict[str, ConfusionSet]:
        loaded = read_confusion_sets(self.cfg.confusion_sets)
        return {cs.id: cs for cs in loaded}

    def confusion_set(self, set_id: str) -> ConfusionSet:
        try:
            return self.sets[set_id]
        except KeyError:
            raise UnknownSet(f"unknown confusion set: {set_id!r}") from None

    # -- pools -------------------------------------------------------------

    def build_pools(self, confusion_set: ConfusionSet) -> SentencePools:
        """Per-word candidate pools with cross-pool duplicates resolved.

        A sentence matching several set words goes only to the word whose
        matching token comes first in the sentence (set order breaks
        exact position ties), so every sentence id carries one target
        position throughout selection.
        """
        raw_pools = {
            w.lemma: build_pool(self.candidates, w, self.cfg.pool_cap)
            for w in confusion_set.words
        }
        owner: dict[str, tuple[int, str]] = {}
        for pos_rank, word in enumerate(confusion_set.words):
            for s in raw_pools[word.lemma]:
                claim = (s.target_index, pos_rank)
                if s.id not in owner or claim < (owner[s.id][0], owner[s.id][1]):
                    owner[s.id] = (s.target_index, pos_rank)
        pools = {}
        for pos_rank, word in enumerate(confusion_set.words):
            pools[word.lemma] = tuple(
                s
                for s in raw_pools[word.lemma]
                if owner[s.id] == (s.target_index, pos_rank)
            )
        return SentencePools(pools=pools)

    # -- model store -------------------------------------------------------

    def store_dir(self) -> Path:
        d = Path(self.cfg.model_store) / self.digest
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _gmm_path(self, lemma: str) -> Path:
        return self.store_dir() / f"gmm__{lemma}.json"

    def _bilstm_path(self, lemma: str) -> Path:
        return self.store_dir() / f"bilstm__{lemma}.json"

    def _filter_path(self) -> Path:
        return self.store_dir() / "filter.json"

    def _align_path(self) -> Path:
        return self.store_dir() / "align.json"

    def _selected_sets(self, set_id: Optional[str]) -> list[ConfusionSet]:
        if set_id is None:
            return list(self.sets.values())
        return [self.confusion_set(set_id)]

    # -- training ----------------------------------------------------------

    def train_gmm(self, set_id: Optional[str] = None) -> list[Path]:
        cfg = self.cfg
        written = []
        for cs in self._selected_sets(set_id):
            pools = self.build_pools(cs)
            for word in cs.words:
                pool = pools.pools[word.lemma]
                feats = []
                for s in pool:
                    feats.extend(gmm.context_features(s, self.table).vectors)
                if len(feats) < cfg.gmm.components:
                    raise RuntimeError(
                        f"word {word.lemma!r}: {len(feats)} context features, "
                        f"need at least {cfg.gmm.components}"
                    )
                model = gmm.fit_gmm(
                    np.stack(feats),
                    K=cfg.gmm.components,
                    seed=cfg.seed,
                    max_iter=cfg.gmm.max_iter,
                    tol=cfg.gmm.tol,
                    variance_floor=cfg.gmm.variance_floor,
                )
                path = self._gmm_path(word.lemma)
                gmm.save_gmm(path, word.lemma, model)
                written.append(path)
                log.info("trained gmm for %s on %d features", word.lemma, len(feats))
            write_pool_file(self.store_dir() / f"pools__{cs.id}.jsonl",
                            [s for p in pools.pools.values() for s in p])
        return written

    def train_bilstm(self, set_id: Optional[str] = None) -> list[Path]:
        cfg = self.cfg
        hyper = bilstm.Hyper(
            hidden_dim=cfg.bilstm.hidden_dim,
            d1=cfg.bilstm.d1,
            learning_rate=cfg.bilstm.learning_rate,
            epochs=cfg.bilstm.epochs,
            batch_size=cfg.bilstm.batch_size,
            seed=cfg.seed,
            truncate=cfg.bilstm.truncate,
            pos_weight=cfg.bilstm.pos_weight,
        )
        written = []
        for cs in self._selected_sets(set_id):
            pools = self.build_pools(cs)
            for word in cs.words:
                data = bilstm.build_training_set(
                    pools.pools[word.lemma],
                    self.candidates,
                    word,
                    neg_ratio=cfg.neg_ratio,
                    seed=cfg.seed,
                )
                model = bilstm.train_bilstm(data, self.table, hyper)
                path = self._bilstm_path(word.lemma)
                bilstm.save_bilstm(path, word.lemma, model)
                written.append(path)
                log.info("trained bilstm for %s on %d contexts", word.lemma, len(data))
        return written

    def train_filter(self) -> Path:
        cfg = self.cfg
        if cfg.dict_positives is None:
            raise RuntimeError("config paths.dict_positives is required to train the filter")
        pos_feats = []
        with open(cfg.dict_positives, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                toks = tokenize(line)
                if not toks:
                    continue
                s = Sentence(id=f"d{lineno:06d}", tokens=tuple(toks), source_tag="dictionary")
                pos_feats.append(dict_filter.syntactic_features(s, self.table))
        if not pos_feats:
            raise RuntimeError("dictionary positives file contains no sentences")

        rng = np.random.default_rng(cfg.seed)
        wanted = len(pos_feats) * cfg.filter.negatives_per_positive
        corpus = self.corpus_sentences  # raw prose only, not parallel text
        if not corpus:
            raise RuntimeError("corpus is empty; cannot sample filter negatives")
        idx = rng.permutation(len(corpus))[:wanted]
        neg_feats = [
            dict_filter.syntactic_features(corpus[int(i)], self.table) for i in idx
        ]
        clf = dict_filter.train_logreg(
            pos_feats,
            neg_feats,
            dict_filter.LogregHyper(
                learning_rate=cfg.filter.learning_rate,
                epochs=cfg.filter.epochs,
                l2=cfg.filter.l2,
                seed=cfg.seed,
            ),
            threshold=cfg.filter.threshold,
        )
        path = self._filter_path()
        dict_filter.save_classifier(path, clf)
        log.info("trained filter on %d/%d examples", len(pos_feats), len(neg_feats))
        return path

    def train_align(self) -> Path:
        cfg = self.cfg
        if cfg.parallel is None:
            raise RuntimeError("config paths.parallel is required to train alignment")
        pairs = []
        for s in read_parallel_file(cfg.parallel):
            pairs.append(([t.norm for t in s.tokens], list(s.l1_text)))
        tbl = alignment.train_ibm1(pairs, iterations=cfg.align.iterations)
        path = self._align_path()
        alignment.save_table(path, tbl, prune_below=cfg.align.prune_below)
        log.info("trained alignment on %d pairs", len(pairs))
        return path

    def train_all(self, set_id: Optional[str] = None) -> None:
        self.train_gmm(set_id)
        self.train_bilstm(set_id)
        if self.cfg.dict_positives is not None:
            self.train_filter()
        if self.cfg.parallel is not None:
            self.train_align()

    # -- loading -----------------------------------------------------------

    def _require(self, path: Path, what: str) -> Path:
        if not path.is_file():
            raise ModelMissing(f"{what} not trained (missing {path.name})")
        return path

    def load_usage_models(self, kind: str, cs: ConfusionSet) -> dict:
        models = {}
        for word in cs.words:
            if kind == "gmm":
                _, m = gmm.load_gmm(self._require(self._gmm_path(word.lemma), f"gmm[{word.lemma}]"))
                models[word.lemma] = GmmUsage(m, self.table)
            elif kind == "bilstm":
                _, m = bilstm.load_bilstm(
                    self._require(self._bilstm_path(word.lemma), f"bilstm[{word.lemma}]")
                )
                models[word.lemma] = BilstmUsage(m, self.table)
            else:
                raise ValueError(f"unknown usage model kind: {kind!r}")
        return models

    def load_filter(self) -> dict_filter.DictClassifier:
        return dict_filter.load_classifier(self._require(self._filter_path(), "filter"))

    def load_alignment(self) -> alignment.TranslationTable:
        return alignment.load_table(self._require(self._align_path(), "alignment"))

    # -- suggestion --------------------------------------------------------

    def suggest(
        self,
        set_id: str,
        model_kind: Optional[str] = None,
        k: Optional[int] = None,
        l1_grouped: Optional[bool] = None,
    ) -> SuggestionResult:
        cfg = self.cfg
        kind = model_kind or "gmm"
        if kind not in MODEL_CHOICES:
            raise ValueError(f"model must be one of {MODEL_CHOICES}, got {kind!r}")
        k = cfg.k if k is None else k
        if k < 1:
            raise ValueError("k must be >= 1")
        use_l1 = (cfg.l1_mode == "l1_grouped") if l1_grouped is None else l1_grouped

        cs = self.confusion_set(set_id)
        pools = self.build_pools(cs)

        l1_fallback = False
        l1_restricted = False
        if use_l1:
            tbl = self.load_alignment()
            grouping = alignment.group_and_intersect(cs, pools, tbl)
            restricted = alignment.restrict_pool(pools, grouping)
            pools = restricted.pools
            l1_fallback = restricted.fallback
            l1_restricted = not restricted.fallback

        if kind == "baseline":
            return self._baseline_result(cs, pools, k, l1_restricted, l1_fallback)

        clf = self.load_filter()
        models = self.load_usage_models(kind, cs)
        return select_examples(
            cs,
            pools,
            model_kind=kind,
            k=k,
            clf=clf,
            models=models,
            table=self.table,
            l1_restricted=l1_restricted,
            l1_fallback=l1_fallback,
            config_digest=self.digest,
        )

    def _baseline_result(
        self, cs: ConfusionSet, pools: SentencePools, k: int,
        l1_restricted: bool, l1_fallback: bool,
    ) -> SuggestionResult:
        """The comparison arm: the last k pool sentences, unscored."""
        per_word = {}
        empty = []
        for lemma in cs.lemmas:
            pool = pools.pools.get(lemma, ())
            tail = list(pool)[-k:]
            per_word[lemma] = tuple(
                SelectedExample(
                    sentence=s, clarification_score=0.0, fitness=0.0, relative_closeness=0.0
                )
                for s in tail
            )
            if not tail:
                empty.append(lemma)
        return SuggestionResult(
            set_id=cs.id,
            per_word=per_word,
            model_kind="baseline",
            k=k,
            l1_restricted=l1_restricted,
            l1_fallback=l1_fallback,
            config_digest=self.digest,
            empty_after_filter=tuple(empty),
        )
