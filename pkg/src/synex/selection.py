"""Clarification scoring and the filter -> score -> rank -> top-k pipeline.

A sentence clarifies a word against its confusers when it both fits the
word's usage and fits the other words' usage poorly.  The score of
sentence s for word w_i is

    fitness(s, w_i) * sum over j != i of (fitness(s, w_i) - fitness(s, w_j))

computed on per-word min-max normalized fitness values, since the two
usage-model families produce scores on incompatible scales.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol

from .corpus import ConfusionSet, EmbeddingTable, Sentence, SentencePools
from .dict_filter import DictClassifier, is_dictionary_like

MODEL_KINDS = ("gmm", "bilstm")


class UsageModel(Protocol):
    """Anything that can rate how well a sentence fits one word's usage."""

    def fitness(self, sentence: Sentence) -> float: ...


@dataclass(frozen=True)
class FitnessMatrix:
    """Normalized fitness per (sentence id, lemma), each in [0, 1]."""

    entries: Mapping[tuple[str, str], float]
    model_kind: str

    def value(self, sentence_id: str, lemma: str) -> float:
        key = (sentence_id, lemma)
        if key not in self.entries:
            raise KeyError(f"no fitness entry for sentence {sentence_id!r} under {lemma!r}")
        return self.entries[key]


@dataclass(frozen=True)
class ScoreParts:
    score: float
    fitness: float
    relative_closeness: float


@dataclass(frozen=True)
class SelectedExample:
    sentence: Sentence
    clarification_score: float
    fitness: float
    relative_closeness: float


@dataclass(frozen=True)
class SuggestionResult:
    set_id: str
    per_word: dict[str, tuple[SelectedExample, ...]]
    model_kind: str
    k: int
    l1_restricted: bool = False
    l1_fallback: bool = False
    config_digest: str = ""
    empty_after_filter: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "set": self.set_id,
            "model_kind": self.model_kind,
            "l1_restricted": self.l1_restricted,
            "l1_fallback": self.l1_fallback,
            "k": self.k,
            "per_word": [
                {
                    "lemma": lemma,
                    "examples": [
                        {
                            "id": ex.sentence.id,
                            "text": ex.sentence.text,
                            "score": ex.clarification_score,
                            "fitness": ex.fitness,
                            "closeness": ex.relative_closeness,
                        }
                        for ex in examples
                    ],
                }
                for lemma, examples in self.per_word.items()
            ],
            "empty_after_filter": list(self.empty_after_filter),
            "config_digest": self.config_digest,
        }


def normalize_fitness(
    raw: Mapping[tuple[str, str], float], model_kind: str = "gmm"
) -> FitnessMatrix:
    """Min-max normalize raw scores per lemma over all scored sentences.

    A lemma whose scores are all identical maps to 0.5 everywhere.
    """
    if not raw:
        raise ValueError("raw fitness map is empty")
    by_word: dict[str, list[float]] = {}
    for (_, lemma), score in raw.items():
        by_word.setdefault(lemma, []).append(score)
    bounds = {}
    for lemma, scores in by_word.items():
        bounds[lemma] = (min(scores), max(scores))
    entries = {}
    for (sid, lemma), score in raw.items():
        lo, hi = bounds[lemma]
        if hi == lo:
            entries[(sid, lemma)] = 0.5
        else:
            entries[(sid, lemma)] = (score - lo) / (hi - lo)
    return FitnessMatrix(entries=entries, model_kind=model_kind)


def clarification_score(
    m: FitnessMatrix, sentence_id: str, lemma: str, confusion_set: ConfusionSet
) -> ScoreParts:
    """Fitness times relative closeness for one sentence under one word."""
    p_i = m.value(sentence_id, lemma)
    closeness = 0.0
    for other in confusion_set.lemmas:
        if other == lemma:
            continue
        closeness += p_i - m.value(sentence_id, other)
    return ScoreParts(score=p_i * closeness, fitness=p_i, relative_closeness=closeness)


def select_examples(
    confusion_set: ConfusionSet,
    pools: SentencePools,
    model_kind: str,
    k: int,
    clf: DictClassifier,
    models: Mapping[str, UsageModel],
    table: EmbeddingTable,
    l1_restricted: bool = False,
    l1_fallback: bool = False,
    config_digest: str = "",
) -> SuggestionResult:
    """Run the full pipeline and keep the top-k per word.

    Steps: drop sentences the dictionary-likeness filter rejects, score
    every survivor under every word's usage model (models never see the
    target token, so no substitution happens), min-max normalize per
    word, apply the clarification score, sort descending with ties
    broken by ascending sentence id, truncate to k.  A word whose pool
    empties out after filtering yields an empty list and is flagged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lemmas = confusion_set.lemmas
    for lemma in lemmas:
        if lemma not in models:
            raise KeyError(f"no usage model for {lemma!r}")

    surviving: dict[str, list[Sentence]] = {}
    for lemma in lemmas:
        pool = pools.pools.get(lemma, ())
        surviving[lemma] = [
            s for s in pool if is_dictionary_like(clf, s, table).accepted
        ]

    # The matrix is keyed by sentence id, so one id must mean one target
    # position; pools sharing an id with different targets are rejected.
    seen: dict[str, Sentence] = {}
    for lemma in lemmas:
        for s in surviving[lemma]:
            prior = seen.get(s.id)
            if prior is not None and prior.target_index != s.target_index:
                raise ValueError(
                    f"sentence id {s.id!r} appears in multiple pools with "
                    f"different target positions"
                )
            seen[s.id] = s

    raw: dict[tuple[str, str], float] = {}
    for lemma in lemmas:
        for s in surviving[lemma]:
            for scorer_lemma in lemmas:
                key = (s.id, scorer_lemma)
                if key not in raw:
                    raw[key] = models[scorer_lemma].fitness(s)

    per_word: dict[str, tuple[SelectedExample, ...]] = {}
    empty: list[str] = []
    if raw:
        matrix = normalize_fitness(raw, model_kind)
        for lemma in lemmas:
            scored = []
            for s in surviving[lemma]:
                parts = clarification_score(matrix, s.id, lemma, confusion_set)
                scored.append(
                    SelectedExample(
                        sentence=s,
                        clarification_score=parts.score,
                        fitness=parts.fitness,
                        relative_closeness=parts.relative_closeness,
                    )
                )
            scored.sort(key=lambda ex: (-ex.clarification_score, ex.sentence.id))
            per_word[lemma] = tuple(scored[:k])
            if not scored:
                empty.append(lemma)
    else:
        for lemma in lemmas:
            per_word[lemma] = ()
            empty.append(lemma)

    return SuggestionResult(
        set_id=confusion_set.id,
        per_word=per_word,
        model_kind=model_kind,
        k=k,
        l1_restricted=l1_restricted,
        l1_fallback=l1_fallback,
        config_digest=config_digest,
        empty_after_filter=tuple(empty),
    )
