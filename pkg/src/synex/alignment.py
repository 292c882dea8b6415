"""IBM Model 1 word alignment and L1 gloss grouping.

Trains lexical translation probabilities t(f|e) on L2-L1 sentence pairs
by expectation maximization, aligns each L1 token to its best L2 source
(or to the null word), extracts the L1 gloss of a marked target word,
and restricts candidate pools to sentences whose glosses are shared by
every word in a confusion set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import math

from .corpus import ConfusionSet, Sentence, SentencePools

TABLE_VERSION = 1

# The null source word; real tokens are never empty, so "" cannot collide.
NULL_WORD = ""


@dataclass(frozen=True)
class TranslationTable:
    """t(f|e): for each L2 word e (lowercased), a distribution over L1 tokens."""

    probs: dict[str, dict[str, float]]
    iterations: int = 0
    log_likelihood_history: tuple[float, ...] = ()

    def t(self, f: str, e: str) -> float:
        return self.probs.get(e, {}).get(f, 0.0)


@dataclass(frozen=True)
class GlossGrouping:
    """Sentence ids bucketed by extracted gloss, per lemma, plus the
    glosses common to every word of the set."""

    buckets: dict[str, dict[str, tuple[str, ...]]]
    common: frozenset[str]
    skipped_missing_l1: dict[str, int] = field(default_factory=dict)
    skipped_no_gloss: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class RestrictedPools:
    pools: SentencePools
    fallback: bool  # True when no common gloss existed and pools pass unchanged


def train_ibm1(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]], iterations: int
) -> TranslationTable:
    """EM training of lexical translation probabilities.

    Starts uniform over co-occurring vocabulary (the null word co-occurs
    with everything), then repeats expected-count collection and
    per-source renormalization.  L2 tokens are lowercased; L1 tokens are
    taken verbatim.  Empty token lists are rejected with the pair index.
    """
    if not pairs:
        raise ValueError("no sentence pairs")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")

    cleaned: list[tuple[list[str], list[str]]] = []
    for idx, (l2, l1) in enumerate(pairs):
        l2_norm = [w.lower() for w in l2]
        l1_list = list(l1)
        if not l2_norm or not l1_list:
            raise ValueError(f"pair {idx}: empty token list")
        cleaned.append((l2_norm, l1_list))

    # Uniform initialization over co-occurring words.
    cooc: dict[str, dict[str, None]] = {NULL_WORD: {}}
    for l2_norm, l1_list in cleaned:
        for f in l1_list:
            cooc[NULL_WORD][f] = None
        for e in l2_norm:
            bucket = cooc.setdefault(e, {})
            for f in l1_list:
                bucket[f] = None
    probs: dict[str, dict[str, float]] = {}
    for e, fs in cooc.items():
        u = 1.0 / len(fs)
        probs[e] = {f: u for f in fs}

    ll_history: list[float] = []
    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = {}
        totals: dict[str, float] = {}
        ll = 0.0
        for l2_norm, l1_list in cleaned:
            sources = [NULL_WORD] + l2_norm
            log_len = math.log(len(sources))
            for f in l1_list:
                denom = 0.0
                for e in sources:
                    denom += probs[e][f]
                ll += math.log(denom) - log_len
                for e in sources:
                    share = probs[e][f] / denom
                    counts.setdefault(e, {})
                    counts[e][f] = counts[e].get(f, 0.0) + share
                    totals[e] = totals.get(e, 0.0) + share
        ll_history.append(ll)
        for e, fs in counts.items():
            total = totals[e]
            probs[e] = {f: c / total for f, c in fs.items()}

    return TranslationTable(
        probs=probs, iterations=iterations, log_likelihood_history=tuple(ll_history)
    )


def align(
    tbl: TranslationTable, pair: tuple[Sequence[str], Sequence[str]]
) -> list[tuple[int, int]]:
    """Link each L1 token to its argmax L2 source; null links are omitted.

    Ties go to the lowest L2 index; the null word wins only when strictly
    better than every real token.
    """
    l2, l1 = pair
    l2_norm = [w.lower() for w in l2]
    links: list[tuple[int, int]] = []
    for j, f in enumerate(l1):
        best_idx = 0
        best = tbl.t(f, l2_norm[0]) if l2_norm else 0.0
        for i in range(1, len(l2_norm)):
            score = tbl.t(f, l2_norm[i])
            if score > best:
                best = score
                best_idx = i
        if l2_norm and tbl.t(f, NULL_WORD) <= best:
            links.append((best_idx, j))
    return links


def extract_gloss(tbl: TranslationTable, sentence: Sentence) -> Optional[str]:
    """The L1 token(s) aligned to the sentence's target word.

    Multiple linked tokens concatenate in L1 order, space-separated.
    Returns None when nothing aligns to the target.
    """
    if sentence.target_index is None:
        raise ValueError(f"sentence {sentence.id} has no target_index")
    if sentence.l1_text is None:
        raise ValueError(f"sentence {sentence.id} has no l1_text")
    l2 = [t.norm for t in sentence.tokens]
    links = align(tbl, (l2, sentence.l1_text))
    linked = sorted(j for (i, j) in links if i == sentence.target_index)
    if not linked:
        return None
    return " ".join(sentence.l1_text[j] for j in linked)


def group_and_intersect(
    confusion_set: ConfusionSet, pools: SentencePools, tbl: TranslationTable
) -> GlossGrouping:
    """Bucket every word's pool sentences by gloss; intersect the gloss sets.

    Sentences without an L1 rendering, or whose target aligns to
    nothing, are skipped and counted.
    """
    buckets: dict[str, dict[str, list[str]]] = {}
    missing: dict[str, int] = {}
    no_gloss: dict[str, int] = {}
    for lemma in confusion_set.lemmas:
        buckets[lemma] = {}
        missing[lemma] = 0
        no_gloss[lemma] = 0
        for s in pools.pools.get(lemma, ()):
            if s.l1_text is None:
                missing[lemma] += 1
                continue
            gloss = extract_gloss(tbl, s)
            if gloss is None:
                no_gloss[lemma] += 1
                continue
            buckets[lemma].setdefault(gloss, []).append(s.id)

    common: Optional[set[str]] = None
    for lemma in confusion_set.lemmas:
        keys = set(buckets[lemma].keys())
        common = keys if common is None else (common & keys)
    frozen = {
        lemma: {g: tuple(ids) for g, ids in b.items()} for lemma, b in buckets.items()
    }
    return GlossGrouping(
        buckets=frozen,
        common=frozenset(common or ()),
        skipped_missing_l1=missing,
        skipped_no_gloss=no_gloss,
    )


def restrict_pool(pools: SentencePools, grouping: GlossGrouping) -> RestrictedPools:
    """Keep only sentences glossed by a common gloss; no common gloss
    means the pools pass through unchanged with the fallback flag set."""
    if not grouping.common:
        return RestrictedPools(pools=pools, fallback=True)
    kept: dict[str, tuple[Sentence, ...]] = {}
    for lemma, sentences in pools.pools.items():
        allowed: set[str] = set()
        for gloss in grouping.common:
            allowed.update(grouping.buckets.get(lemma, {}).get(gloss, ()))
        kept[lemma] = tuple(s for s in sentences if s.id in allowed)
    return RestrictedPools(pools=SentencePools(pools=kept), fallback=False)


def save_table(path, tbl: TranslationTable, prune_below: float = 1e-6) -> None:
    """Persist as versioned JSON; probabilities under `prune_below` are
    dropped (documented lossy cut, keeps files bounded)."""
    probs = {}
    for e, fs in tbl.probs.items():
        kept = {f: p for f, p in fs.items() if p >= prune_below}
        if kept:
            probs[e] = kept
    doc = {
        "version": TABLE_VERSION,
        "null_word": NULL_WORD,
        "iterations": tbl.iterations,
        "log_likelihood_history": list(tbl.log_likelihood_history),
        "probs": probs,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def load_table(path) -> TranslationTable:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != TABLE_VERSION:
        raise ValueError(f"unsupported translation table version: {doc.get('version')}")
    return TranslationTable(
        probs={e: dict(fs) for e, fs in doc["probs"].items()},
        iterations=doc.get("iterations", 0),
        log_likelihood_history=tuple(doc.get("log_likelihood_history", ())),
    )
