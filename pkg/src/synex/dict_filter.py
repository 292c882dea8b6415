"""Keeps example sentences that read like dictionary examples.

A logistic regression over ten hand-crafted surface features separates
short, plain, self-contained sentences from long or fragmentary ones.
Feature definitions are fixed constants in this module so the filter is
auditable without a parser.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import EmbeddingTable, Sentence

MODEL_VERSION = 1

FEATURE_NAMES = (
    "token_count",
    "mean_word_length",
    "punctuation_count",
    "digit_token_count",
    "uppercase_initial_ratio",
    "function_word_ratio",
    "has_finite_verb_heuristic",
    "pronoun_subject",
    "comma_count",
    "out_of_vocabulary_ratio",
)

STOPWORDS = frozenset(
    """a an the and or but if while of to in on at by for with about against
    between into through during before after above below from up down out off
    over under again then once here there when where why how all any both each
    few more most other some such no nor not only own same so than too very
    this that these those i you he she it we they me him her us them my your
    his its our their as is am are was were be been being have has had do does
    did will would can could shall should may might must""".split()
)

PRONOUNS = frozenset(
    "i you he she it we they this that these those there who someone anyone".split()
)

# Unambiguous finite verb forms; the -s/-ed suffix heuristic covers the rest.
FINITE_VERB_FORMS = frozenset(
    """is am are was were has have had does do did will would can could shall
    should may might must says said goes went comes came makes made takes took
    gets got knows knew thinks thought sees saw wants liked likes""".split()
)

_PUNCT_CHARS = set(string.punctuation)


class FilterDecision(NamedTuple):
    accepted: bool
    probability: float


@dataclass(frozen=True)
class SyntacticFeatures:
    values: np.ndarray  # (10,) in FEATURE_NAMES order


@dataclass(frozen=True)
class DictClassifier:
    weights: np.ndarray  # (10,)
    bias: float
    threshold: float
    scale_mean: np.ndarray  # (10,)
    scale_std: np.ndarray  # (10,), floored at 1e-9
    loss_history: tuple[float, ...] = ()

    def probability(self, feats: SyntacticFeatures) -> float:
        z = (feats.values - self.scale_mean) / self.scale_std
        return float(1.0 / (1.0 + np.exp(-(self.weights @ z + self.bias))))


def _is_noun_like(norm: str) -> bool:
    # Crude subject candidate: a content word or a pronoun.
    return norm in PRONOUNS or (norm.isalpha() and norm not in STOPWORDS)


def syntactic_features(sentence: Sentence, table: EmbeddingTable) -> SyntacticFeatures:
    """Compute the fixed 10-feature vector for one tokenized sentence."""
    toks = sentence.tokens
    n = len(toks)
    punct = sum(1 for t in toks if all(c in _PUNCT_CHARS for c in t.surface))
    digits = sum(1 for t in toks if any(c.isdigit() for c in t.surface))
    upper = sum(1 for t in toks if t.surface[0].isupper())
    func = sum(1 for t in toks if t.norm in STOPWORDS)
    commas = sum(1 for t in toks if t.surface == ",")
    oov = sum(1 for t in toks if t.norm not in table)

    finite = 0
    for i, t in enumerate(toks):
        if t.norm in FINITE_VERB_FORMS:
            finite = 1
            break
        if (
            i > 0
            and (t.norm.endswith("s") or t.norm.endswith("ed"))
            and t.norm.isalpha()
            and _is_noun_like(toks[i - 1].norm)
        ):
            finite = 1
            break

    values = np.array(
        [
            float(n),
            sum(len(t.surface) for t in toks) / n,
            float(punct),
            float(digits),
            upper / n,
            func / n,
            float(finite),
            1.0 if toks[0].norm in PRONOUNS else 0.0,
            float(commas),
            oov / n,
        ],
        dtype=np.float64,
    )
    return SyntacticFeatures(values=values)


@dataclass(frozen=True)
class LogregHyper:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-3
    seed: int = 0


def train_logreg(
    pos: Sequence[SyntacticFeatures],
    neg: Sequence[SyntacticFeatures],
    hyper: LogregHyper = LogregHyper(),
    threshold: float = 0.5,
) -> DictClassifier:
    """Full-batch gradient descent on L2-regularized cross-entropy.

    Features are standardized with training statistics (std floored at
    1e-9); the bias is not regularized, so with heavy l2 the predictions
    collapse to the base rate rather than to 0.5.
    """
    if not pos or not neg:
        raise ValueError("both positive and negative feature lists must be non-empty")
    X = np.stack([f.values for f in pos] + [f.values for f in neg])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), 1e-9)
    Z = (X - mean) / std

    w = np.zeros(X.shape[1])
    b = 0.0
    n = X.shape[0]
    losses = []
    for epoch in range(hyper.epochs):
        p = 1.0 / (1.0 + np.exp(-(Z @ w + b)))
        pc = np.clip(p, 1e-12, 1.0 - 1e-12)
        loss = float(
            -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
            + 0.5 * hyper.l2 * float(w @ w)
        )
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite training loss at epoch {epoch}")
        losses.append(loss)
        err = p - y
        grad_w = (Z.T @ err) / n + hyper.l2 * w
        grad_b = float(err.mean())
        w = w - hyper.learning_rate * grad_w
        b = b - hyper.learning_rate * grad_b

    return DictClassifier(
        weights=w,
        bias=b,
        threshold=threshold,
        scale_mean=mean,
        scale_std=std,
        loss_history=tuple(losses),
    )


def is_dictionary_like(
    clf: DictClassifier, sentence: Sentence, table: EmbeddingTable
) -> FilterDecision:
    """Threshold the classifier probability; exact ties accept."""
    prob = clf.probability(syntactic_features(sentence, table))
    return FilterDecision(accepted=prob >= clf.threshold, probability=prob)


def save_classifier(path, clf: DictClassifier) -> None:
    doc = {
        "version": MODEL_VERSION,
        "weights": clf.weights.tolist(),
        "bias": clf.bias,
        "threshold": clf.threshold,
        "scaling": {"mean": clf.scale_mean.tolist(), "std": clf.scale_std.tolist()},
        "loss_history": list(clf.loss_history),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_classifier(path) -> DictClassifier:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported classifier version: {doc.get('version')}")
    return DictClassifier(
        weights=np.array(doc["weights"], dtype=np.float64),
        bias=doc["bias"],
        threshold=doc["threshold"],
        scale_mean=np.array(doc["scaling"]["mean"], dtype=np.float64),
        scale_std=np.array(doc["scaling"]["std"], dtype=np.float64),
        loss_history=tuple(doc.get("loss_history", ())),
    )
