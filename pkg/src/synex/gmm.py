"""Gaussian-mixture word-usage model over local context embeddings.

A word's usage is modeled as a diagonal-covariance mixture fitted to
embedding features drawn from a +/-2 window around the target word.  Each
of a sentence's (up to six) feature vectors counts as one independent
sample at training time; at scoring time the sentence fitness is the mean
per-feature log-density, keeping sentences with different feature counts
comparable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .corpus import EmbeddingTable, Sentence, embed

MODEL_VERSION = 1

# Fitness assigned to a sentence with no constructible context feature.
NO_FEATURE_SCORE = -1e9

DEFAULT_VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class ContextFeatures:
    """The constructible subset of the six canonical window features.

    Canonical order: e[t-2], e[t-1], e[t-2]+e[t-1], e[t+1], e[t+2],
    e[t+1]+e[t+2].  A feature is present only if every token it needs is
    inside the sentence and in the embedding vocabulary; a sum is present
    only if both addends are.  The target word itself never contributes.
    """

    vectors: tuple[np.ndarray, ...]
    slots: tuple[int, ...]  # canonical indices (0-5) of the present vectors


@dataclass(frozen=True)
class GmmTrainMeta:
    seed: int
    iterations: int
    final_log_likelihood: float
    log_likelihood_history: tuple[float, ...]


@dataclass(frozen=True)
class GmmModel:
    """Diagonal-covariance Gaussian mixture with bookkeeping for audits."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, dim)
    variances: np.ndarray  # (K, dim), every entry >= variance_floor
    variance_floor: float
    train_meta: GmmTrainMeta

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def __post_init__(self):
        w = self.weights
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        if np.any(self.variances < self.variance_floor):
            raise ValueError("variance below floor")


def context_features(sentence: Sentence, table: EmbeddingTable) -> ContextFeatures:
    """Extract the window-2 embedding features around the target word."""
    if sentence.target_index is None:
        raise ValueError(f"sentence {sentence.id} has no target_index")
    t = sentence.target_index
    toks = sentence.tokens

    def at(offset: int) -> Optional[np.ndarray]:
        i = t + offset
        if 0 <= i < len(toks):
            return embed(table, toks[i])
        return None

    lm2, lm1 = at(-2), at(-1)
    rp1, rp2 = at(+1), at(+2)
    candidates = [
        lm2,
        lm1,
        lm2 + lm1 if lm2 is not None and lm1 is not None else None,
        rp1,
        rp2,
        rp1 + rp2 if rp1 is not None and rp2 is not None else None,
    ]
    vectors = []
    slots = []
    for slot, vec in enumerate(candidates):
        if vec is not None:
            vectors.append(vec)
            slots.append(slot)
    return ContextFeatures(vectors=tuple(vectors), slots=tuple(slots))


def _log_density_matrix(X: np.ndarray, weights, means, variances) -> np.ndarray:
    """Per-sample, per-component log of weight_k * N(x; mean_k, diag var_k).

    X: (N, dim) -> returns (N, K).
    """
    # log N(x) = -0.5 * sum_d [ log(2*pi*var) + (x-mu)^2/var ]
    log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * variances), axis=1)  # (K,)
    diff = X[:, None, :] - means[None, :, :]  # (N, K, dim)
    mahal = np.sum(diff * diff / variances[None, :, :], axis=2)  # (N, K)
    return np.log(weights)[None, :] + log_norm[None, :] - 0.5 * mahal


def _e_step(X: np.ndarray, weights, means, variances):
    """Responsibilities and total log-likelihood for the current parameters."""
    joint = _log_density_matrix(X, weights, means, variances)  # (N, K)
    per_sample_ll = logsumexp(joint, axis=1)  # (N,)
    log_resp = joint - per_sample_ll[:, None]
    return np.exp(log_resp), float(per_sample_ll.sum())


def _kmeans_pp_centers(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ center selection (selection only, no Lloyd passes)."""
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = closest.sum()
        if total <= 0.0:
            # All points coincide with a chosen center; any pick works.
            idx = int(rng.integers(n))
        else:
            probs = closest / total
            idx = int(rng.choice(n, p=probs))
        centers[k] = X[idx]
        closest = np.minimum(closest, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def fit_gmm(
    samples: np.ndarray,
    K: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-6,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
) -> GmmModel:
    """Fit a K-component diagonal GMM by EM with k-means++ initialization.

    Deterministic for a given seed.  Stops when the log-likelihood
    improvement drops below `tol` or after `max_iter` iterations.  Raises
    when there are fewer samples than components; zero-variance
    dimensions are clamped to `variance_floor` instead of failing.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"samples must be a 2-d array, got shape {X.shape}")
    n, dim = X.shape
    if n < K:
        raise ValueError(f"need at least K={K} samples, got {n}")
    if max_iter <= 0:
        raise ValueError("max_iter must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")

    rng = np.random.default_rng(seed)
    means = _kmeans_pp_centers(X, K, rng)

    # Hard-assign to the nearest center for starting weights/variances.
    d2 = np.sum((X[:, None, :] - means[None, :, :]) ** 2, axis=2)
    assign = np.argmin(d2, axis=1)
    weights = np.empty(K, dtype=np.float64)
    variances = np.empty((K, dim), dtype=np.float64)
    global_var = np.maximum(X.var(axis=0), variance_floor)
    for k in range(K):
        members = X[assign == k]
        weights[k] = max(len(members), 1)
        if len(members) >= 2:
            variances[k] = np.maximum(members.var(axis=0), variance_floor)
        else:
            variances[k] = global_var
    weights /= weights.sum()

    ll_history: list[float] = []
    prev_ll = -np.inf
    iterations = 0
    for _ in range(max_iter):
        resp, ll = _e_step(X, weights, means, variances)
        ll_history.append(ll)
        iterations += 1

        nk = resp.sum(axis=0)  # (K,)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        weights = weights / weights.sum()
        means = (resp.T @ X) / nk[:, None]
        ex2 = (resp.T @ (X * X)) / nk[:, None]
        variances = np.maximum(ex2 - means * means, variance_floor)

        if ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll

    return GmmModel(
        weights=weights,
        means=means,
        variances=variances,
        variance_floor=variance_floor,
        train_meta=GmmTrainMeta(
            seed=seed,
            iterations=iterations,
            final_log_likelihood=ll_history[-1],
            log_likelihood_history=tuple(ll_history),
        ),
    )


def gmm_log_density(model: GmmModel, x: np.ndarray) -> float:
    """Log mixture density at `x`, stabilized via log-sum-exp."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"expected vector of length {model.dim}, got shape {x.shape}")
    joint = _log_density_matrix(x[None, :], model.weights, model.means, model.variances)
    return float(logsumexp(joint, axis=1)[0])


def gmm_fitness(model: GmmModel, sentence: Sentence, table: EmbeddingTable) -> float:
    """Mean per-feature log-density; featureless sentences get the sentinel.

    The target token never contributes (features exclude it), so scoring
    a sentence under another word's model needs no token substitution.
    """
    feats = context_features(sentence, table)
    if not feats.vectors:
        return NO_FEATURE_SCORE
    X = np.stack(feats.vectors)
    joint = _log_density_matrix(X, model.weights, model.means, model.variances)
    return float(np.mean(logsumexp(joint, axis=1)))


def save_gmm(path, word: str, model: GmmModel) -> None:
    doc = {
        "version": MODEL_VERSION,
        "word": word,
        "K": model.n_components,
        "dim": model.dim,
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
        "variance_floor": model.variance_floor,
        "train_meta": {
            "seed": model.train_meta.seed,
            "iterations": model.train_meta.iterations,
            "final_log_likelihood": model.train_meta.final_log_likelihood,
            "log_likelihood_history": list(model.train_meta.log_likelihood_history),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_gmm(path) -> tuple[str, GmmModel]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported gmm model version: {doc.get('version')}")
    meta = doc["train_meta"]
    model = GmmModel(
        weights=np.array(doc["weights"], dtype=np.float64),
        means=np.array(doc["means"], dtype=np.float64),
        variances=np.array(doc["variances"], dtype=np.float64),
        variance_floor=doc["variance_floor"],
        train_meta=GmmTrainMeta(
            seed=meta["seed"],
            iterations=meta["iterations"],
            final_log_likelihood=meta["final_log_likelihood"],
            log_likelihood_history=tuple(meta["log_likelihood_history"]),
        ),
    )
    return doc["word"], model
