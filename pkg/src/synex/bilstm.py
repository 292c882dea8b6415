"""Per-word bidirectional LSTM classifier over the whole sentence context.

A forward LSTM reads the tokens left of the target, a backward LSTM reads
the tokens right of it (reversed); the two final hidden states are
concatenated and pushed through a tanh dense layer and a sigmoid output.
Trained as a binary classifier (target word's sentences vs randomly
sampled negatives) with plain mini-batch gradient descent and manual
backpropagation.  Pretrained embeddings are frozen; the only learned
input vector is the one standing in for out-of-vocabulary tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import EmbeddingTable, Sentence, WordEntry

MODEL_VERSION = 1

# Sigmoid outputs are clamped into the open interval for log safety.
_EPS = 1e-12


@dataclass(frozen=True)
class LabeledContext:
    """Lowercased tokens around a (possibly pseudo) target, plus a label.

    The target token itself is excluded from both sides; label 1 marks a
    genuine sentence of the word, 0 a sampled negative.
    """

    left: tuple[str, ...]
    right: tuple[str, ...]
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class Hyper:
    hidden_dim: int = 32
    d1: int = 16
    learning_rate: float = 0.05
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    truncate: int = 30  # max context tokens kept per side, nearest the target
    pos_weight: float = 10.0  # loss weight for positives (offsets 1:10 sampling)


@dataclass
class LstmCell:
    """One direction's gate parameters; each W is (H, D+H), each b is (H,)."""

    Wi: np.ndarray
    Wf: np.ndarray
    Wo: np.ndarray
    Wg: np.ndarray
    bi: np.ndarray
    bf: np.ndarray
    bo: np.ndarray
    bg: np.ndarray


@dataclass(frozen=True)
class BiLstmTrainMeta:
    seed: int
    epochs: int
    final_loss: float
    loss_history: tuple[float, ...]


@dataclass
class BiLstmModel:
    hidden_dim: int
    input_dim: int
    forward_cell: LstmCell
    backward_cell: LstmCell
    W1: np.ndarray  # (d1, 2H)
    b1: np.ndarray  # (d1,)
    w2: np.ndarray  # (d1,)
    b2: np.ndarray  # (1,)
    unknown_vector: np.ndarray  # (input_dim,)
    hyper: Hyper
    train_meta: BiLstmTrainMeta = field(
        default_factory=lambda: BiLstmTrainMeta(0, 0, float("nan"), ())
    )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _init_cell(rng: np.random.Generator, hidden_dim: int, input_dim: int) -> LstmCell:
    fan_in = input_dim + hidden_dim
    limit = 1.0 / np.sqrt(fan_in)

    def w():
        return rng.uniform(-limit, limit, size=(hidden_dim, fan_in))

    return LstmCell(
        Wi=w(), Wf=w(), Wo=w(), Wg=w(),
        bi=np.zeros(hidden_dim), bf=np.zeros(hidden_dim),
        bo=np.zeros(hidden_dim), bg=np.zeros(hidden_dim),
    )


def init_model(table_dim: int, hyper: Hyper) -> BiLstmModel:
    """Seeded parameter initialization; creation order is fixed."""
    rng = np.random.default_rng(hyper.seed)
    fwd = _init_cell(rng, hyper.hidden_dim, table_dim)
    bwd = _init_cell(rng, hyper.hidden_dim, table_dim)
    lim1 = 1.0 / np.sqrt(2 * hyper.hidden_dim)
    W1 = rng.uniform(-lim1, lim1, size=(hyper.d1, 2 * hyper.hidden_dim))
    b1 = np.zeros(hyper.d1)
    lim2 = 1.0 / np.sqrt(hyper.d1)
    w2 = rng.uniform(-lim2, lim2, size=hyper.d1)
    b2 = np.zeros(1)
    unknown = rng.uniform(-0.1, 0.1, size=table_dim)
    return BiLstmModel(
        hidden_dim=hyper.hidden_dim,
        input_dim=table_dim,
        forward_cell=fwd,
        backward_cell=bwd,
        W1=W1,
        b1=b1,
        w2=w2,
        b2=b2,
        unknown_vector=unknown,
        hyper=hyper,
    )


def _param_blocks(model: BiLstmModel) -> list[tuple[str, np.ndarray]]:
    blocks = []
    for prefix, cell in (("fwd", model.forward_cell), ("bwd", model.backward_cell)):
        for gate in ("Wi", "Wf", "Wo", "Wg", "bi", "bf", "bo", "bg"):
            blocks.append((f"{prefix}.{gate}", getattr(cell, gate)))
    blocks.extend(
        [
            ("W1", model.W1),
            ("b1", model.b1),
            ("w2", model.w2),
            ("b2", model.b2),
            ("unknown", model.unknown_vector),
        ]
    )
    return blocks


def _zero_grads(model: BiLstmModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in _param_blocks(model)}


def _embed_side(model: BiLstmModel, table: EmbeddingTable, norms: Sequence[str], keep_tail: bool):
    """Vectors for one context side, truncated to the tokens nearest the target.

    keep_tail=True keeps the last `truncate` tokens (left side); False
    keeps the first `truncate` (right side).  Returns the vectors plus a
    mask of which positions used the learned unknown vector.
    """
    limit = model.hyper.truncate
    if len(norms) > limit:
        norms = norms[-limit:] if keep_tail else norms[:limit]
    vecs = []
    is_unknown = []
    for norm in norms:
        v = table.lookup(norm)
        if v is None:
            vecs.append(model.unknown_vector)
            is_unknown.append(True)
        else:
            vecs.append(v)
            is_unknown.append(False)
    return vecs, is_unknown


def _cell_forward(cell: LstmCell, xs: Sequence[np.ndarray], hidden_dim: int):
    """Run one direction; returns the final hidden state and the step cache."""
    h = np.zeros(hidden_dim)
    c = np.zeros(hidden_dim)
    cache = []
    for x in xs:
        z = np.concatenate([x, h])
        i = _sigmoid(cell.Wi @ z + cell.bi)
        f = _sigmoid(cell.Wf @ z + cell.bf)
        o = _sigmoid(cell.Wo @ z + cell.bo)
        g = np.tanh(cell.Wg @ z + cell.bg)
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        cache.append((z, i, f, o, g, c, c_new, tc))
        h, c = h_new, c_new
    return h, cache


def _cell_backward(cell: LstmCell, cache, dh_final: np.ndarray, input_dim: int):
    """Backprop through time for one direction.

    Returns per-gate parameter gradients and the gradient w.r.t. each
    input vector (same order as the forward inputs).
    """
    H = dh_final.shape[0]
    grads = {
        "Wi": np.zeros_like(cell.Wi),
        "Wf": np.zeros_like(cell.Wf),
        "Wo": np.zeros_like(cell.Wo),
        "Wg": np.zeros_like(cell.Wg),
        "bi": np.zeros(H),
        "bf": np.zeros(H),
        "bo": np.zeros(H),
        "bg": np.zeros(H),
    }
    dxs = [None] * len(cache)
    dh = dh_final
    dc = np.zeros(H)
    for t in range(len(cache) - 1, -1, -1):
        z, i, f, o, g, c_prev, c_new, tc = cache[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f

        dzi = di * i * (1.0 - i)
        dzf = df * f * (1.0 - f)
        dzo = do * o * (1.0 - o)
        dzg = dg * (1.0 - g * g)

        grads["Wi"] += np.outer(dzi, z)
        grads["Wf"] += np.outer(dzf, z)
        grads["Wo"] += np.outer(dzo, z)
        grads["Wg"] += np.outer(dzg, z)
        grads["bi"] += dzi
        grads["bf"] += dzf
        grads["bo"] += dzo
        grads["bg"] += dzg

        dz = cell.Wi.T @ dzi + cell.Wf.T @ dzf + cell.Wo.T @ dzo + cell.Wg.T @ dzg
        dxs[t] = dz[:input_dim]
        dh = dz[input_dim:]
        dc = dc_prev
    return grads, dxs


def _forward(model: BiLstmModel, left_vecs, right_vecs):
    """Score from embedded context sides; also returns the backprop cache."""
    h_f, cache_f = _cell_forward(model.forward_cell, left_vecs, model.hidden_dim)
    h_b, cache_b = _cell_forward(
        model.backward_cell, list(reversed(right_vecs)), model.hidden_dim
    )
    h_cat = np.concatenate([h_f, h_b])
    a1 = np.tanh(model.W1 @ h_cat + model.b1)
    z2 = float(model.w2 @ a1 + model.b2[0])
    p = float(_sigmoid(np.array(z2)))
    return p, (cache_f, cache_b, h_cat, a1)


def _sample_weight(model: BiLstmModel, label: float) -> float:
    return model.hyper.pos_weight if label == 1 else 1.0


def _loss_of_p(p: float, label: float, weight: float) -> float:
    p = min(max(p, _EPS), 1.0 - _EPS)
    return -weight * (label * np.log(p) + (1.0 - label) * np.log(1.0 - p))


def _loss_and_grads(
    model: BiLstmModel,
    sample: LabeledContext,
    table: EmbeddingTable,
    label: Optional[float] = None,
):
    """Weighted cross-entropy loss and gradients for every parameter block.

    `label` overrides the sample's 0/1 label (internal hook; fractional
    targets make the stationary point directly testable).
    """
    y = float(sample.label if label is None else label)
    weight = _sample_weight(model, y)
    left_vecs, left_unk = _embed_side(model, table, sample.left, keep_tail=True)
    right_vecs, right_unk = _embed_side(model, table, sample.right, keep_tail=False)

    p, (cache_f, cache_b, h_cat, a1) = _forward(model, left_vecs, right_vecs)
    loss = _loss_of_p(p, y, weight)

    grads = _zero_grads(model)
    H = model.hidden_dim
    delta2 = weight * (p - y)  # d loss / d z2
    grads["w2"] += delta2 * a1
    grads["b2"] += delta2
    da1 = delta2 * model.w2
    dz1 = da1 * (1.0 - a1 * a1)
    grads["W1"] += np.outer(dz1, h_cat)
    grads["b1"] += dz1
    dh_cat = model.W1.T @ dz1

    fgrads, dxs_left = _cell_backward(model.forward_cell, cache_f, dh_cat[:H], model.input_dim)
    bgrads, dxs_right_rev = _cell_backward(
        model.backward_cell, cache_b, dh_cat[H:], model.input_dim
    )
    for gate, g in fgrads.items():
        grads[f"fwd.{gate}"] += g
    for gate, g in bgrads.items():
        grads[f"bwd.{gate}"] += g

    # Embeddings are frozen; only OOV positions route into unknown_vector.
    for dx, unk in zip(dxs_left, left_unk):
        if unk:
            grads["unknown"] += dx
    for dx, unk in zip(reversed(dxs_right_rev), right_unk):
        if unk:
            grads["unknown"] += dx
    return loss, grads


def build_training_set(
    pool: Sequence[Sentence],
    corpus: Sequence[Sentence],
    word: WordEntry,
    neg_ratio: int,
    seed: int,
) -> list[LabeledContext]:
    """One positive per pool sentence plus `neg_ratio` sampled negatives each.

    Negatives are drawn without replacement (seeded) from corpus
    sentences containing no form of the word; each gets a uniformly
    random pseudo-target position to split left from right.
    """
    if neg_ratio < 0:
        raise ValueError("neg_ratio must be non-negative")
    data: list[LabeledContext] = []
    for s in pool:
        if s.target_index is None:
            raise ValueError(f"pool sentence {s.id} has no target_index")
        norms = [t.norm for t in s.tokens]
        data.append(
            LabeledContext(
                left=tuple(norms[: s.target_index]),
                right=tuple(norms[s.target_index + 1 :]),
                label=1,
            )
        )
    needed = len(pool) * neg_ratio
    if needed == 0:
        return data

    forms = set(word.forms)
    eligible = [s for s in corpus if not any(t.norm in forms for t in s.tokens)]
    if len(eligible) < needed:
        raise ValueError(
            f"corpus has only {len(eligible)} sentences without {word.lemma!r}, "
            f"need {needed} negatives"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(eligible))[:needed]
    for idx in chosen:
        s = eligible[int(idx)]
        norms = [t.norm for t in s.tokens]
        pos = int(rng.integers(len(norms)))
        data.append(
            LabeledContext(left=tuple(norms[:pos]), right=tuple(norms[pos + 1 :]), label=0)
        )
    return data


class TrainingDiverged(RuntimeError):
    pass


def train_bilstm(
    data: Sequence[LabeledContext], table: EmbeddingTable, hyper: Hyper
) -> BiLstmModel:
    """Mini-batch gradient descent on weighted binary cross-entropy.

    Shuffling is seeded, updates are plain SGD, and the per-epoch mean
    training loss lands in train_meta.  A non-finite loss aborts with the
    epoch named.
    """
    if not data:
        raise ValueError("training data is empty")
    model = init_model(table.dim, hyper)
    rng = np.random.default_rng(hyper.seed)
    n = len(data)
    loss_history: list[float] = []
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            acc = _zero_grads(model)
            batch_loss = 0.0
            for idx in batch:
                loss, grads = _loss_and_grads(model, data[int(idx)], table)
                batch_loss += loss
                for name, g in grads.items():
                    acc[name] += g
            scale = 1.0 / len(batch)
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            epoch_loss += batch_loss
            step = hyper.learning_rate * scale
            for name, arr in _param_blocks(model):
                arr -= step * acc[name]
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        loss_history.append(float(mean_loss))
    model.train_meta = BiLstmTrainMeta(
        seed=hyper.seed,
        epochs=hyper.epochs,
        final_loss=loss_history[-1] if loss_history else float("nan"),
        loss_history=tuple(loss_history),
    )
    return model


def bilstm_fitness(model: BiLstmModel, sentence: Sentence, table: EmbeddingTable) -> float:
    """Classifier probability that the sentence belongs to the model's word.

    The target token is excluded from both sides, so the score is
    invariant to whatever surface form sits at target_index.  Empty sides
    contribute the zero state.  Output is clamped into (0, 1).
    """
    if sentence.target_index is None:
        raise ValueError(f"sentence {sentence.id} has no target_index")
    norms = [t.norm for t in sentence.tokens]
    ctx = LabeledContext(
        left=tuple(norms[: sentence.target_index]),
        right=tuple(norms[sentence.target_index + 1 :]),
        label=1,
    )
    return score_context(model, ctx, table)


def score_context(model: BiLstmModel, ctx: LabeledContext, table: EmbeddingTable) -> float:
    left_vecs, _ = _embed_side(model, table, ctx.left, keep_tail=True)
    right_vecs, _ = _embed_side(model, table, ctx.right, keep_tail=False)
    p, _ = _forward(model, left_vecs, right_vecs)
    return float(min(max(p, _EPS), 1.0 - _EPS))


def gradient_check(
    model: BiLstmModel, sample: LabeledContext, table: EmbeddingTable, step: float = 1e-5
) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Gradients are compared block by block: for each parameter block the
    error is ||g_a - g_n|| / (||g_a|| + ||g_n|| + 1e-12), and the max over
    blocks is returned.  Norm aggregation keeps the measure meaningful at
    double precision, where individual near-zero entries are dominated by
    the difference-quotient's rounding noise.  Every entry is perturbed
    in place, so this is quadratic-ish in parameter count; intended for
    small models.
    """
    _, analytic = _loss_and_grads(model, sample, table)
    return _gradient_check_against(model, sample, table, analytic, step)


def _gradient_check_against(
    model: BiLstmModel,
    sample: LabeledContext,
    table: EmbeddingTable,
    analytic: dict[str, np.ndarray],
    step: float = 1e-5,
    label: Optional[float] = None,
) -> float:
    """Check a supplied gradient dict (lets tests inject faults)."""
    max_err = 0.0
    for name, arr in _param_blocks(model):
        flat = arr.reshape(-1)
        numeric = np.empty_like(flat)
        for j in range(flat.shape[0]):
            orig = flat[j]
            flat[j] = orig + step
            lp, _ = _loss_and_grads(model, sample, table, label=label)
            flat[j] = orig - step
            lm, _ = _loss_and_grads(model, sample, table, label=label)
            flat[j] = orig
            numeric[j] = (lp - lm) / (2.0 * step)
        ga = analytic[name].reshape(-1)
        norm_a = float(np.linalg.norm(ga))
        norm_n = float(np.linalg.norm(numeric))
        if max(norm_a, norm_n) < 1e-8:
            # Zero-signal block: the difference quotient's truncation
            # residue (~1e-10 at step 1e-5) carries no information.
            continue
        err = float(np.linalg.norm(ga - numeric)) / (norm_a + norm_n + 1e-12)
        max_err = max(max_err, err)
    return max_err


def save_bilstm(path, word: str, model: BiLstmModel) -> None:
    tensors = {}
    for name, arr in _param_blocks(model):
        tensors[name] = {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
    doc = {
        "version": MODEL_VERSION,
        "word": word,
        "input_dim": model.input_dim,
        "hyper": {
            "hidden_dim": model.hyper.hidden_dim,
            "d1": model.hyper.d1,
            "learning_rate": model.hyper.learning_rate,
            "epochs": model.hyper.epochs,
            "batch_size": model.hyper.batch_size,
            "seed": model.hyper.seed,
            "truncate": model.hyper.truncate,
            "pos_weight": model.hyper.pos_weight,
        },
        "tensors": tensors,
        "train_meta": {
            "seed": model.train_meta.seed,
            "epochs": model.train_meta.epochs,
            "final_loss": model.train_meta.final_loss,
            "loss_history": list(model.train_meta.loss_history),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_bilstm(path) -> tuple[str, BiLstmModel]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported bilstm model version: {doc.get('version')}")
    hyper = Hyper(**doc["hyper"])
    model = init_model(doc["input_dim"], hyper)
    for name, arr in _param_blocks(model):
        spec = doc["tensors"][name]
        arr[...] = np.array(spec["data"], dtype=np.float64).reshape(spec["shape"])
    meta = doc["train_meta"]
    model.train_meta = BiLstmTrainMeta(
        seed=meta["seed"],
        epochs=meta["epochs"],
        final_loss=meta["final_loss"],
        loss_history=tuple(meta["loss_history"]),
    )
    return doc["word"], model
