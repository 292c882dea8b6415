"""Shared fixtures: a miniature but fully functional data workspace.

The workspace is sized so every training command finishes in seconds:
short target-word sentences that pass the dictionary-likeness filter,
long filler sentences that supply negatives and fail it, and a parallel
corpus shaped so IBM Model 1 recovers the planted glosses (see the
fixture docstring in test_alignment.py for why the particle and the
balanced gloss frequencies matter).
"""

import json

import numpy as np
import pytest

from synex.config import load_config

REFUSE_SHORT = [
    "She refused the offer politely .",
    "He refused their invitation yesterday .",
    "They refused the new plan quickly .",
    "She refused his request at once .",
    "He refused the money this time .",
    "The boy refused the gift again .",
    "She refuses every offer these days .",
    "He refused the deal on principle .",
]

REJECT_SHORT = [
    "The judge rejected the appeal today .",
    "They rejected the proposal last week .",
    "She rejected the first design completely .",
    "The board rejected his application again .",
    "He rejected the idea without thought .",
    "The editor rejected the second draft .",
    "They rejected every suggestion we made .",
    "The committee rejected the budget plan .",
]

FILLER_WORDS = (
    "meeting report window garden music coffee letter bridge market "
    "evening morning teacher student weather journey kitchen library "
    "picture village mountain river station airport ticket doctor"
).split()

DICT_POSITIVES = [
    "She opened the door slowly .",
    "He reads the paper every day .",
    "The children play in the garden .",
    "It is a quiet little town .",
    "They walked to the station together .",
    "She gave him a short answer .",
    "The train arrives at noon .",
    "He wrote a letter to his friend .",
    "The shop closes at six .",
    "She sings in the choir on Sundays .",
    "We waited for the bus in the rain .",
    "The cat sleeps on the warm chair .",
    "The judge closed the case today .",
    "The board meets every Monday morning .",
    "The committee discussed the new budget .",
    "The editor liked the second draft .",
    "They accepted the offer at once .",
    "He answered the question politely .",
    "She wanted the first design most .",
    "We finished the report last week .",
]

# Subjects of the parallel sentences, each pinned to its own L1 token.
PARALLEL_SUBJECTS = {"She": "TA1", "He": "TA2", "We": "TA3", "They": "TA4"}

# (verb, gloss, object filler, subject, tail filler); gloss frequencies
# are balanced per verb and subjects rotate so only the verb accumulates
# gloss evidence (see test_alignment.planted_grouping_fixture).
PARALLEL_PLAN = [
    ("refused", "JU", "x0", "She", "t0"),
    ("refused", "JU", "x4", "He", "t1"),
    ("refused", "CI", "x1", "We", "t2"),
    ("refused", "CI", "x6", "They", "t3"),
    ("rejected", "JU", "x2", "We", "t2"),
    ("rejected", "JU", "x7", "They", "t3"),
    ("rejected", "TUI", "x3", "She", "t0"),
    ("rejected", "TUI", "x5", "He", "t1"),
]


def _filler_sentence(rng, i):
    n = int(rng.integers(26, 38))
    words = [FILLER_WORDS[int(j)] for j in rng.integers(len(FILLER_WORDS), size=n)]
    words[0] = words[0].capitalize()
    return " ".join(["The", "long"] + words + ["indeed", "."])


def _parallel_lines():
    lines = []
    for i in range(15):
        for _ in range(2):
            lines.append({"l2": [f"y{i}"], "l1": [f"hy{i}", "le"]})
    for x in [f"x{i}" for i in range(8)] + [f"t{i}" for i in range(4)]:
        for _ in range(3):
            lines.append({"l2": [x], "l1": [f"h{x}", "le"]})
    for n, (subj, ta) in enumerate(PARALLEL_SUBJECTS.items()):
        for tail in (f"t{n % 4}", f"t{(n + 1) % 4}"):
            for _ in range(2):
                lines.append({"l2": [subj, tail], "l1": [ta, f"h{tail}", "le"]})
    for verb, gloss, x, subj, tail in PARALLEL_PLAN:
        l2 = [subj, verb, x, tail]
        l1 = [PARALLEL_SUBJECTS[subj], gloss, f"h{x}", f"h{tail}", "le"]
        for _ in range(4):
            lines.append({"l2": l2, "l1": l1})
    return lines


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    rng = np.random.default_rng(101)

    corpus_lines = list(REFUSE_SHORT) + list(REJECT_SHORT)
    corpus_lines += [_filler_sentence(rng, i) for i in range(40)]
    corpus_lines.append("The zzqq gadget hums mysteriously .")  # OOV words on purpose
    (root / "corpus.txt").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")

    parallel = _parallel_lines()
    with open(root / "parallel.jsonl", "w", encoding="utf-8") as fh:
        for line in parallel:
            fh.write(json.dumps(line) + "\n")

    (root / "dict_positives.txt").write_text(
        "\n".join(DICT_POSITIVES) + "\n", encoding="utf-8"
    )

    sets = [
        {
            "id": "refuse_reject",
            "words": [
                {"lemma": "refuse", "forms": ["refuse", "refused", "refuses", "refusing"]},
                {"lemma": "reject", "forms": ["reject", "rejected", "rejects", "rejecting"]},
            ],
        }
    ]
    (root / "sets.json").write_text(json.dumps(sets, indent=1), encoding="utf-8")

    vocab = set()
    for line in corpus_lines + DICT_POSITIVES:
        for w in line.split():
            vocab.add(w.strip('.,!?;:"()').lower())
    for line in parallel:
        vocab.update(w.lower() for w in line["l2"])
    vocab.discard("")
    vocab -= {"zzqq"}  # keep one word out of vocabulary
    dim = 8
    with open(root / "embeddings.txt", "w", encoding="utf-8") as fh:
        for w in sorted(vocab):
            vec = rng.normal(size=dim)
            fh.write(w + " " + " ".join(repr(float(v)) for v in vec) + "\n")

    config = {
        "paths": {
            "embeddings": "embeddings.txt",
            "corpus": "corpus.txt",
            "parallel": "parallel.jsonl",
            "confusion_sets": "sets.json",
            "dict_positives": "dict_positives.txt",
            "model_store": "store",
            "event_log": "logs/events.jsonl",
        },
        "embedding_dim": dim,
        "seed": 13,
        "neg_ratio": 2,
        "gmm": {"components": 2, "max_iter": 15, "tol": 1e-6},
        "bilstm": {"hidden_dim": 6, "d1": 4, "epochs": 2, "batch_size": 8, "truncate": 10},
        "filter": {"epochs": 500, "negatives_per_positive": 2},
        "align": {"iterations": 10},
    }
    (root / "config.json").write_text(json.dumps(config, indent=1), encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def trained_engine(workspace):
    """Engine with every model trained once per test session."""
    from synex.engine import Engine

    cfg = load_config(workspace / "config.json")
    engine = Engine(cfg)
    engine.train_all()
    return engine
