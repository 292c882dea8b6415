"""Tokenization, embeddings, and the sentence/pool data model.

Everything downstream (usage models, the filter, selection, alignment)
consumes the types defined here.  All of them are immutable after
construction, so they can be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

# Characters split off into their own tokens when they appear at the
# edge of a whitespace-delimited chunk.
_PUNCT = set('.,!?;:"\'()[]{}')

SOURCE_TAGS = ("corpus", "dictionary", "parallel")


@dataclass(frozen=True)
class Token:
    """A single surface token plus its lowercased form."""

    surface: str
    norm: str

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"bad token surface: {self.surface!r}")
        if self.norm != self.surface.lower():
            raise ValueError(f"token norm {self.norm!r} is not lowercase({self.surface!r})")

    @classmethod
    def of(cls, surface: str) -> "Token":
        return cls(surface=surface, norm=surface.lower())


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence, optionally with a marked target word.

    ``target_index`` is the 0-based position of the confusing word under
    study; raw corpus sentences leave it unset.  ``l1_text`` carries a
    pre-segmented first-language rendering when one is available (used
    for gloss extraction).
    """

    id: str
    tokens: tuple[Token, ...]
    target_index: Optional[int] = None
    source_tag: str = "corpus"
    l1_text: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id}: empty token list")
        if self.source_tag not in SOURCE_TAGS:
            raise ValueError(f"sentence {self.id}: unknown source_tag {self.source_tag!r}")
        if self.target_index is not None and not (0 <= self.target_index < len(self.tokens)):
            raise ValueError(
                f"sentence {self.id}: target_index {self.target_index} out of range"
            )

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)

    def with_target(self, index: int) -> "Sentence":
        return Sentence(
            id=self.id,
            tokens=self.tokens,
            target_index=index,
            source_tag=self.source_tag,
            l1_text=self.l1_text,
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "tokens": [t.surface for t in self.tokens],
            "target_index": self.target_index,
            "source_tag": self.source_tag,
            "l1_text": list(self.l1_text) if self.l1_text is not None else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Sentence":
        return cls(
            id=obj["id"],
            tokens=tuple(Token.of(s) for s in obj["tokens"]),
            target_index=obj.get("target_index"),
            source_tag=obj.get("source_tag", "corpus"),
            l1_text=tuple(obj["l1_text"]) if obj.get("l1_text") is not None else None,
        )


@dataclass(frozen=True)
class WordEntry:
    """A confusing word: lemma plus every accepted inflected form.

    Matching is done against this explicit list, never a stemmer, so the
    behavior is fully auditable from the input file.
    """

    lemma: str
    forms: tuple[str, ...]

    def __post_init__(self):
        if self.lemma not in self.forms:
            raise ValueError(f"word {self.lemma!r}: forms must include the lemma")


@dataclass(frozen=True)
class ConfusionSet:
    """A group of 2-3 near-synonyms to contrast."""

    words: tuple[WordEntry, ...]
    id: str = ""

    def __post_init__(self):
        if not (2 <= len(self.words) <= 3):
            raise ValueError(f"confusion set must contain 2-3 words, got {len(self.words)}")
        lemmas = [w.lemma for w in self.words]
        if len(set(lemmas)) != len(lemmas):
            raise ValueError(f"duplicate lemmas in confusion set: {lemmas}")
        if not self.id:
            object.__setattr__(self, "id", "_".join(lemmas))

    @property
    def lemmas(self) -> list[str]:
        return [w.lemma for w in self.words]

    def entry(self, lemma: str) -> WordEntry:
        for w in self.words:
            if w.lemma == lemma:
                return w
        raise KeyError(lemma)


@dataclass(frozen=True)
class SentencePools:
    """Per-lemma candidate sentence lists, each sentence with its target marked."""

    pools: dict[str, tuple[Sentence, ...]]

    def validate(self, confusion_set: ConfusionSet, cap: int) -> None:
        for lemma, sentences in self.pools.items():
            forms = set(confusion_set.entry(lemma).forms)
            if len(sentences) > cap:
                raise ValueError(f"pool for {lemma!r} exceeds cap {cap}")
            for s in sentences:
                if s.target_index is None:
                    raise ValueError(f"pool sentence {s.id} has no target_index")
                if s.tokens[s.target_index].norm not in forms:
                    raise ValueError(
                        f"pool sentence {s.id}: token at target_index is not a form of {lemma!r}"
                    )


class EmbeddingTable:
    """Fixed pretrained word vectors keyed by lowercased surface form.

    Lookups of absent words return ``None``; callers decide what an
    out-of-vocabulary token means for them.
    """

    def __init__(self, dim: int, entries: dict[str, np.ndarray]):
        if dim <= 0:
            raise ValueError("embedding dim must be positive")
        self.dim = dim
        self.entries = entries

    def __contains__(self, norm: str) -> bool:
        return norm in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, norm: str) -> Optional[np.ndarray]:
        return self.entries.get(norm)


def tokenize(text: str) -> list[Token]:
    """Split raw text into tokens, separating edge punctuation.

    Whitespace delimits chunks; leading/trailing punctuation marks
    (``. , ! ? ; : " ' ( ) [ ] { }``) are peeled off into their own
    tokens.  Deterministic; empty input gives an empty list.
    """
    tokens: list[Token] = []
    for chunk in text.split():
        prefix: list[str] = []
        suffix: list[str] = []
        while chunk and chunk[0] in _PUNCT:
            prefix.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in _PUNCT:
            suffix.append(chunk[-1])
            chunk = chunk[:-1]
        for p in prefix:
            tokens.append(Token.of(p))
        if chunk:
            tokens.append(Token.of(chunk))
        for s in reversed(suffix):
            tokens.append(Token.of(s))
    return tokens


def load_embeddings(stream: Iterable[str], dim: int) -> EmbeddingTable:
    """Parse a word-vector text stream: one word plus `dim` floats per line.

    Later duplicates overwrite earlier entries.  Malformed lines raise
    with the offending 1-based line number.
    """
    entries: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(stream, start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != dim + 1:
            raise ValueError(
                f"embedding line {lineno}: expected {dim + 1} fields, got {len(parts)}"
            )
        word = parts[0].lower()
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"embedding line {lineno}: {exc}") from None
        entries[word] = vec
    return EmbeddingTable(dim=dim, entries=entries)


def build_pool(corpus: Iterable[Sentence], word: WordEntry, cap: int) -> list[Sentence]:
    """Collect up to `cap` corpus sentences containing a form of `word`.

    The target is the first matching token; corpus order is preserved.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    forms = set(word.forms)
    pool: list[Sentence] = []
    for sentence in corpus:
        for i, token in enumerate(sentence.tokens):
            if token.norm in forms:
                pool.append(sentence.with_target(i))
                break
        if len(pool) >= cap:
            break
    return pool


def embed(table: EmbeddingTable, token: Token) -> Optional[np.ndarray]:
    """Exact lookup on the token's lowercased form; ``None`` when absent."""
    return table.lookup(token.norm)


def read_corpus_file(path, source_tag: str = "corpus", id_prefix: str = "c") -> list[Sentence]:
    """One raw sentence per line; blank lines skipped. Ids are line-numbered."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = tokenize(line)
            if not toks:
                continue
            sentences.append(
                Sentence(id=f"{id_prefix}{lineno:06d}", tokens=tuple(toks), source_tag=source_tag)
            )
    return sentences


def read_parallel_file(path, id_prefix: str = "p") -> list[Sentence]:
    """JSON-lines parallel text: {"l2": [tokens], "l1": [tokens]} per line."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            toks = tuple(Token.of(t) for t in obj["l2"])
            sentences.append(
                Sentence(
                    id=f"{id_prefix}{lineno:06d}",
                    tokens=toks,
                    source_tag="parallel",
                    l1_text=tuple(obj["l1"]),
                )
            )
    return sentences


def read_confusion_sets(path) -> list[ConfusionSet]:
    """JSON array of confusion sets; ids default to joined lemmas."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    sets = []
    for obj in raw:
        words = tuple(
            WordEntry(lemma=w["lemma"], forms=tuple(w["forms"])) for w in obj["words"]
        )
        sets.append(ConfusionSet(words=words, id=obj.get("id", "")))
    return sets


def write_pool_file(path, pool: Iterable[Sentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in pool:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_pool_file(path) -> list[Sentence]:
    pool = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pool.append(Sentence.from_json(json.loads(line)))
    return pool
