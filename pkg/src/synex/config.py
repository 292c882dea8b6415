"""Engine configuration: paths, defaults, and the config digest.

The digest (sha256 of the canonical JSON form, defaults filled in) keys
the model store directory, so changing any setting invalidates cached
model artifacts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

DEFAULT_K = 5
DEFAULT_POOL_CAP = 5000
DEFAULT_NEG_RATIO = 10
READMORE_CAP = 5

L1_MODES = ("original", "l1_grouped")
MODEL_CHOICES = ("gmm", "bilstm", "baseline")


class ConfigError(Exception):
    """Invalid or unusable configuration; the CLI maps this to exit 2."""


@dataclass(frozen=True)
class GmmSettings:
    components: int = 5
    max_iter: int = 50
    tol: float = 1e-4
    variance_floor: float = 1e-6


@dataclass(frozen=True)
class BilstmSettings:
    hidden_dim: int = 32
    d1: int = 16
    learning_rate: float = 0.05
    epochs: int = 20
    batch_size: int = 32
    truncate: int = 30
    pos_weight: float = 10.0


@dataclass(frozen=True)
class FilterSettings:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-3
    threshold: float = 0.5
    negatives_per_positive: int = 1


@dataclass(frozen=True)
class AlignSettings:
    iterations: int = 10
    prune_below: float = 1e-6


@dataclass(frozen=True)
class EngineConfig:
    embeddings: Path
    corpus: Path
    confusion_sets: Path
    model_store: Path
    event_log: Path
    parallel: Optional[Path] = None
    dict_positives: Optional[Path] = None
    embedding_dim: int = 300
    k: int = DEFAULT_K
    pool_cap: int = DEFAULT_POOL_CAP
    neg_ratio: int = DEFAULT_NEG_RATIO
    seed: int = 13
    l1_mode: str = "original"
    gmm: GmmSettings = field(default_factory=GmmSettings)
    bilstm: BilstmSettings = field(default_factory=BilstmSettings)
    filter: FilterSettings = field(default_factory=FilterSettings)
    align: AlignSettings = field(default_factory=AlignSettings)
    # Raw path strings as written in the file; used for the digest so it
    # does not depend on where the config file happens to live.
    raw_doc: dict = field(default_factory=dict, compare=False)

    def digest(self) -> str:
        canon = canonical_json(self.raw_doc)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _settings(cls, doc: dict, key: str):
    sub = doc.get(key, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(sub) - known
    if unknown:
        raise ConfigError(f"unknown keys in config section {key!r}: {sorted(unknown)}")
    return cls(**sub)


def _filled_doc(cfg: "EngineConfig", paths: dict) -> dict:
    doc = {
        "paths": paths,
        "embedding_dim": cfg.embedding_dim,
        "k": cfg.k,
        "pool_cap": cfg.pool_cap,
        "neg_ratio": cfg.neg_ratio,
        "seed": cfg.seed,
        "l1_mode": cfg.l1_mode,
        "gmm": asdict(cfg.gmm),
        "bilstm": asdict(cfg.bilstm),
        "filter": asdict(cfg.filter),
        "align": asdict(cfg.align),
    }
    return doc


def load_config(path) -> EngineConfig:
    """Parse and validate a JSON config file.

    Relative paths are resolved against the config file's directory.
    Input paths must exist at load time; output locations (model store,
    event log) only need a creatable parent.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None

    base = path.parent
    paths = doc.get("paths")
    if not isinstance(paths, dict):
        raise ConfigError("config must contain a 'paths' object")

    def resolve(key: str, required: bool) -> Optional[Path]:
        value = paths.get(key)
        if value is None:
            if required:
                raise ConfigError(f"config paths.{key} is required")
            return None
        return (base / value).resolve() if not Path(value).is_absolute() else Path(value)

    embeddings = resolve("embeddings", required=True)
    corpus = resolve("corpus", required=True)
    confusion_sets = resolve("confusion_sets", required=True)
    model_store = resolve("model_store", required=True)
    event_log = resolve("event_log", required=True)
    parallel = resolve("parallel", required=False)
    dict_positives = resolve("dict_positives", required=False)

    for name, p in (
        ("embeddings", embeddings),
        ("corpus", corpus),
        ("confusion_sets", confusion_sets),
        ("parallel", parallel),
        ("dict_positives", dict_positives),
    ):
        if p is not None and not p.is_file():
            raise ConfigError(f"config paths.{name}: no such file: {p}")

    known_top = {
        "paths", "embedding_dim", "k", "pool_cap", "neg_ratio", "seed", "l1_mode",
        "gmm", "bilstm", "filter", "align",
    }
    unknown = set(doc) - known_top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    cfg = EngineConfig(
        embeddings=embeddings,
        corpus=corpus,
        confusion_sets=confusion_sets,
        model_store=model_store,
        event_log=event_log,
        parallel=parallel,
        dict_positives=dict_positives,
        embedding_dim=int(doc.get("embedding_dim", 300)),
        k=int(doc.get("k", DEFAULT_K)),
        pool_cap=int(doc.get("pool_cap", DEFAULT_POOL_CAP)),
        neg_ratio=int(doc.get("neg_ratio", DEFAULT_NEG_RATIO)),
        seed=int(doc.get("seed", 13)),
        l1_mode=doc.get("l1_mode", "original"),
        gmm=_settings(GmmSettings, doc, "gmm"),
        bilstm=_settings(BilstmSettings, doc, "bilstm"),
        filter=_settings(FilterSettings, doc, "filter"),
        align=_settings(AlignSettings, doc, "align"),
        raw_doc={},
    )
    if cfg.k < 1:
        raise ConfigError("k must be >= 1")
    if cfg.pool_cap < 1:
        raise ConfigError("pool_cap must be >= 1")
    if cfg.neg_ratio < 0:
        raise ConfigError("neg_ratio must be >= 0")
    if cfg.embedding_dim < 1:
        raise ConfigError("embedding_dim must be >= 1")
    if cfg.l1_mode not in L1_MODES:
        raise ConfigError(f"l1_mode must be one of {L1_MODES}")

    # Digest over the config as written (plus defaults), not resolved paths.
    filled = _filled_doc(cfg, {k: paths.get(k) for k in sorted(paths)})
    object.__setattr__(cfg, "raw_doc", filled)
    return cfg
