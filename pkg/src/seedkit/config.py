"""Experiment configuration: a strict, declarative mirror of the run setup.

The config file is JSON whose sections correspond field-for-field to the
dataclasses below. Unknown keys anywhere are errors, so typos surface
immediately instead of silently running defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .errors import ValidationError
from .learn import TrainConfig
from .metrics import DEFAULT_RECALL_LEVELS
from .selection import STRATEGIES
from .textpipe import VectorizerConfig

DEFAULT_SEED_SIZES = (500, 1000, 2000)


@dataclass(frozen=True)
class SplitSection:
    test_fraction: float = 0.10
    rng_seed: int | None = None  # None: derived per replicate from the master seed

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValidationError("split.test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ClusterSection:
    branching: int = 3
    depth: int = 5
    max_iterations: int = 50
    convergence_tol: float = 1e-6
    min_split_size: int | None = None
    rng_seed: int | None = None  # None: derived per replicate from the master seed


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_path: str
    corpus_format: str | None = None
    keywords_path: str | None = None
    split: SplitSection = SplitSection()
    vectorizer: VectorizerConfig = VectorizerConfig()
    cluster: ClusterSection = ClusterSection()
    train: TrainConfig = TrainConfig()
    strategies: tuple[str, ...] = STRATEGIES
    seed_sizes: tuple[int, ...] = DEFAULT_SEED_SIZES
    recall_levels: tuple[float, ...] = DEFAULT_RECALL_LEVELS
    rng_seed: int = 0
    replicates: int = 1

    def __post_init__(self):
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise ValidationError(f"unknown strategies: {sorted(unknown)}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValidationError("strategies must be unique")
        if not self.strategies:
            raise ValidationError("at least one strategy is required")
        if not self.seed_sizes or any(s < 1 for s in self.seed_sizes):
            raise ValidationError("seed_sizes must be positive")
        if len(set(self.seed_sizes)) != len(self.seed_sizes):
            raise ValidationError("seed_sizes must be unique")
        if not self.recall_levels or any(not 0 < r <= 1 for r in self.recall_levels):
            raise ValidationError("recall_levels must lie in (0, 1]")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategies"] = list(self.strategies)
        d["seed_sizes"] = list(self.seed_sizes)
        d["recall_levels"] = list(self.recall_levels)
        return d


def _build_section(cls, raw: Mapping[str, Any], where: str):
    if not isinstance(raw, Mapping):
        raise ValidationError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**raw)


_TOP_LEVEL_KEYS = {
    "corpus",
    "keywords_path",
    "split",
    "vectorizer",
    "cluster",
    "train",
    "strategies",
    "seed_sizes",
    "recall_levels",
    "rng_seed",
    "replicates",
}


def config_from_dict(raw: Mapping[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(raw, Mapping):
        raise ValidationError("experiment config must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    corpus = raw.get("corpus")
    if not isinstance(corpus, Mapping) or "path" not in corpus:
        raise ValidationError("config requires a corpus section with a path")
    unknown = set(corpus) - {"path", "format"}
    if unknown:
        raise ValidationError(f"unknown keys in corpus: {sorted(unknown)}")

    def resolve(p: str | None) -> str | None:
        if p is None:
            return None
        path = Path(p)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return str(path)

    kwargs: dict[str, Any] = {
        "corpus_path": resolve(corpus["path"]),
        "corpus_format": corpus.get("format"),
        "keywords_path": resolve(raw.get("keywords_path")),
    }
    if "split" in raw:
        kwargs["split"] = _build_section(SplitSection, raw["split"], "split")
    if "vectorizer" in raw:
        kwargs["vectorizer"] = _build_section(VectorizerConfig, raw["vectorizer"], "vectorizer")
    if "cluster" in raw:
        kwargs["cluster"] = _build_section(ClusterSection, raw["cluster"], "cluster")
    if "train" in raw:
        kwargs["train"] = _build_section(TrainConfig, raw["train"], "train")
    for key in ("strategies", "seed_sizes", "recall_levels"):
        if key in raw:
            kwargs[key] = tuple(raw[key])
    for key in ("rng_seed", "replicates"):
        if key in raw:
            kwargs[key] = raw[key]
    return ExperimentConfig(**kwargs)


def config_from_file(path: str | Path) -> ExperimentConfig:
    """Load and validate a config file; relative paths resolve beside it."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from exc
    return config_from_dict(raw, base_dir=path.parent)
