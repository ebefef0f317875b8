"""Dataclass configs for the pipeline stages.

Every stage records its config in the run manifest so identical
configs reproduce byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LdaConfig:
    """Collapsed-Gibbs LDA settings. alpha=None means 50/K."""

    alpha: float | None = None
    beta: float = 0.01
    n_train_iters: int = 500
    n_infer_iters: int = 100
    seed: int = 0
    top_n: int = 10
    min_df: int = 2
    k_grid: tuple[int, ...] = (10, 20, 40, 80, 120)

    def alpha_for(self, k: int) -> float:
        return self.alpha if self.alpha is not None else 50.0 / k


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-boosted tree settings (binary logistic objective)."""

    n_trees: int = 300
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 20
    min_gain: float = 0.0
    n_bins: int = 255
    reg_lambda: float = 1.0
    seed: int = 0
    positive_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")


@dataclass(frozen=True)
class ForestConfig:
    """Random-forest baseline settings; shares the tree grower."""

    n_trees: int = 200
    max_leaves: int = 127
    min_samples_leaf: int = 2
    min_gain: float = 0.0
    n_bins: int = 255
    reg_lambda: float = 0.0
    seed: int = 0
    bootstrap: bool = True
    feature_subset: str = "sqrt"  # "sqrt" | "all"


@dataclass
class RunConfig:
    """Top-level CLI configuration; JSON config file, flags win."""

    dump_dir: str | None = None
    workspace: str = "workspace"
    k_folds: int = 5
    seed: int = 0
    groups: tuple[str, ...] = ("s", "t", "a", "q", "ur")
    pr: bool = True
    lda: LdaConfig = field(default_factory=LdaConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def fingerprint(*parts) -> str:
    """Stable hash of configs / plain values for manifests and run ids."""
    blobs = []
    for p in parts:
        if dataclasses.is_dataclass(p) and not isinstance(p, type):
            p = dataclasses.asdict(p)
        blobs.append(p)
    payload = json.dumps(blobs, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def run_config_from_dict(data: dict) -> RunConfig:
    kwargs = dict(data)
    for key, cls in (("lda", LdaConfig), ("train", TrainConfig), ("forest", ForestConfig)):
        if key in kwargs and isinstance(kwargs[key], dict):
            sub = dict(kwargs[key])
            if key == "lda" and "k_grid" in sub:
                sub["k_grid"] = tuple(sub["k_grid"])
            kwargs[key] = cls(**sub)
    if "groups" in kwargs:
        kwargs["groups"] = tuple(g.lower() for g in kwargs["groups"])
    return RunConfig(**kwargs)
