"""Declarative run configuration.

Config files are ``key = value`` lines; ``#`` starts a comment and blank
lines are ignored. Every key can be overridden by a same-named CLI flag
(underscores become dashes). Unknown keys are a configuration error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Any

from .crf import TrainConfig
from .errors import ConfigError
from .features import PAD, FeatureTemplateConfig


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _parse_str_tuple(s: str) -> tuple[str, ...]:
    return tuple(s.replace(",", " ").split())


def _parse_int_tuple(s: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in s.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected integers, got {s!r}")


def _parse_gazetteers(s: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in s.replace(",", " ").split():
        if "=" not in item:
            raise ConfigError(f"expected TYPE=PATH, got {item!r}")
        typ, path = item.split("=", 1)
        if not typ or not path:
            raise ConfigError(f"expected TYPE=PATH, got {item!r}")
        out[typ] = path
    return out


def _identity(s: str) -> str:
    return s


@dataclass
class RunConfig:
    """Everything a pipeline run needs: paths, parsing, features, training."""

    # corpora and artifacts
    train: str | None = None
    dev: str | None = None
    model: str | None = None
    # parsing
    columns: tuple[str, ...] = ("surface", "label")
    bare_labels: bool = False
    normalize: bool = True
    bio: str = "repair"
    entity_types: tuple[str, ...] = ()  # empty = derive from the training corpus
    # feature resources
    pos_lexicon: str | None = None
    pos_unknown_tag: str = "UNK"
    clusters: str | None = None
    embeddings: str | None = None
    gazetteers: dict[str, str] = field(default_factory=dict)
    # feature templates
    use_pos: bool = False
    k_pos: int = 2
    use_suffix: bool = True
    suffix_lengths: tuple[int, ...] = (1, 2, 3, 4)
    use_prefix: bool = True
    prefix_lengths: tuple[int, ...] = (1, 2, 3)
    use_neighbors: bool = True
    k_nb: int = 2
    use_digit: bool = False
    use_cluster: bool = False
    use_gazetteer: bool = False
    boundary_pad: str = PAD
    lowercase: bool = True
    # training
    l2: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5
    seed: int = 0
    threads: int = 0  # 0 = all available cores
    # decoding
    bio_mask: bool = False
    # clustering
    k: int = 64
    cluster_max_iter: int = 100
    cluster_tol: float = 1e-6

    def feature_config(self) -> FeatureTemplateConfig:
        return FeatureTemplateConfig(
            use_pos=self.use_pos,
            k_pos=self.k_pos,
            use_suffix=self.use_suffix,
            suffix_lengths=self.suffix_lengths,
            use_prefix=self.use_prefix,
            prefix_lengths=self.prefix_lengths,
            use_neighbors=self.use_neighbors,
            k_nb=self.k_nb,
            use_digit=self.use_digit,
            use_cluster=self.use_cluster,
            use_gazetteer=self.use_gazetteer,
            boundary_pad=self.boundary_pad,
            lowercase=self.lowercase,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            l2=self.l2,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            seed=self.seed,
        )

    def effective_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


_CONVERTERS: dict[str, Any] = {
    "train": _identity,
    "dev": _identity,
    "model": _identity,
    "columns": _parse_str_tuple,
    "bare_labels": _parse_bool,
    "normalize": _parse_bool,
    "bio": _identity,
    "entity_types": _parse_str_tuple,
    "pos_lexicon": _identity,
    "pos_unknown_tag": _identity,
    "clusters": _identity,
    "embeddings": _identity,
    "gazetteers": _parse_gazetteers,
    "use_pos": _parse_bool,
    "k_pos": int,
    "use_suffix": _parse_bool,
    "suffix_lengths": _parse_int_tuple,
    "use_prefix": _parse_bool,
    "prefix_lengths": _parse_int_tuple,
    "use_neighbors": _parse_bool,
    "k_nb": int,
    "use_digit": _parse_bool,
    "use_cluster": _parse_bool,
    "use_gazetteer": _parse_bool,
    "boundary_pad": _identity,
    "lowercase": _parse_bool,
    "l2": float,
    "max_iterations": int,
    "tolerance": float,
    "seed": int,
    "threads": int,
    "bio_mask": _parse_bool,
    "k": int,
    "cluster_max_iter": int,
    "cluster_tol": float,
}

assert set(_CONVERTERS) == {f.name for f in fields(RunConfig)}


def parse_config_file(path) -> dict[str, str]:
    """Raw ``key = value`` pairs from a config file (values unconverted)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def build_config(
    file_values: dict[str, str] | None = None,
    overrides: dict[str, str] | None = None,
) -> RunConfig:
    """RunConfig from file values plus CLI overrides (overrides win)."""
    merged: dict[str, str] = {}
    merged.update(file_values or {})
    merged.update(overrides or {})
    kwargs: dict[str, Any] = {}
    for key, value in merged.items():
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _CONVERTERS[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return RunConfig(**kwargs)


def validate_for_train(cfg: RunConfig) -> None:
    """All training preconditions at once; collected into one error."""
    problems: list[str] = []
    if not cfg.train:
        problems.append("no training corpus configured (key 'train')")
    elif not os.path.exists(cfg.train):
        problems.append(f"training corpus not found: {cfg.train}")
    if cfg.dev and not os.path.exists(cfg.dev):
        problems.append(f"dev corpus not found: {cfg.dev}")
    if not cfg.model:
        problems.append("no model output path configured (key 'model')")
    if "label" not in cfg.columns:
        problems.append(f"column spec {cfg.columns} has no 'label' column")
    if cfg.bio not in ("strict", "repair"):
        problems.append(f"bio must be 'strict' or 'repair', got {cfg.bio!r}")
    problems.extend(_resource_problems(cfg, pos_column="pos" in cfg.columns))
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))


def _resource_problems(cfg: RunConfig, pos_column: bool) -> list[str]:
    problems: list[str] = []
    if cfg.use_pos and not pos_column and not cfg.pos_lexicon:
        problems.append(
            "POS features are enabled but there is no 'pos' column and no pos_lexicon"
        )
    if cfg.pos_lexicon and not os.path.exists(cfg.pos_lexicon):
        problems.append(f"POS lexicon not found: {cfg.pos_lexicon}")
    if cfg.use_cluster:
        if not cfg.clusters:
            problems.append("cluster features are enabled but no cluster file is configured")
        elif not os.path.exists(cfg.clusters):
            problems.append(f"cluster file not found: {cfg.clusters}")
    if cfg.use_gazetteer:
        if not cfg.gazetteers:
            problems.append("gazetteer features are enabled but no gazetteer files are configured")
        else:
            for typ, path in sorted(cfg.gazetteers.items()):
                if not os.path.exists(path):
                    problems.append(f"gazetteer for {typ!r} not found: {path}")
    return problems


def validate_for_tag(cfg: RunConfig, feature_cfg: FeatureTemplateConfig, pos_column: bool) -> None:
    """Check that the resources a trained model needs are configured."""
    probe = RunConfig(
        pos_lexicon=cfg.pos_lexicon,
        clusters=cfg.clusters,
        gazetteers=cfg.gazetteers,
        use_pos=feature_cfg.use_pos,
        use_cluster=feature_cfg.use_cluster,
        use_gazetteer=feature_cfg.use_gazetteer,
    )
    problems = _resource_problems(probe, pos_column=pos_column)
    if problems:
        raise ConfigError(
            "the model needs resources that are missing:\n  " + "\n  ".join(problems)
        )
