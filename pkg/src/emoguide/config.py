"""Declarative run configuration.

A run config is a single JSON document with fixed sections.  Loading merges
it over the defaults below, rejecting unknown keys at any depth, and applies
environment-variable overrides (paths only: ``EMOGUIDE_LEXICON``,
``EMOGUIDE_CORPUS``, ...).  The resolved document has every default spelled
out; its canonical serialization is hashed so output files can be traced
back to the exact settings that produced them.

File paths left null fall back to the packaged fixtures where one exists
(lexicon, blocklists, self-chat seeds); the corpus path has no default.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Sequence

from .corpus import FilterRules, SynthConfig, load_blocklist
from .model import DecodeConfig, ModelConfig
from .objective import PegeConfig
from .polarity import ClassifierParams, PolarityClassifier
from .resources import (
    ENTITY_FILE,
    LEXICON_FILE,
    OFFENSIVE_FILE,
    SEEDS_FILE,
    TOPIC_FILE,
    data_path,
)
from .selfchat import SeedUtterance, SelfChatConfig
from .train import TrainConfig
from .vad import VadLexicon, load_lexicon_file


class ConfigError(Exception):
    """Malformed run configuration (bad syntax, unknown key, bad value)."""


ENV_PREFIX = "EMOGUIDE_"

_PACKAGED = {
    "lexicon": LEXICON_FILE,
    "topic_blocklist": TOPIC_FILE,
    "entity_patterns": ENTITY_FILE,
    "offensive_blocklist": OFFENSIVE_FILE,
    "seeds": SEEDS_FILE,
}

_DEFAULTS = {
    "seed": 0,
    "paths": {
        "lexicon": None,
        "topic_blocklist": None,
        "entity_patterns": None,
        "offensive_blocklist": None,
        "seeds": None,
        "corpus": None,
    },
    "model": {"embed_dim": 64, "hidden_dim": 128, "num_layers": 1, "context_window": 128},
    "train": {"learning_rate": 1e-3, "batch_size": 32, "max_steps": 500, "ablation": "full"},
    "objective": {"alpha": 5.0, "beta": 2.0, "max_turn": 7},
    "classifier": {"temperature": 0.1, "neutral_bias": 1.0},
    "filters": {"first_utt_threshold": 0.5, "last_utt_pos_threshold": 0.9},
    "synth": {
        "num_dialogs": 100,
        "turns_range": [5, 11],
        "polarity_mix": [0.33, 0.34, 0.33],
        "trajectory_mix": [0.5, 0.2, 0.3],
        "min_words": 3,
        "max_words": 7,
    },
    "selfchat": {
        "turns": 10,
        "decode": {"mode": "greedy", "k": 5, "temperature": 1.0, "max_tokens": 12},
    },
}


def _merge(defaults: dict, override: dict, crumb: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in override.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key: {crumb}{key}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{crumb}{key} must be an object")
            out[key] = _merge(defaults[key], value, f"{crumb}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _apply_env(paths: dict) -> dict:
    out = dict(paths)
    for key in out:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env:
            out[key] = env
    return out


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration document."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> RunConfig:
        if not isinstance(raw, dict):
            raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
        data = _merge(_DEFAULTS, raw, crumb="")
        if not isinstance(data["seed"], int) or data["seed"] < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {data['seed']!r}")
        data["paths"] = _apply_env(data["paths"])
        return cls(data=data)

    def with_overrides(self, *, seed: int | None = None, ablation: str | None = None) -> RunConfig:
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = seed
        if ablation is not None:
            data["train"]["ablation"] = ablation
        return RunConfig.from_dict(data)

    # ------------------------------------------------------------- basics

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def resolved(self) -> dict:
        return copy.deepcopy(self.data)

    def config_hash(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def path(self, name: str) -> str | None:
        """Configured path, or the packaged fixture when one exists."""
        try:
            configured = self.data["paths"][name]
        except KeyError:
            raise ConfigError(f"unknown path name: {name}") from None
        if configured is not None:
            return configured
        if name in _PACKAGED:
            return str(data_path(_PACKAGED[name]))
        return None

    # ----------------------------------------------------------- builders

    def _build(self, factory, **kwargs):
        try:
            return factory(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def model_config(self, vocab_size: int) -> ModelConfig:
        return self._build(ModelConfig, vocab_size=vocab_size, **self.data["model"])

    def train_config(self) -> TrainConfig:
        return self._build(TrainConfig, seed=self.seed, **self.data["train"])

    def pege_config(self) -> PegeConfig:
        return self._build(PegeConfig, **self.data["objective"])

    def classifier_params(self) -> ClassifierParams:
        return self._build(ClassifierParams, **self.data["classifier"])

    def lexicon(self) -> VadLexicon:
        return load_lexicon_file(self.path("lexicon"))

    def classifier(self) -> PolarityClassifier:
        return PolarityClassifier(self.lexicon(), self.classifier_params())

    def filter_rules(self) -> FilterRules:
        return self._build(
            FilterRules,
            **self.data["filters"],
            topic_blocklist=frozenset(load_blocklist(self.path("topic_blocklist"))),
            entity_patterns=tuple(load_blocklist(self.path("entity_patterns"))),
            offensive_blocklist=frozenset(load_blocklist(self.path("offensive_blocklist"))),
        )

    def synth_config(self) -> SynthConfig:
        raw = self.data["synth"]
        return self._build(
            SynthConfig,
            num_dialogs=raw["num_dialogs"],
            turns_range=tuple(raw["turns_range"]),
            polarity_mix=tuple(raw["polarity_mix"]),
            trajectory_mix=tuple(raw["trajectory_mix"]),
            min_words=raw["min_words"],
            max_words=raw["max_words"],
        )

    def decode_config(self) -> DecodeConfig:
        return self._build(DecodeConfig, **self.data["selfchat"]["decode"])

    def selfchat_config(self, seeds: Sequence[SeedUtterance]) -> SelfChatConfig:
        return self._build(
            SelfChatConfig,
            seeds=tuple(seeds),
            turns=self.data["selfchat"]["turns"],
            decode=self.decode_config(),
            rng_seed=self.seed,
        )


def default_run_config() -> RunConfig:
    return RunConfig.from_dict({})


def load_run_config(path) -> RunConfig:
    """Parse a JSON run config; syntax errors and unknown keys are ConfigError."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return RunConfig.from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
