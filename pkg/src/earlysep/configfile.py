"""Plain-text `key = value` configuration files.

One flat namespace mirrors every model hyperparameter plus the sweep
settings. `#` starts a comment; unknown keys are rejected so typos fail
fast instead of silently falling back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .network import ABLATIONS, ConfigError, ModelConfig

__all__ = ["SweepSettings", "parse_config_text", "load_config_file",
           "config_to_text", "build_model_config", "build_sweep_settings",
           "parse_slots", "parse_variants"]


@dataclass
class SweepSettings:
    """Experiment-harness knobs that sit outside the model itself."""

    slots: list = field(default_factory=lambda: list(range(2, 24)))
    variants: list = field(default_factory=lambda: ["full"])
    runs: int = 5
    base_seed: int = 0
    split_ratio: float = 0.8
    workers: int = 1
    gbdt_rounds: int = 100
    gbdt_depth: int = 3
    gbdt_shrinkage: float = 0.1
    gbdt_min_leaf: int = 5

    def validate(self) -> None:
        if not self.slots:
            raise ConfigError("slots must not be empty")
        for v in self.variants:
            if v not in ABLATIONS:
                raise ConfigError(f"variants must be drawn from {ABLATIONS}, got {v!r}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.gbdt_rounds < 0:
            raise ConfigError(f"gbdt_rounds must be >= 0, got {self.gbdt_rounds}")
        if self.gbdt_depth < 0:
            raise ConfigError(f"gbdt_depth must be >= 0, got {self.gbdt_depth}")
        if self.gbdt_shrinkage <= 0:
            raise ConfigError(f"gbdt_shrinkage must be > 0, got {self.gbdt_shrinkage}")
        if self.gbdt_min_leaf < 1:
            raise ConfigError(f"gbdt_min_leaf must be >= 1, got {self.gbdt_min_leaf}")


def parse_slots(text: str) -> list:
    """Parse '2,3,4' and '2-23' style slot lists."""
    slots = []
    for chunk in str(text).split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk[1:]:
            lo, hi = chunk.split("-", 1)
            slots.extend(range(int(lo), int(hi) + 1))
        else:
            slots.append(int(chunk))
    return slots


def parse_variants(text: str) -> list:
    return [v.strip() for v in str(text).split(",") if v.strip()]


_MODEL_FIELDS = {f.name: f.type for f in fields(ModelConfig)}
_INT_KEYS = {name for name, hint in _MODEL_FIELDS.items() if hint == "int"} | {
    "runs", "base_seed", "workers", "gbdt_rounds", "gbdt_depth", "gbdt_min_leaf"}
_FLOAT_KEYS = {name for name, hint in _MODEL_FIELDS.items() if hint == "float"} | {
    "split_ratio", "gbdt_shrinkage"}
_STR_KEYS = {"ablation", "view_mode"}
_LIST_KEYS = {"slots", "variants"}
KNOWN_KEYS = set(_MODEL_FIELDS) | {f.name for f in fields(SweepSettings)}


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines into a typed dict; unknown keys are errors."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown configuration key {key!r}")
        try:
            if key in _LIST_KEYS:
                values[key] = parse_slots(value) if key == "slots" else parse_variants(value)
            elif key in _STR_KEYS:
                values[key] = value
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return values


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def build_model_config(values: dict, **required) -> ModelConfig:
    """Assemble a validated ModelConfig from file values plus overrides."""
    kwargs = {k: v for k, v in values.items() if k in _MODEL_FIELDS}
    kwargs.update(required)
    for name in ("d_in", "seq_len"):
        if name not in kwargs:
            raise ConfigError(f"{name} is required but was not provided")
    config = ModelConfig(**kwargs)
    config.validate()
    return config


def build_sweep_settings(values: dict, **overrides) -> SweepSettings:
    names = {f.name for f in fields(SweepSettings)}
    kwargs = {k: v for k, v in values.items() if k in names}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    settings = SweepSettings(**kwargs)
    settings.validate()
    return settings


def config_to_text(config: ModelConfig) -> str:
    """Canonical, deterministic text form of a model config."""
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in fields(ModelConfig)]
    return "\n".join(lines) + "\n"


def model_config_from_text(text: str) -> ModelConfig:
    values = parse_config_text(text)
    return build_model_config(values)
