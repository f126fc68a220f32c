"""Run configuration: YAML document plus command-line overrides.

One document drives a whole run.  Top-level keys mirror RunConfig fields;
the integrity, sigma, and discriminator sections mirror their parameter
dataclasses field by field.  Unknown keys are rejected so typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .integrity import IntegrityParams
from .planner import DEFAULT_NODE_SPACING_M, DEFAULT_SPEED_MPS
from .pseudorange import DiscriminatorConfig, SigmaModel, SignalConfig


class ConfigError(ValueError):
    """Run configuration cannot be parsed or fails validation."""


@dataclass(frozen=True)
class RunConfig:
    scene_path: str | None = None
    start_node: str | None = None
    target_node: str | None = None
    departure_epoch_s: float = 0.0
    speed_mps: float = DEFAULT_SPEED_MPS
    node_spacing_m: float | None = DEFAULT_NODE_SPACING_M
    candidate_mode: str = "k_shortest"  # or "named"
    k_candidates: int = 10
    integrity: IntegrityParams = field(default_factory=IntegrityParams)
    sigma: SigmaModel = field(default_factory=SigmaModel)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    gps_max_bounces: int = 1
    lte_max_bounces: int = 2
    lte_loss_threshold_db: float = 130.0
    receiver_clock_bias_s: float = 0.0
    output_dir: str = "out"
    noise_seed: int | None = None
    jobs: int = 1
    dump_rays: bool = False

    def signal_config(self) -> SignalConfig:
        return SignalConfig(
            sigma=self.sigma,
            discriminator=self.discriminator,
            gps_max_bounces=self.gps_max_bounces,
            lte_max_bounces=self.lte_max_bounces,
            lte_loss_threshold_db=self.lte_loss_threshold_db,
            receiver_clock_bias_s=self.receiver_clock_bias_s,
            noise_seed=self.noise_seed,
        )


def _build_section(cls, raw: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where} section: {exc}") from exc


_SECTION_TYPES = {
    "integrity": IntegrityParams,
    "sigma": SigmaModel,
    "discriminator": DiscriminatorConfig,
}


def parse_run_config(raw: dict) -> RunConfig:
    """Build a RunConfig from a parsed YAML mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a mapping")
    kwargs = {}
    scalar_fields = {
        f.name for f in fields(RunConfig) if f.name not in _SECTION_TYPES
    }
    for key, value in raw.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        elif key in scalar_fields:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown run config key {key!r}")
    try:
        cfg = RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc
    if cfg.candidate_mode not in ("k_shortest", "named"):
        raise ConfigError(
            f"candidate_mode must be 'k_shortest' or 'named', got {cfg.candidate_mode!r}"
        )
    if cfg.k_candidates < 1:
        raise ConfigError("k_candidates must be >= 1")
    if cfg.speed_mps <= 0:
        raise ConfigError("speed_mps must be > 0")
    if cfg.node_spacing_m is not None and cfg.node_spacing_m <= 0:
        raise ConfigError("node_spacing_m must be > 0 or null")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return cfg


def load_run_config(path: str | Path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse run config {path}: {exc}") from exc
    return parse_run_config(raw if raw is not None else {})


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Replace fields with any non-None override values."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **updates) if updates else cfg
