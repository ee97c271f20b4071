"""Run configuration: built-in defaults < JSON config file < command-line flags.

The defaults mirror the outdoor simulation table (7 GHz carrier, 300 m x
300 m area, 16 m transmitter, 1.5 m receivers, 15000 receivers, 30 dB
pruning threshold, 57.76 ns LOS window, 1 W transmit power).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SceneSection:
    size: float = 300.0
    buildings: int = 40
    height_min: float = 6.0
    height_max: float = 30.0
    side_min: float = 10.0
    side_max: float = 30.0
    min_gap: float = 4.0
    tx_clearance: float = 10.0
    seed: int | None = None


@dataclass(frozen=True)
class GenerateSection:
    tx_x: float | None = None  # None: scene centre
    tx_y: float | None = None
    tx_height: float = 16.0
    rx_height: float = 1.5
    receivers: int = 15000
    carrier_frequency_hz: float = 7e9
    tx_power_w: float = 1.0
    max_reflection_order: int = 2
    delta_th_db: float = 30.0
    epsilon_tau_s: float = 57.76e-9
    workers: int = 1
    seed: int | None = None


@dataclass(frozen=True)
class SplitSection:
    model_subset_size: int = 1000
    train_fraction: float = 0.8
    seed: int | None = None


@dataclass(frozen=True)
class ModelSection:
    models: tuple[str, ...] = ("lr", "svr", "dtr")
    svr_c: float = 1.0
    svr_epsilon: float = 0.1
    svr_gamma: float | None = None
    svr_tol: float = 1e-3
    svr_max_iter: int = 100000
    dtr_max_depth: int | None = 8
    dtr_min_samples_leaf: int = 5

    def hyper(self, name: str) -> dict:
        if name == "svr":
            return {"C": self.svr_c, "epsilon": self.svr_epsilon, "gamma": self.svr_gamma,
                    "tol": self.svr_tol, "max_iter": self.svr_max_iter}
        if name == "dtr":
            return {"max_depth": self.dtr_max_depth, "min_samples_leaf": self.dtr_min_samples_leaf}
        return {}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    scene: SceneSection = field(default_factory=SceneSection)
    generate: GenerateSection = field(default_factory=GenerateSection)
    split: SplitSection = field(default_factory=SplitSection)
    model: ModelSection = field(default_factory=ModelSection)

    def stage_seed(self, stage: str) -> int:
        s = getattr(self, stage).seed
        return self.seed if s is None else s

    def tx_position(self) -> tuple[float, float, float]:
        g = self.generate
        x = self.scene.size / 2 if g.tx_x is None else g.tx_x
        y = self.scene.size / 2 if g.tx_y is None else g.tx_y
        return (float(x), float(y), float(g.tx_height))

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "RunConfig":
        s, g, sp, m = self.scene, self.generate, self.split, self.model
        checks = [
            (s.size > 0, "scene.size must be > 0"),
            (s.buildings >= 0, "scene.buildings must be >= 0"),
            (0 < s.height_min <= s.height_max, "scene heights must satisfy 0 < min <= max"),
            (0 < s.side_min <= s.side_max, "scene sides must satisfy 0 < min <= max"),
            (g.receivers > 0, "generate.receivers must be > 0"),
            (g.tx_height > 0 and g.rx_height >= 0, "antenna heights must be positive"),
            (g.carrier_frequency_hz > 0, "generate.carrier_frequency_hz must be > 0"),
            (g.tx_power_w > 0, "generate.tx_power_w must be > 0"),
            (g.max_reflection_order >= 0, "generate.max_reflection_order must be >= 0"),
            (g.delta_th_db >= 0, "generate.delta_th_db must be >= 0"),
            (g.epsilon_tau_s >= 0, "generate.epsilon_tau_s must be >= 0"),
            (g.workers >= 1, "generate.workers must be >= 1"),
            (0 < sp.train_fraction < 1, "split.train_fraction must lie in (0, 1)"),
            (sp.model_subset_size >= 2, "split.model_subset_size must be >= 2"),
            (set(m.models) <= {"lr", "svr", "dtr"} and len(m.models) > 0,
             "model.models must be a non-empty subset of lr, svr, dtr"),
            (m.svr_c > 0 and m.svr_epsilon >= 0, "SVR needs C > 0 and epsilon >= 0"),
            (m.dtr_min_samples_leaf >= 1, "model.dtr_min_samples_leaf must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self


def _merge(obj, doc: dict, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where or 'config'}: expected an object")
    known = {f.name: f for f in fields(obj)}
    updates = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"unknown config key {where + key!r}")
        current = getattr(obj, key)
        if is_dataclass(current):
            updates[key] = _merge(current, value, f"{where}{key}.")
        elif isinstance(current, tuple):
            updates[key] = tuple(value.split(",")) if isinstance(value, str) else tuple(value)
        else:
            updates[key] = value
    return replace(obj, **updates)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a validated config from an optional JSON file plus overrides.

    ``overrides`` maps ``"section.key"`` (or ``"seed"``) to values; ``None``
    values are ignored so unset command-line flags fall through.
    """
    cfg = RunConfig()
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = _merge(cfg, doc, "")
    nested: dict = {}
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        parts = dotted.split(".")
        node = nested
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    cfg = _merge(cfg, nested, "")
    return cfg.validate()
