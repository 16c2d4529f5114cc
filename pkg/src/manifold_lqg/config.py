"""Experiment configuration: a JSON object whose keys are exactly the fields below."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .optimizers import ALGORITHMS

SCENARIOS = ("constrained_compare", "variation_sweep", "unconstrained_sanity")


@dataclass
class ExperimentConfig:
    scenario: str = "constrained_compare"
    n: int = 6
    m: int = 3
    plant_seed: int = 2
    mask_seed: int = 2
    cost_seed: int = 3
    master_seed: int = 4
    target_rho: float = 0.8
    mask_density: float = 0.5
    # a list is only meaningful for the variation_sweep scenario
    variation_factor: float | list = 0.5
    horizon: int = 200
    runs: int = 30
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    comparator_tol: float = 1e-9
    output_dir: str = "results"

    def __post_init__(self):
        self.validate()

    @property
    def factors(self) -> list:
        vf = self.variation_factor
        return [float(v) for v in vf] if isinstance(vf, (list, tuple)) else [float(vf)]

    def validate(self):
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(f"invalid value for '{key}': {msg}", key=key)

        def is_int(v):
            return isinstance(v, int) and not isinstance(v, bool)

        def is_num(v):
            return isinstance(v, (int, float)) and not isinstance(v, bool)

        need(self.scenario in SCENARIOS, "scenario", f"must be one of {SCENARIOS}")
        for key in ("n", "m", "horizon", "runs"):
            need(is_int(getattr(self, key)) and getattr(self, key) >= 1, key, "must be an integer >= 1")
        for key in ("plant_seed", "mask_seed", "cost_seed", "master_seed"):
            need(is_int(getattr(self, key)) and getattr(self, key) >= 0, key, "must be a non-negative integer")
        need(is_num(self.target_rho) and 0 < self.target_rho < 1, "target_rho", "must lie in (0, 1)")
        need(is_num(self.mask_density) and 0 <= self.mask_density <= 1, "mask_density", "must lie in [0, 1]")
        vf = self.variation_factor
        if isinstance(vf, (list, tuple)):
            need(len(vf) > 0 and all(is_num(v) and v >= 0 for v in vf), "variation_factor",
                 "must be a non-negative number or a non-empty list of them")
            need(self.scenario == "variation_sweep" or len(vf) == 1, "variation_factor",
                 "a list of factors requires scenario 'variation_sweep'")
        else:
            need(is_num(vf) and vf >= 0, "variation_factor", "must be non-negative")
        need(isinstance(self.algorithms, (list, tuple)) and len(self.algorithms) > 0
             and all(a in ALGORITHMS for a in self.algorithms), "algorithms",
             f"must be a non-empty list drawn from {ALGORITHMS}")
        need(len(set(self.algorithms)) == len(self.algorithms), "algorithms", "duplicate entries")
        need(is_num(self.comparator_tol) and self.comparator_tol > 0, "comparator_tol", "must be positive")
        need(isinstance(self.output_dir, str) and self.output_dir != "", "output_dir", "must be a path string")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", key="<root>")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config key '{key}'", key=key)
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}", key="<file>") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", key="<file>") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(d["algorithms"])
        return d
