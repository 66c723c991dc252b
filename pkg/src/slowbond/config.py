"""Experiment configuration read from JSON."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass
from dataclasses import field as dc_field

from .fields import FIELDS, PROFILES, make_field, make_profile
from .pde import CFL

KINDS = (
    "hydro_symmetric",
    "hydro_perturbed",
    "rate_check",
    "invert_check",
    "entropy_check",
    "energy_check",
    "martingale_check",
)

STEP = {"name": "smoothed_step", "params": {"hi": 0.8, "lo": 0.2, "center": 0.5, "width": 0.05}}
BUMP = {"name": "cosine_bump", "params": {"base": 0.5, "amp": 0.3, "center": 0.5, "width": 0.5}}
DRIVE = {"name": "sine_linear", "params": {"amp": 1.0, "wave": 0.3, "freq": 2.0}}

# per-kind defaults; anything given in the JSON overrides these
DEFAULTS = {
    "hydro_symmetric": dict(sizes=[128, 512], m=1024, horizon=0.1, replicas=200,
                            profile=STEP, field=None, eps=1 / 16, tolerance=0.03),
    "hydro_perturbed": dict(sizes=[128, 512], m=1024, horizon=0.1, replicas=200,
                            profile=STEP, field=DRIVE, eps=1 / 16, tolerance=0.05),
    "rate_check": dict(sizes=[], m=1024, horizon=0.05, replicas=20, profile=BUMP,
                       field=DRIVE, tolerance=1e-4),
    "invert_check": dict(sizes=[], m=1024, horizon=0.05, replicas=0, profile=BUMP,
                         field=DRIVE, tolerance=0.05),
    "entropy_check": dict(sizes=[32, 64, 128], m=1024, horizon=0.2, replicas=100,
                          profile=BUMP, field=DRIVE, tolerance=0.1),
    "energy_check": dict(sizes=[], m=1024, horizon=0.1, replicas=50, profile=None,
                         field=None, tolerance=1e-6),
    "martingale_check": dict(sizes=[16], m=0, horizon=0.05, replicas=2000, profile=BUMP,
                             field=DRIVE, tolerance=3.0),
}


@dataclass
class ExperimentConfig:
    kind: str
    sizes: list = dc_field(default_factory=list)
    m: int = 1024
    dt: float | None = None
    horizon: float = 0.1
    replicas: int = 100
    seed: int = 0
    profile: dict | None = None
    field: dict | None = None
    eps: float = 1 / 16
    tolerance: float = 0.0
    options: dict = dc_field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; known: {list(KINDS)}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.replicas < 0 or self.m < 0 or any(int(n) < 2 for n in self.sizes):
            raise ValueError("sizes, grid and replica counts must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.dt is not None:
            if not self.dt > 0:
                raise ValueError("dt must be positive")
            if self.m and self.dt > CFL / self.m ** 2:
                raise ValueError(f"dt={self.dt} violates the stability limit {CFL / self.m ** 2}")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.profile is not None and self.profile["name"] not in PROFILES:
            raise ValueError(f"unknown profile {self.profile['name']!r}")
        if self.field is not None and self.field["name"] not in FIELDS:
            raise ValueError(f"unknown field {self.field['name']!r}")

    def gamma(self):
        p = self.profile
        return None if p is None else make_profile(p["name"], **p.get("params", {}))

    def perturbation(self):
        f = self.field
        return None if f is None else make_field(f["name"], **f.get("params", {}))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        kind = d.get("kind")
        if kind not in KINDS:
            raise ValueError(f"unknown experiment kind {kind!r}; known: {list(KINDS)}")
        base = copy.deepcopy(DEFAULTS[kind])
        base.update(d)
        unknown = set(base) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown configuration keys {sorted(unknown)}")
        return cls(**base)

    @classmethod
    def default(cls, kind: str, **overrides) -> "ExperimentConfig":
        return cls.from_dict({"kind": kind, **overrides})


def load(path) -> list[ExperimentConfig]:
    """A single config object or a list of them."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    items = data if isinstance(data, list) else [data]
    return [ExperimentConfig.from_dict(d) for d in items]
