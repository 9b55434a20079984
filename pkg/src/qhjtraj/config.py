"""Scenario configuration: YAML tree checked against the published schema.

Schema validation catches shape errors; the semantic pass enforces the
physics-level invariants (a != 0, positive tolerances, grid size) with
messages that name the offending field and constraint.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .errors import ConfigError
from .potentials import (
    PhysicalConstants,
    PotentialSpec,
    free_potential,
    harmonic_potential,
    linear_potential,
    load_tabulated_csv,
    make_grid,
)
from .reduced_action import Microstate

DEFAULT_CHECKS = ["wronskian", "schrodinger", "qshje"]
FREE_ONLY_CHECKS = {
    "eq_free_time",
    "floyd_closed_form",
    "law_divergence",
    "contradiction",
    "rescaling",
}

#: default residual tolerances; config `tolerances:` entries override,
#: and the CLI --tolerance-scale multiplies the effective values.
DEFAULT_TOLERANCES = {
    "wronskian_analytic": 1e-8,
    "wronskian_numeric": 1e-6,
    "schrodinger": 1e-6,
    "qshje_analytic": 1e-10,
    "qshje_numeric": 1e-6,
    "law_agreement": 1e-9,
    "eq_free_time": 1e-8,
    "floyd_closed_form": 1e-6,
    "action_identity": 1e-8,
    "hamiltonian": 1e-10,
    "canonical_velocity": 1e-10,
    "fm_relation_analytic": 1e-5,
    "fm_relation_numeric": 1e-4,
    "gap_identity": 1e-5,
    "law_divergence_floor": 0.05,
    "momentum_match": 1e-10,
    "bd_deviation_analytic": 1e-8,
    "bd_deviation_numeric": 1e-6,
    "contradiction_floor": 0.1,
    "contradiction_solvable": 1e-10,
    "fm_proposal": 1e-5,
    "rescaling_floor": 1e-6,
}


def _schema() -> dict:
    text = (
        importlib.resources.files("qhjtraj") / "schema" / "scenario.schema.json"
    ).read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; `raw` keeps the original tree for the report."""

    raw: dict
    base_dir: Path = field(default_factory=Path)

    # -- typed accessors -------------------------------------------------
    @property
    def name(self) -> str:
        return self.raw.get("name", "scenario")

    def constants(self) -> PhysicalConstants:
        c = self.raw.get("constants", {})
        return PhysicalConstants(hbar=c.get("hbar", 1.0), mass=c.get("mass", 1.0))

    def grid(self) -> np.ndarray:
        g = self.raw["grid"]
        return make_grid(g["x_min"], g["x_max"], g.get("points", 4001))

    def potential(self) -> PotentialSpec:
        g = self.raw["grid"]
        p = self.raw["potential"]
        kind = p["kind"]
        if kind == "free":
            return free_potential(g["x_min"], g["x_max"])
        if kind == "harmonic":
            return harmonic_potential(g["x_min"], g["x_max"], p.get("stiffness", 1.0))
        if kind == "linear":
            return linear_potential(
                g["x_min"], g["x_max"], p.get("slope", 1.0), p.get("offset", 0.0)
            )
        spec = load_tabulated_csv(self.base_dir / p["csv"])
        if spec.x_min > g["x_min"] or spec.x_max < g["x_max"]:
            raise ConfigError("potential.csv: samples must cover [x_min, x_max]")
        return spec

    def microstates(self) -> list[Microstate]:
        return [
            Microstate(
                energy=m["energy"],
                a=m["a"],
                b=m.get("b", 0.0),
                phase=m.get("phase", 0.0),
                t0=m.get("t0", 0.0),
            )
            for m in self.raw["microstates"]
        ]

    @property
    def basis_kind(self) -> str:
        kind = self.raw.get("basis", {}).get("kind", "auto")
        if kind == "auto":
            return "analytic-free" if self.raw["potential"]["kind"] == "free" else "numeric"
        return kind

    @property
    def basis_rescaled(self) -> bool:
        return self.raw.get("basis", {}).get("rescaled", False)

    @property
    def basis_anchor(self) -> str:
        return self.raw.get("basis", {}).get("anchor", "xmin")

    @property
    def laws(self) -> list[str]:
        return self.raw.get("laws", ["bd", "floyd", "xhat"])

    @property
    def trajectory(self) -> dict:
        t = dict(self.raw.get("trajectory", {}))
        t.setdefault("x0", float(self.raw["grid"]["x_min"]))
        t.setdefault("t_span", 1.0)
        t.setdefault("step_tol", 1e-10)
        t.setdefault("cadence", 1e-2)
        return t

    @property
    def stencil(self) -> dict:
        s = dict(self.raw.get("stencil", {}))
        s.setdefault("delta_scale", 1e-6)
        s.setdefault("delta_min", 1e-9)
        s.setdefault("richardson", True)
        return s

    @property
    def transforms(self) -> list[dict]:
        return self.raw.get("transforms", [])

    @property
    def comparison(self) -> dict:
        c = dict(self.raw.get("comparison", {}))
        c.setdefault("x_samples", 25)
        c.setdefault("margin", 0.2)
        return c

    @property
    def checks(self) -> list[str]:
        return self.raw.get("checks", list(DEFAULT_CHECKS))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def output_dir(self):
        return self.raw.get("output_dir")

    def tolerance(self, key: str, scale: float = 1.0) -> float:
        overrides = self.raw.get("tolerances", {})
        if key in overrides:
            return float(overrides[key]) * scale
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}: unknown tolerance key")
        return DEFAULT_TOLERANCES[key] * scale


def _semantic_checks(raw: dict):
    g = raw["grid"]
    if not g["x_max"] > g["x_min"]:
        raise ConfigError("grid.x_max: must exceed grid.x_min")
    if g.get("points", 4001) < 101:
        raise ConfigError("grid.points: must be >= 101")
    for i, m in enumerate(raw["microstates"]):
        if m["a"] == 0:
            raise ConfigError(f"microstates[{i}].a: must be nonzero (a != 0)")
        if m["energy"] < 0 and raw["potential"]["kind"] == "free":
            raise ConfigError(f"microstates[{i}].energy: free-particle energy must be >= 0")
    for key, value in raw.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}: unknown tolerance key")
        if value <= 0:
            raise ConfigError(f"tolerances.{key}: must be positive")
    if raw["potential"]["kind"] == "tabulated" and "csv" not in raw["potential"]:
        raise ConfigError("potential.csv: required for kind 'tabulated'")
    free = raw["potential"]["kind"] == "free"
    for check in raw.get("checks", []):
        if check in FREE_ONLY_CHECKS and not free:
            raise ConfigError(f"checks: '{check}' applies to the free potential only")
    for i, t in enumerate(raw.get("transforms", [])):
        if t["type"] == "general":
            missing = [k for k in ("mu", "nu", "alpha", "beta") if k not in t]
            if missing:
                raise ConfigError(f"transforms[{i}]: general form needs {missing}")
            if t["mu"] * t["beta"] == t["nu"] * t["alpha"]:
                raise ConfigError(
                    f"transforms[{i}]: degenerate (mu*beta must differ from nu*alpha)"
                )
        if t["type"] == "free" and not free:
            raise ConfigError(f"transforms[{i}]: free-form transform needs a free potential")


def validate_config(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as err:
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {err.message}") from err
    _semantic_checks(raw)
    return ScenarioConfig(raw=raw, base_dir=base_dir or Path.cwd())


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: not valid YAML ({err})")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return validate_config(raw, base_dir=path.parent)


def fixture_path(name: str) -> Path:
    """Path of a shipped demo scenario (classical, microstate, contradiction, harmonic)."""
    base = importlib.resources.files("qhjtraj") / "fixtures"
    candidate = base / f"{name}.yaml"
    if not candidate.is_file():
        available = sorted(p.stem for p in base.iterdir() if p.suffix == ".yaml")
        raise ConfigError(f"unknown fixture '{name}'; available: {', '.join(available)}")
    return Path(str(candidate))
