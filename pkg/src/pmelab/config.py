"""Experiment configuration: parsing, validation, canonical serialisation."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError
from .exact import (BarenblattParams, barenblatt_cell_averages, barenblatt_eval,
                    gaussian_heat)
from .exponents import violated_conditions
from .field import Grid
from .solver import PMEProblem

INITIAL_KINDS = ("barenblatt", "gaussian", "cosine", "sine", "bump")


class ConfigError(ValueError):
    """Configuration fails validation; ``details`` is machine readable."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    problem: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    probe: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    refinement: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    seed: int = 0

    FIELDS = ("name", "problem", "grid", "probe", "exponents", "refinement", "output", "seed")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}",
                              {"unknown_keys": sorted(unknown)})
        return cls(**copy.deepcopy({k: data[k] for k in cls.FIELDS if k in data}))

    def to_dict(self) -> dict:
        return copy.deepcopy({k: getattr(self, k) for k in self.FIELDS})

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @property
    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    # -- derived objects ---------------------------------------------------

    @property
    def m(self) -> float:
        return float(self.problem.get("m", 2.0))

    @property
    def d(self) -> int:
        return int(self.problem.get("d", 1))

    def validate(self) -> dict:
        """Raise ConfigError on invalid input; return the admissibility record."""
        p = self.problem
        if "m" not in p:
            raise ConfigError("problem.m is required", {"missing": "problem.m"})
        if self.m < 1.0:
            raise ConfigError("problem.m must be >= 1", {"m": self.m})
        if self.d not in (1, 2):
            raise ConfigError("problem.d must be 1 or 2", {"d": self.d})
        kind = p.get("initial", {}).get("kind", "barenblatt")
        if kind not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial kind {kind!r}", {"initial.kind": kind})
        b = p.get("boundary", "dirichlet0")
        if b not in ("oracle", "dirichlet0", "periodic"):
            raise ConfigError(f"unknown boundary {b!r}", {"boundary": b})
        if b == "oracle" and kind not in ("barenblatt", "gaussian"):
            raise ConfigError("oracle boundary needs an exact solution (barenblatt or gaussian)",
                              {"boundary": b, "initial.kind": kind})
        g = self.grid
        for key in ("n", "lo", "hi", "t0", "T"):
            if key not in g:
                raise ConfigError(f"grid.{key} is required", {"missing": f"grid.{key}"})
        if not g["hi"] > g["lo"] or not g["T"] > g["t0"]:
            raise ConfigError("grid extents must be increasing", {"grid": g})
        record = {"checked": False}
        ex = self.exponents
        if ex.get("p") is not None and ex.get("q") is not None:
            if not 1.0 < self.m < 2.0:
                raise ConfigError("integrability gate needs 1 < m < 2", {"m": self.m})
            bad = violated_conditions(float(ex["p"]), float(ex["q"]), self.m, self.d,
                                      float(ex.get("gamma", 1.0)))
            record = {"checked": True, "p": ex["p"], "q": ex["q"], "violations": bad}
            if bad:
                raise ConfigError("integrability conditions violated: " + "; ".join(bad),
                                  {"violations": bad})
        return record

    def make_grid(self, n: int | None = None) -> Grid:
        g = self.grid
        return Grid.box(self.d, int(n or g["n"]), float(g["lo"]), float(g["hi"]),
                        t0=float(g["t0"]), T=float(g["T"]),
                        dt=None if g.get("dt") is None else float(g["dt"]))

    def barenblatt(self) -> BarenblattParams:
        ini = self.problem.get("initial", {})
        return BarenblattParams(m=self.m, d=self.d, M=float(ini.get("M", 1.0)),
                                t_offset=float(ini.get("t_offset", 0.0)))

    def exact_solution(self):
        """Callable ``u(x, t)`` when the initial kind has a closed form, else None."""
        ini = self.problem.get("initial", {})
        kind = ini.get("kind", "barenblatt")
        if kind == "barenblatt":
            prm = self.barenblatt()
            return lambda x, t: barenblatt_eval(prm, np.asarray(x).reshape(-1, self.d), t)
        if kind == "gaussian" and self.m == 1.0:
            A = float(ini.get("amplitude", 1.0))
            s0 = float(ini.get("t_init", 1.0))
            t0 = float(self.grid["t0"])
            return lambda x, t: gaussian_heat(x, t - t0, s0, A)
        return None

    def make_problem(self, grid: Grid) -> PMEProblem:
        ini = self.problem.get("initial", {})
        kind = ini.get("kind", "barenblatt")
        t0 = grid.t0
        if kind == "barenblatt":
            prm = self.barenblatt()
            u0 = barenblatt_cell_averages(prm, grid, t0)
        elif kind == "gaussian":
            A = float(ini.get("amplitude", 1.0))
            s0 = float(ini.get("t_init", 1.0))
            u0 = lambda x: gaussian_heat(x, 0.0, s0, A)
        elif kind in ("cosine", "sine"):
            A = float(ini.get("amplitude", 0.5))
            L = 0.5 * (grid.hi - grid.lo)
            mid = grid.lo + L
            trig = np.cos if kind == "cosine" else np.sin
            fac = 0.5 if kind == "cosine" else 1.0

            def u0(x):
                y = (np.asarray(x) - mid) / L
                return A * np.prod(trig(fac * np.pi * y), axis=-1)
        else:  # bump
            A = float(ini.get("amplitude", 1.0))
            w = float(ini.get("width", 1.0))
            c = np.asarray(ini.get("center", [0.0] * self.d), float)

            def u0(x):
                r2 = np.sum((np.asarray(x) - c) ** 2, axis=-1) / (w * w)
                return A * np.maximum(1.0 - r2, 0.0) ** 2
        b = self.problem.get("boundary", "dirichlet0")
        if b == "oracle":
            exact = self.exact_solution()
            if exact is None:
                raise ConfigError("no exact solution available for oracle boundary")
            b = exact
        return PMEProblem(m=self.m, initial=u0, f=self.problem.get("source"), boundary=b)

    def times(self, grid: Grid) -> np.ndarray:
        return np.linspace(grid.t0, grid.T, int(self.grid.get("frames", 11)))


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("pmelab").joinpath("configs").iterdir()
                  if p.name.endswith(".json"))


def load_config(ref: str) -> ExperimentConfig:
    """Load a config from a path or a bundled name."""
    path = Path(ref)
    if path.exists():
        text = path.read_text()
    else:
        res = resources.files("pmelab").joinpath("configs", f"{ref}.json")
        if not res.is_file():
            raise FileNotFoundError(ref)
        text = res.read_text()
    try:
        return ExperimentConfig.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", {"json_error": str(exc)}) from exc
