"""YAML experiment configuration.

Schema (every block optional; omitted keys take the defaults below)::

    params:       {alpha, beta, delta, epsilon, p, c1, c2, c3, m}
    grid:         {n, L, N}
    noise:        {seed, profile: gaussian|bump, dt}        # dt = noise resolution
    nonlinearity: {kind: canonical|zero, p}
    forcing:      {kind: none|bump, amplitude, radius}
    experiment:   {...}                                    # per-subcommand keys, see EXPERIMENT_DEFAULTS
    output:       {directory, formats: [csv, json]}
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import yaml

from .dynamics import Forcing, System, admissible
from .grid import Grid
from .noise import bump, default_profile
from .nonlin import Nonlinearity
from .params import Params

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "EXPERIMENT_DEFAULTS"]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; carries a list of diagnostics."""

    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("; ".join(self.problems))


EXPERIMENT_DEFAULTS = {
    "simulate": {"t0": 0.0, "t1": 10.0, "record_every": 8, "initial": {"kind": "bump", "amplitude": 1.0,
                                                                     "radius": 2.0},
                 "tol": 0.05, "ensemble": 1, "step": 0.03125},
    "pullback": {"t_schedule": [4, 8, 12, 16, 20, 24], "members": 2, "radius": None, "ensemble": 4,
                 "step": 0.03125, "slack": 0.1},
    "absorb": {"horizon": 40.0, "members": 4, "scale": 10.0, "ensemble": 4, "step": 0.00390625},
    "tails": {"t_schedule": [5, 10, 20], "r_schedule": [2, 4, 6], "eta": 0.1, "ensemble": 4,
              "initial": {"kind": "bump", "amplitude": 1.0, "radius": 2.0}, "members": 2, "step": 0.03125},
    "attractor": {"pullback_times": [8, 12, 16, 20, 24], "members": 3, "radius": None, "shift": 4.0,
                  "keep_last": 3, "factor": 3.0, "step": 0.03125},
    "vitali": {"families": ["truncation", "escaping_bump", "spike"], "csv": None, "p": 4.0,
               "members": 40, "eps_schedule": [0.5, 0.2, 0.1], "threshold_schedule": None},
}

_BLOCKS = ("params", "grid", "noise", "nonlinearity", "forcing", "experiment", "output")
_NOISE_DEFAULTS = {"seed": 0, "profile": "gaussian", "dt": 0.001953125}
_FORCING_DEFAULTS = {"kind": "none", "amplitude": 1.0, "radius": 2.0}
_OUTPUT_DEFAULTS = {"directory": "out", "formats": ["csv", "json"]}


def _merge(defaults: dict, given: dict, where: str, problems: list) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in (given or {}).items():
        if k not in defaults:
            problems.append(f"{where}: unknown key {k!r}")
        elif isinstance(defaults[k], dict) and isinstance(v, dict):
            out[k] = _merge(defaults[k], v, f"{where}.{k}", problems)
        else:
            out[k] = v
    return out


@dataclass
class ExperimentConfig:
    params: Params
    grid: Grid
    noise: dict
    nonlinearity: Nonlinearity
    forcing: dict
    experiment: dict
    output: dict
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, raw: dict | None) -> "ExperimentConfig":
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a mapping")
        problems = [f"unknown block {k!r}" for k in raw if k not in _BLOCKS]
        try:
            params = Params(**{**Params().__dict__, **(raw.get("params") or {})})
        except TypeError as e:
            raise ConfigError(f"params: {e}") from None
        try:
            grid = Grid(**(raw.get("grid") or {}))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"grid: {e}") from None
        nl_raw = {"kind": "canonical", "p": params.p, **(raw.get("nonlinearity") or {})}
        try:
            nl = Nonlinearity(float(nl_raw["p"]), nl_raw["kind"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"nonlinearity: {e}") from None
        extra = set(nl_raw) - {"kind", "p"}
        problems += [f"nonlinearity: unknown key {k!r}" for k in sorted(extra)]
        noise = _merge(_NOISE_DEFAULTS, raw.get("noise"), "noise", problems)
        forcing = _merge(_FORCING_DEFAULTS, raw.get("forcing"), "forcing", problems)
        output = _merge(_OUTPUT_DEFAULTS, raw.get("output"), "output", problems)
        exp_raw = raw.get("experiment") or {}
        experiment = {}
        for sub, dflt in EXPERIMENT_DEFAULTS.items():
            experiment[sub] = _merge(dflt, exp_raw.get(sub), f"experiment.{sub}", problems)
        problems += [f"experiment: unknown subcommand block {k!r}" for k in exp_raw if k not in EXPERIMENT_DEFAULTS]
        if problems:
            raise ConfigError(problems)
        cfg = cls(params, grid, noise, nl, forcing, experiment, output, raw)
        cfg.check()
        return cfg

    def check(self) -> None:
        """Cross-block consistency: admissibility, CFL, step alignment, noise resolution."""
        problems = []
        system = self.system()
        if self.nonlinearity.kind == "canonical":
            problems += admissible(system)
        ndt = self.noise["dt"]
        if not (isinstance(ndt, (int, float)) and ndt > 0 and math.isfinite(ndt)):
            problems.append(f"noise.dt must be positive, got {ndt!r}")
        else:
            for sub, block in self.experiment.items():
                step = block.get("step", "absent")
                if step == "absent":
                    continue
                step = 2 * ndt if step is None else step
                q = step / ndt
                if abs(q - round(q)) > 1e-9 * q or round(q) % 2 or round(q) < 2:
                    problems.append(f"experiment.{sub}.step={step} is not an even multiple of noise.dt={ndt}")
                if step > system.max_dt() * (1 + 1e-12):
                    problems.append(f"experiment.{sub}.step={step} violates CFL (max {system.max_dt()})")
        if self.noise["profile"] not in ("gaussian", "bump"):
            problems.append(f"noise.profile must be gaussian or bump, got {self.noise['profile']!r}")
        if self.forcing["kind"] not in ("none", "bump"):
            problems.append(f"forcing.kind must be none or bump, got {self.forcing['kind']!r}")
        tails = self.experiment["tails"]
        if max(tails["r_schedule"]) > 0.75 * self.grid.L:
            problems.append("experiment.tails.r_schedule exceeds 0.75 * L")
        if problems:
            raise ConfigError(problems)

    # -- derived objects ----------------------------------------------------------

    def system(self) -> System:
        g = None
        if self.forcing["kind"] == "bump":
            g = self.forcing["amplitude"] * bump(self.grid, self.forcing["radius"])
        prof = default_profile(self.grid, self.params.m, self.noise["profile"])
        return System(self.params, self.grid, self.nonlinearity, Forcing(prof, g))

    def step(self, sub: str) -> float:
        s = self.experiment[sub].get("step")
        return 2 * self.noise["dt"] if s is None else float(s)

    @property
    def seed(self) -> int:
        return int(self.noise["seed"])

    def canonical(self) -> dict:
        """Fully resolved configuration as plain data (defaults filled in)."""
        return {
            "params": dict(self.params.__dict__),
            "grid": {"n": self.grid.n, "L": self.grid.L, "N": self.grid.N},
            "noise": self.noise,
            "nonlinearity": {"kind": self.nonlinearity.kind, "p": self.nonlinearity.p},
            "forcing": self.forcing,
            "experiment": self.experiment,
        }

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form; output settings are excluded."""
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"), default=float)
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        out = copy.copy(self)
        out.noise = {**self.noise, "seed": int(seed)}
        return out


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed YAML: {e}") from None
    return ExperimentConfig.from_dict(raw)
