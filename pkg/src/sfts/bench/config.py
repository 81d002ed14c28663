"""Experiment configuration: one JSON-serializable dataclass, flags win."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

TASKS = ("setquery", "estimate1d", "estimatehd", "distill", "qsample-bench", "energy-check", "snap")

DEFAULT_PASS_RATE = {
    "setquery": 0.85,
    "estimate1d": 0.80,
    "estimatehd": 0.80,
    "distill": 0.90,
    "qsample-bench": 1.0,
    "energy-check": 1.0,
    "snap": 1.0,
}


@dataclass
class ExperimentConfig:
    task: str = "setquery"
    trials: int = 10
    seed: int = 0
    out: str = "sfts_out"
    timings: bool = False

    # instance parameters
    k: int = 8
    n: int = 1024            # discrete signal length (p ** d)
    p: int = 0               # discrete side; 0 derives p from n and d
    d: int = 1
    horizon: float = 1.0     # time duration T
    eta: float = 1.0         # lattice pitch
    band: float = 64.0       # frequency band limit F
    snr: float = 10.0        # ||x*||_T^2 / ||g||_T^2; inf means noiseless
    eps: float = 0.5
    radius: float = 0.4      # recovery radius D/T in units of eta
    tail_energy: float = 1.0
    mode: str = "accurate"   # estimator flavour: accurate | optimal
    noise: str = "ortho"     # ortho | tones | white | none

    # constant overrides (test ceilings and size constants)
    size_constant: float = 10.0
    noise_ceiling: float = 20.0        # C_g
    ratio_ceiling: float = 50.0        # ceiling for O(1)-error claims
    ortho_energy_constant: float = 10.0
    snap_constant: float = 10.0
    energy_1d_constant: float = 20.0
    sample_budget_constant: float = 64.0
    distill_size_constant: float = 16.0
    distill_eps: float = 0.1
    pass_rate_threshold: float = -1.0  # negative -> per-task default

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.snr <= 0:
            raise ValueError("snr must be positive (use inf for noiseless)")
        if self.p == 0 and self.d >= 1:
            side = round(self.n ** (1.0 / self.d))
            if side**self.d != self.n:
                raise ValueError(f"n={self.n} is not a perfect d={self.d} power; set p explicitly")
            self.p = side
        if self.p**self.d != self.n:
            self.n = self.p**self.d

    @property
    def threshold(self) -> float:
        if self.pass_rate_threshold >= 0:
            return self.pass_rate_threshold
        return DEFAULT_PASS_RATE[self.task]

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data)

    def apply_overrides(self, pairs: list[str]) -> "ExperimentConfig":
        """Apply ``key=value`` strings; values are coerced to the field type."""
        values = dataclasses.asdict(self)
        touched = set()
        for pair in pairs:
            key, _, raw = pair.partition("=")
            if key not in values:
                raise KeyError(f"unknown config field {key!r}")
            touched.add(key)
            current = getattr(self, key)
            if isinstance(current, bool):
                values[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int) and not isinstance(current, bool):
                values[key] = int(raw)
            elif isinstance(current, float):
                values[key] = float(raw)
            else:
                values[key] = raw
        if ("n" in touched or "d" in touched) and "p" not in touched:
            values["p"] = 0  # re-derive the side from n and d
        return ExperimentConfig(**values)
