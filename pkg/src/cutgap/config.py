"""Run configuration: one declarative text file plus flag overrides.

Config files are `key = value` lines (# comments allowed). All randomness in
a run is derived from the single `seed` by the splitting scheme
rng = numpy.random.default_rng([seed, PURPOSE]) with the purpose codes
below, so sub-runs are independent and reproducible in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

__all__ = ["RunConfig", "parse_config_file", "derive_seed", "SEED_PURPOSE"]

# seed-splitting purpose codes (documented contract, keep stable)
SEED_PURPOSE = {
    "opt_search": 1,
    "sdp_feasibility": 2,
    "ulc_properties": 3,
    "bes_triangle": 4,
    "cut_search": 5,
    "pcp_mc": 6,
    "decode": 7,
    "rounding": 8,
    "cut_mc": 9,
}


def derive_seed(seed: int, purpose: str) -> int:
    """The documented splitting scheme: sub-seed = seed * 1009 + purpose code."""
    return seed * 1009 + SEED_PURPOSE[purpose]


@dataclass
class RunConfig:
    k: int = 2
    eta: float = 0.3
    epsilon: float = 0.3
    t: int = 1
    l_in: int = 8
    window: str = "typical"
    seed: int = 0
    budget_triples: int = 200_000
    budget_samples: int = 100_000
    budget_restarts: int = 10
    budget_labelings: int = 100_000_000
    out: str = "runs"

    def validate(self) -> "RunConfig":
        if not 1 <= self.k <= 5:
            raise ValueError(f"k={self.k} outside [1, 5]")
        if not 0 < self.eta < 0.5:
            raise ValueError(f"eta={self.eta} outside (0, 1/2)")
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon={self.epsilon} outside (0, 1/2)")
        if self.t < 1 or self.t % 2 == 0:
            raise ValueError(f"t={self.t} must be a positive odd integer")
        if self.l_in < 2 or self.l_in % 2:
            raise ValueError(f"l_in={self.l_in} must be even and >= 2")
        if self.window not in ("typical", "none"):
            raise ValueError(f"window={self.window!r} not in {{typical, none}}")
        for name in ("budget_triples", "budget_samples", "budget_restarts",
                     "budget_labelings"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        return self


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config_file(text: str) -> dict:
    """Parse `key = value` lines into a RunConfig kwargs dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        kind = _FIELD_TYPES[key]
        if kind in ("int", int):
            out[key] = int(val)
        elif kind in ("float", float):
            out[key] = float(val)
        else:
            out[key] = val
    return out
