"""Simulation configuration with the reference parameter set as defaults."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_HZ = 5.9e9

ALGORITHMS = ("DCA", "GreedyUnilateral", "MSTCFA")
INIT_MODES = ("none", "CABP")


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    # scenario
    area: float = 5000.0  # L, side of the square area (m)
    n_nodes: int = 100
    prp_rsu: float = 0.1
    d_ref_min: float = 200.0  # vehicle communication range interval (m)
    d_ref_max: float = 300.0
    rsu_range_factor: float = 2.0
    v_ref_min: float = 20.0  # m/s
    v_ref_max: float = 30.0

    # channel
    p_t_dbm: float = 30.0
    g0_dbi: float = 20.0
    bandwidth_hz: float = 800e6
    n0_dbm_per_mhz: float = -134.0
    alpha_l: float = 2.0
    wavelength: float = SPEED_OF_LIGHT / CARRIER_HZ
    interference: bool = False
    fading: bool = False

    # objective
    alpha: float = 2.0  # multi-hop loss
    beta: float = 0.1
    v_intra: float = 1.0
    v_inter: float = 0.2
    n_max: int = 15
    d_max: int = 2
    zeta: float = 0.5

    # learning
    epsilon: float = 0.1
    epsilon_decay: float = 0.98
    epsilon_floor: float = 1e-3
    greedy: bool = False

    # time
    slots: int = 500
    dt: float = 1.0
    mobility: bool = True

    # experiment
    seed: int = 0
    runs: int = 20
    node_counts: list[int] = field(default_factory=lambda: [30, 60, 100])
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    inits: list[str] = field(default_factory=lambda: ["none"])

    def validate(self) -> "SimConfig":
        positive = ("area", "d_ref_min", "d_ref_max", "bandwidth_hz", "alpha_l",
                    "wavelength", "beta", "rsu_range_factor", "dt")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.n_nodes < 1:
            raise ConfigError("n_nodes must be >= 1")
        if not 0.0 <= self.prp_rsu <= 1.0:
            raise ConfigError("prp_rsu must lie in [0, 1]")
        if self.d_ref_min > self.d_ref_max:
            raise ConfigError("d_ref_min > d_ref_max")
        if not 0 <= self.v_ref_min <= self.v_ref_max:
            raise ConfigError("need 0 <= v_ref_min <= v_ref_max")
        if not self.alpha > 1:
            raise ConfigError("alpha (multi-hop loss) must be > 1")
        if not 0.0 <= self.zeta <= 1.0:
            raise ConfigError("zeta must lie in [0, 1]")
        if self.n_max < 1 or self.d_max < 1:
            raise ConfigError("n_max and d_max must be >= 1")
        if self.v_intra < 0 or self.v_inter < 0:
            raise ConfigError("overhead volumes must be >= 0")
        if not self.greedy and not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0 unless greedy")
        if not 0 < self.epsilon_decay <= 1:
            raise ConfigError("epsilon_decay must lie in (0, 1]")
        if self.slots < 1 or self.runs < 1:
            raise ConfigError("slots and runs must be >= 1")
        if not self.node_counts or any(n < 1 for n in self.node_counts):
            raise ConfigError("node_counts must be non-empty positive integers")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
        for init in self.inits:
            if init not in INIT_MODES:
                raise ConfigError(f"unknown init mode {init!r}; choose from {INIT_MODES}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "SimConfig":
        """Read a YAML or JSON config file (JSON is valid YAML)."""
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping at top level")
        return cls.from_dict(data)
