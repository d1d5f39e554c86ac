"""Model parameters, unit conventions and validation.

Internal units: densities per km^2, distances in km, powers in watts.
dBm only appears at the config boundary.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    AlphaTooSmall,
    ConditionOneViolated,
    ConfigError,
    DensityNonPositive,
    DomainError,
    InvalidConstant,
    InvalidSimulation,
    NegativeNoise,
    NonPositivePower,
    PowerOrderingViolated,
)


class TierId(enum.Enum):
    MACRO = "M"
    SMALL = "S"


class AssociationCase(enum.IntEnum):
    """(DL tier, UL tier) pairs. CASE3 is infeasible under the power-ratio condition."""

    CASE1 = 1  # DL=Macro, UL=Macro
    CASE2 = 2  # DL=Macro, UL=Small
    CASE3 = 3  # DL=Small, UL=Macro
    CASE4 = 4  # DL=Small, UL=Small

    @property
    def dl_tier(self) -> TierId:
        return TierId.MACRO if self in (AssociationCase.CASE1, AssociationCase.CASE2) else TierId.SMALL

    @property
    def ul_tier(self) -> TierId:
        return TierId.MACRO if self in (AssociationCase.CASE1, AssociationCase.CASE3) else TierId.SMALL


FEASIBLE_CASES = (AssociationCase.CASE1, AssociationCase.CASE2, AssociationCase.CASE4)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    if not watt > 0:
        raise DomainError(f"power must be positive to convert to dBm, got {watt!r}")
    return 10.0 * math.log10(watt) + 30.0


def canonical_ratio(num: float, den: float) -> float:
    """``num/den`` rounded to 12 significant digits.

    Association only ever sees power *ratios*; rounding makes a common
    rescaling of both powers (e.g. +10 dB) give bit-identical ratios instead of
    ratios that differ in the last ulp.
    """
    return float(f"{num / den:.12e}")


@dataclass(frozen=True)
class SystemParams:
    lambda_m: float  # macro BS density, per km^2
    lambda_s: float  # small BS density, per km^2
    p_m: float  # DL powers, W
    p_s: float
    q_m: float  # UL powers, W
    q_s: float
    alpha: float
    noise: float = 0.0  # W; 0 = interference-limited
    bandwidth_w: float = 180e3  # Hz, one LTE resource block
    amp_efficiency_rho: float = 0.35
    circuit_power_pc: float = 0.05  # W

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def _check(p: SystemParams) -> None:
    if not (p.lambda_m > 0 and p.lambda_s > 0):
        raise DensityNonPositive(f"densities must be > 0, got {p.lambda_m}, {p.lambda_s}")
    if not p.alpha > 2:
        raise AlphaTooSmall(f"path-loss exponent must exceed 2, got {p.alpha}")
    if not (p.p_m > 0 and p.p_s > 0 and p.q_m > 0 and p.q_s > 0):
        raise NonPositivePower("transmit powers must be positive")
    if not p.p_s < p.p_m:
        raise PowerOrderingViolated(f"need P_S < P_M, got P_S={p.p_s} W, P_M={p.p_m} W")
    if canonical_ratio(p.q_s, p.q_m) < canonical_ratio(p.p_s, p.p_m):
        raise ConditionOneViolated(
            f"need Q_S/Q_M >= P_S/P_M, got {p.q_s / p.q_m:.6g} < {p.p_s / p.p_m:.6g}"
        )
    if not p.noise >= 0:
        raise NegativeNoise(f"noise power must be >= 0, got {p.noise}")
    if not p.bandwidth_w > 0:
        raise InvalidConstant(f"bandwidth must be > 0, got {p.bandwidth_w}")
    if not 0 < p.amp_efficiency_rho <= 1:
        raise InvalidConstant(f"amplifier efficiency must lie in (0, 1], got {p.amp_efficiency_rho}")
    if not p.circuit_power_pc >= 0:
        raise InvalidConstant(f"circuit power must be >= 0, got {p.circuit_power_pc}")


@dataclass(frozen=True)
class ValidatedParams(SystemParams):
    """SystemParams that passed every model check. Constructed only via validate()."""

    def __post_init__(self):
        _check(self)

    @property
    def dl_ratio(self) -> float:
        """P_S / P_M."""
        return canonical_ratio(self.p_s, self.p_m)

    @property
    def ul_ratio(self) -> float:
        """Q_S / Q_M."""
        return canonical_ratio(self.q_s, self.q_m)

    @property
    def total_density(self) -> float:
        return self.lambda_m + self.lambda_s


def validate(params: SystemParams) -> ValidatedParams:
    if isinstance(params, ValidatedParams):
        return params
    return ValidatedParams(**asdict(params))


def with_changes(params: SystemParams, **changes) -> ValidatedParams:
    return validate(SystemParams(**{**asdict(params), **changes}))


@dataclass(frozen=True)
class SimulationParams:
    drops: int = 10_000
    window_radius: float | None = None  # km; None = derived from the params
    seed: int = 0
    interferer_density: float | None = None  # per km^2; None = lambda_m + lambda_s

    def __post_init__(self):
        if int(self.drops) != self.drops or self.drops < 1:
            raise InvalidSimulation(f"drops must be a positive integer, got {self.drops!r}")
        if self.window_radius is not None and not self.window_radius > 0:
            raise InvalidSimulation(f"window radius must be > 0, got {self.window_radius}")
        if not 0 <= self.seed < 2**64:
            raise InvalidSimulation("seed must be an unsigned 64-bit integer")
        if self.interferer_density is not None and not self.interferer_density > 0:
            raise InvalidSimulation("interferer density must be > 0")

    def interferers(self, params: SystemParams) -> float:
        if self.interferer_density is None:
            return params.lambda_m + params.lambda_s
        return self.interferer_density


def default_params(**overrides) -> ValidatedParams:
    """Two-tier setup used throughout the figures: lambda_S = 10 lambda_M,
    P_M = 46 dBm, P_S = 20 dBm, alpha = 3, [Q_M, Q_S] = [20, 10] dBm."""
    base = SystemParams(
        lambda_m=1.0,
        lambda_s=10.0,
        p_m=dbm_to_watt(46.0),
        p_s=dbm_to_watt(20.0),
        q_m=dbm_to_watt(20.0),
        q_s=dbm_to_watt(10.0),
        alpha=3.0,
    )
    return with_changes(base, **overrides)


# config file -----------------------------------------------------------------

_CONFIG_KEYS = {
    "lambda_m_per_km2",
    "lambda_s_per_km2",
    "p_m_dbm",
    "p_s_dbm",
    "q_m_dbm",
    "q_s_dbm",
    "alpha",
    "noise_dbm",
    "bandwidth_hz",
    "rho",
    "p_c_watt",
    "sim",
}
_OPTIONAL_KEYS = {"noise_dbm", "sim"}
_SIM_KEYS = {"drops", "window_radius_km", "seed", "interferer_density_per_km2"}


def _number(cfg: Mapping[str, Any], key: str) -> float:
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}")
    return float(value)


def params_from_config(cfg: Mapping[str, Any]) -> tuple[ValidatedParams, SimulationParams | None]:
    """Build (params, sim) from a decoded config object.

    Raises ConfigError on schema problems and a ParameterError subclass on
    physically invalid values.
    """
    if not isinstance(cfg, Mapping):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = _CONFIG_KEYS - _OPTIONAL_KEYS - set(cfg)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")

    noise = cfg.get("noise_dbm", "-inf")
    if noise == "-inf" or noise is None:
        noise_w = 0.0
    elif isinstance(noise, (int, float)) and not isinstance(noise, bool):
        noise_w = dbm_to_watt(float(noise))
    else:
        raise ConfigError(f"noise_dbm must be a number or \"-inf\", got {noise!r}")

    params = validate(
        SystemParams(
            lambda_m=_number(cfg, "lambda_m_per_km2"),
            lambda_s=_number(cfg, "lambda_s_per_km2"),
            p_m=dbm_to_watt(_number(cfg, "p_m_dbm")),
            p_s=dbm_to_watt(_number(cfg, "p_s_dbm")),
            q_m=dbm_to_watt(_number(cfg, "q_m_dbm")),
            q_s=dbm_to_watt(_number(cfg, "q_s_dbm")),
            alpha=_number(cfg, "alpha"),
            noise=noise_w,
            bandwidth_w=_number(cfg, "bandwidth_hz"),
            amp_efficiency_rho=_number(cfg, "rho"),
            circuit_power_pc=_number(cfg, "p_c_watt"),
        )
    )

    sim_cfg = cfg.get("sim")
    if sim_cfg is None:
        return params, None
    if not isinstance(sim_cfg, Mapping):
        raise ConfigError("'sim' must be an object")
    unknown = set(sim_cfg) - _SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown sim keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    if "drops" in sim_cfg:
        kwargs["drops"] = int(_number(sim_cfg, "drops"))
    if "seed" in sim_cfg:
        kwargs["seed"] = int(_number(sim_cfg, "seed"))
    if "window_radius_km" in sim_cfg:
        kwargs["window_radius"] = _number(sim_cfg, "window_radius_km")
    if "interferer_density_per_km2" in sim_cfg:
        kwargs["interferer_density"] = _number(sim_cfg, "interferer_density_per_km2")
    return params, SimulationParams(**kwargs)


def load_config(path: str | Path) -> tuple[ValidatedParams, SimulationParams | None]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return params_from_config(cfg)


def config_from_params(params: SystemParams, sim: SimulationParams | None = None) -> dict:
    """Inverse of params_from_config (powers written back in dBm)."""
    cfg = {
        "lambda_m_per_km2": params.lambda_m,
        "lambda_s_per_km2": params.lambda_s,
        "p_m_dbm": watt_to_dbm(params.p_m),
        "p_s_dbm": watt_to_dbm(params.p_s),
        "q_m_dbm": watt_to_dbm(params.q_m),
        "q_s_dbm": watt_to_dbm(params.q_s),
        "alpha": params.alpha,
        "noise_dbm": "-inf" if params.noise == 0 else watt_to_dbm(params.noise),
        "bandwidth_hz": params.bandwidth_w,
        "rho": params.amp_efficiency_rho,
        "p_c_watt": params.circuit_power_pc,
    }
    if sim is not None:
        s = {"drops": sim.drops, "seed": sim.seed}
        if sim.window_radius is not None:
            s["window_radius_km"] = sim.window_radius
        if sim.interferer_density is not None:
            s["interferer_density_per_km2"] = sim.interferer_density
        cfg["sim"] = s
    return cfg


__all__ = [
    "AssociationCase",
    "FEASIBLE_CASES",
    "SimulationParams",
    "SystemParams",
    "TierId",
    "ValidatedParams",
    "canonical_ratio",
    "config_from_params",
    "dbm_to_watt",
    "default_params",
    "load_config",
    "params_from_config",
    "validate",
    "watt_to_dbm",
    "with_changes",
]
