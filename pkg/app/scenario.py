"""Config ingestion: the only place dB, dBm and dBsm values are converted."""

import json
import math
from pathlib import Path
from typing import Any

import structlog
from pydantic import ValidationError

from app.errors import ConfigError
from app.models import GainDbConvention, Scenario
from app.schemas import ScenarioConfig

log = structlog.get_logger()

# Baseline parameters (Table 1); alpha_max is swept in the experiments.
BASELINE: dict[str, Any] = {
    "num_antennas": 100,
    "num_repeaters": 50,
    "carrier_hz": 15e9,
    "l_ad_m": 500.0,
    "l_au_m": 100.0,
    "l_a1_m": 250.0,
    "repeater_span_m": 400.0,
    "theta_rad": math.pi / 6,
    "rcs_dbsm": -10.0,
    "noise_repeater_dbm": -124.0,
    "noise_ap_dbm": -110.0,
    "noise_ue_dbm": -110.0,
    "alpha_max_db": 60.0,
    "gamma_ue_req_db": 15.0,
    "rho_max_dbm": 33.0,
}

_ERROR_KINDS = {"extra_forbidden": "unknown_key", "missing": "missing_field"}


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def dbm_to_watts(dbm: float) -> float:
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


def alpha_from_db(db: float, convention: GainDbConvention) -> float:
    if convention is GainDbConvention.power:
        return float(10.0 ** (db / 20.0))
    return float(10.0 ** (db / 10.0))


def validate_config(data: dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        kind = _ERROR_KINDS.get(first["type"], "unit_out_of_range")
        raise ConfigError(f"{kind.replace('_', ' ')}: {key}", kind=kind, key=key) from exc


def load_config(path: Path) -> ScenarioConfig:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", kind="missing_field", path=str(path))
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(
            f"unreadable config file: {path}: {exc}", kind="invalid_value", path=str(path)
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(
            "config file must hold a JSON object", kind="invalid_value", path=str(path)
        )
    log.debug("config_loaded", path=str(path))
    return validate_config(data)


def apply_overrides(config: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    unknown = sorted(set(overrides) - set(ScenarioConfig.model_fields))
    if unknown:
        raise ConfigError(f"unknown key: {unknown[0]}", kind="unknown_key", key=unknown[0])
    if not overrides:
        return config
    return validate_config({**config.model_dump(), **overrides})


def baseline_config() -> ScenarioConfig:
    return validate_config(BASELINE)


def to_scenario(config: ScenarioConfig) -> Scenario:
    n = config.num_repeaters
    if config.spacing_m is not None:
        spacing = config.spacing_m
    else:
        spacing = config.repeater_span_m / n if n > 0 else config.repeater_span_m
    return Scenario(
        num_antennas=config.num_antennas,
        num_repeaters=n,
        carrier_hz=config.carrier_hz,
        l_ad=config.l_ad_m,
        l_au=config.l_au_m,
        l_a1=config.l_a1_m,
        spacing=spacing,
        theta=config.theta_rad,
        rcs_mean=db_to_linear(config.rcs_dbsm),
        rcs_model=config.rcs_model,
        noise_repeater=dbm_to_watts(config.noise_repeater_dbm),
        noise_ap=dbm_to_watts(config.noise_ap_dbm),
        noise_ue=dbm_to_watts(config.noise_ue_dbm),
        alpha_max=alpha_from_db(config.alpha_max_db, config.gain_db_convention),
        gamma_ue_req=db_to_linear(config.gamma_ue_req_db),
        rho_max=dbm_to_watts(config.rho_max_dbm),
        nulling=config.nulling,
    )
