"""Run configuration: JSON schema, validation with field-path diagnostics,
and a canonical fingerprint embedded in every output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional

from .detection import DetectionChain
from .modes import TemporalMode
from .spectra import OpoParams

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "config_fingerprint"]


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    opo1: OpoParams
    opo2: OpoParams
    chain: DetectionChain
    fs: float
    duration: float
    mode: TemporalMode
    repetitions: int
    seed: int
    output_dir: str
    fingerprint: str


def _require(table: Dict[str, Any], key: str, path: str) -> Any:
    if key not in table:
        raise ConfigError(f"{path}{key}: required field missing")
    return table[key]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _check_keys(table: Dict[str, Any], allowed, path: str) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"{path.rstrip('.') or 'config'}: expected an object")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}{sorted(unknown)[0]}: unknown field")


def _parse_opo(table: Any, path: str) -> OpoParams:
    _check_keys(table, ("pump_param", "hwhm", "efficiency", "squeeze_phase"), path)
    try:
        return OpoParams(
            pump_param=_number(_require(table, "pump_param", path), path + "pump_param"),
            hwhm=_number(_require(table, "hwhm", path), path + "hwhm"),
            efficiency=_number(_require(table, "efficiency", path), path + "efficiency"),
            squeeze_phase=_require(table, "squeeze_phase", path))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from exc


def _parse_chain(table: Any, path: str) -> DetectionChain:
    allowed = ("detector_bandwidth", "highpass_cutoff", "electronic_noise_db",
               "adc_rate", "adc_bits")
    _check_keys(table, allowed, path)
    kwargs: Dict[str, Any] = {}
    for key in ("detector_bandwidth", "highpass_cutoff", "adc_rate"):
        if key in table:
            kwargs[key] = _number(table[key], path + key)
    if "electronic_noise_db" in table:
        val = table["electronic_noise_db"]
        kwargs["electronic_noise_db"] = None if val is None else _number(
            val, path + "electronic_noise_db")
    if "adc_bits" in table:
        val = table["adc_bits"]
        kwargs["adc_bits"] = None if val is None else _integer(val, path + "adc_bits")
    try:
        return DetectionChain(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from exc


def _parse_mode(table: Any, path: str) -> TemporalMode:
    if not isinstance(table, dict) or "kind" not in table:
        raise ConfigError(f"{path}kind: required field missing")
    kind = table["kind"]
    try:
        if kind == "square":
            _check_keys(table, ("kind", "duration"), path)
            return TemporalMode.square(_number(_require(table, "duration", path),
                                               path + "duration"))
        if kind in ("one_sided_exp", "double_exp"):
            _check_keys(table, ("kind", "rate", "support"), path)
            rate = _number(_require(table, "rate", path), path + "rate")
            support = _number(_require(table, "support", path), path + "support")
            ctor = (TemporalMode.one_sided_exp if kind == "one_sided_exp"
                    else TemporalMode.double_exp)
            return ctor(rate, support)
        if kind == "tabulated":
            _check_keys(table, ("kind", "samples", "duration"), path)
            samples = _require(table, "samples", path)
            if not isinstance(samples, list) or not samples:
                raise ConfigError(f"{path}samples: expected a non-empty array")
            return TemporalMode.tabulated(
                [_number(v, path + "samples") for v in samples],
                _number(_require(table, "duration", path), path + "duration"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from exc
    raise ConfigError(f"{path}kind: unknown mode kind {kind!r}")


def _canonical_mode(mode: TemporalMode) -> Dict[str, Any]:
    if mode.kind == "square":
        return {"kind": "square", "duration": mode.duration}
    if mode.kind in ("one_sided_exp", "double_exp"):
        return {"kind": mode.kind, "rate": mode.rate, "support": mode.duration}
    return {"kind": "tabulated", "samples": list(mode.samples),
            "duration": mode.duration}


def _canonical_dict(cfg: "RunConfig") -> Dict[str, Any]:
    def opo(p: OpoParams):
        return {"pump_param": p.pump_param, "hwhm": p.hwhm,
                "efficiency": p.efficiency, "squeeze_phase": p.squeeze_phase}

    c = cfg.chain
    return {
        "opo1": opo(cfg.opo1),
        "opo2": opo(cfg.opo2),
        "chain": {
            "detector_bandwidth": c.detector_bandwidth,
            "highpass_cutoff": c.highpass_cutoff,
            "electronic_noise_db": c.electronic_noise_db,
            "adc_rate": c.adc_rate,
            "adc_bits": c.adc_bits,
        },
        "fs": cfg.fs,
        "duration": cfg.duration,
        "mode": _canonical_mode(cfg.mode),
        "repetitions": cfg.repetitions,
        "seed": cfg.seed,
    }


def config_fingerprint(cfg: "RunConfig") -> str:
    """SHA-256 of the canonicalized config (output_dir excluded, so moving
    results does not change identity)."""
    canon = json.dumps(_canonical_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


_TOP_KEYS = ("opo1", "opo2", "chain", "fs", "duration", "mode",
             "repetitions", "seed", "output_dir")


def parse_config(table: Dict[str, Any]) -> RunConfig:
    """Validate a parsed JSON object into a RunConfig."""
    _check_keys(table, _TOP_KEYS, "")
    opo1 = _parse_opo(_require(table, "opo1", ""), "opo1.")
    opo2 = _parse_opo(_require(table, "opo2", ""), "opo2.")
    chain = _parse_chain(table.get("chain", {}), "chain.")
    fs = _number(_require(table, "fs", ""), "fs")
    duration = _number(_require(table, "duration", ""), "duration")
    mode = _parse_mode(_require(table, "mode", ""), "mode.")
    repetitions = _integer(_require(table, "repetitions", ""), "repetitions")
    seed = _integer(_require(table, "seed", ""), "seed")
    output_dir = table.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir: expected a non-empty string")

    if opo1.squeeze_phase == opo2.squeeze_phase:
        raise ConfigError(
            "opo2.squeeze_phase: the two OPOs must squeeze orthogonal quadratures")
    if fs <= 0.0:
        raise ConfigError("fs: must be positive")
    if duration <= 0.0:
        raise ConfigError("duration: must be positive")
    if repetitions < 1:
        raise ConfigError("repetitions: must be at least 1")
    if seed < 0:
        raise ConfigError("seed: must be non-negative")
    if chain.adc_rate > fs * (1.0 + 1e-9):
        raise ConfigError("chain.adc_rate: must not exceed fs")
    if mode.duration > duration:
        raise ConfigError("mode.duration: must not exceed the record duration")
    if int(round(mode.duration * chain.adc_rate)) < 1:
        raise ConfigError("mode.duration: spans no sample at the ADC rate")

    cfg = RunConfig(opo1=opo1, opo2=opo2, chain=chain, fs=fs, duration=duration,
                    mode=mode, repetitions=repetitions, seed=seed,
                    output_dir=output_dir, fingerprint="")
    return replace(cfg, fingerprint=config_fingerprint(cfg))


def load_config(path) -> RunConfig:
    """Read and validate a JSON run configuration file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc}") from exc
    try:
        table = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(table, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    try:
        return parse_config(table)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
