"""Experiment configuration: INI files with one section per mode, plus CLI overrides.

Resolution order (later wins): built-in defaults, ``[experiment]`` and
``[system]`` sections, the section named after the mode, command-line flags.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .systems import SystemSpec, make_system

MODES = ("dist", "cover", "pack", "mdim-b", "mdim-p", "local-entropy", "vp-check", "verify-lemmas")
LEMMA_CHECKS = ("3.2", "3.3", "4.1", "4.2")
SIDES = ("bowen", "packing", "both")

# key -> (parser, default)
_FIELDS: dict[str, tuple[Any, Any]] = {
    "mode": (str, None),
    "seed": (int, None),
    "output": (str, "fk-out"),
    "system": (str, "full-shift-2"),
    "epsilon": ("floats", (0.2, 0.1, 0.05)),
    "n_min": (int, 4),
    "n_max": (int, 12),
    "samples": (int, 300),
    "measure": ("strings", ("uniform",)),
    "m": (int, 2000),
    "eval_points": (int, 100),
    "entropy_n_min": (int, None),
    "entropy_n_max": (int, None),
    "slack": (float, 0.15),
    "side": (str, "bowen"),
    "which": ("strings", LEMMA_CHECKS),
    "trials": (int, 20),
    "x": (str, None),
    "y": (str, None),
    "n": (int, None),
    "distance_mode": (str, "exact"),
    "tol": (float, 1e-6),
}


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int
    system: str
    system_params: Mapping[str, Any]
    epsilon_list: tuple[float, ...]
    n_range: tuple[int, int]
    sample_size: int
    measures: tuple[str, ...]
    output_path: str
    m: int = 2000
    eval_points: int = 100
    entropy_window: tuple[int, int] | None = None
    slack: float = 0.15
    side: str = "bowen"
    which: tuple[str, ...] = LEMMA_CHECKS
    trials: int = 20
    x: str | None = None
    y: str | None = None
    n: int | None = None
    distance_mode: str = "exact"
    tol: float = 1e-6
    source: str = field(default="<flags>", compare=False)

    def make_system(self) -> SystemSpec:
        return make_system(self.system, self.system_params)

    @property
    def measure_window(self) -> tuple[int, int]:
        return self.entropy_window or self.n_range

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        d["system_params"] = dict(sorted(self.system_params.items()))
        for k in ("epsilon_list", "n_range", "measures", "which", "entropy_window"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def _convert(key: str, raw: Any, where: str) -> Any:
    kind = _FIELDS[key][0]
    try:
        if kind == "floats":
            if isinstance(raw, (list, tuple)):
                return tuple(float(v) for v in raw)
            return tuple(float(v) for v in re.split(r"[,\s]+", str(raw).strip()) if v)
        if kind == "strings":
            if isinstance(raw, (list, tuple)):
                return tuple(str(v) for v in raw)
            return tuple(v for v in re.split(r"[,\s]+", str(raw).strip()) if v)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {key} = {raw!r}") from None


def _line_of(path: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def _system_param(raw: str) -> Any:
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def read_config_file(path: str, mode: str | None) -> tuple[dict, dict, str]:
    """Values from an INI file for ``mode`` (or the file's own mode)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values: dict[str, Any] = {}
    params: dict[str, Any] = {}
    known = {"experiment", "system", *MODES}
    for sec in parser.sections():
        if sec not in known:
            raise ConfigError(f"{path}:{_line_of(path, sec, '') or '?'}: unknown section [{sec}]")

    def take(sec: str) -> None:
        for key, raw in parser.items(sec):
            where = f"{path}:{_line_of(path, sec, key)}: [{sec}] {key}"
            norm = key.replace("-", "_")
            if sec == "system" and norm != "name":
                params[key] = _system_param(raw)
                continue
            if sec == "system":
                norm = "system"
            if norm not in _FIELDS:
                raise ConfigError(f"{where}: unknown key")
            values[norm] = _convert(norm, raw, where)

    for sec in ("experiment", "system"):
        if parser.has_section(sec):
            take(sec)
    mode = mode or values.get("mode")
    if mode and parser.has_section(mode):
        take(mode)
    return values, params, mode or ""


def resolve(mode: str | None, config_path: str | None, flags: Mapping[str, Any],
            system_params: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Merge defaults, file values and flags into a validated config."""
    values: dict[str, Any] = {}
    params: dict[str, Any] = {}
    source = "<flags>"
    if config_path:
        values, params, file_mode = read_config_file(config_path, mode)
        mode = mode or file_mode
        source = config_path
    for key, raw in flags.items():
        if raw is not None:
            values[key] = _convert(key, raw, f"--{key.replace('_', '-')}")
    if system_params:
        params.update(system_params)
    mode = mode or values.get("mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    if "seed" not in values:
        raise ConfigError("a seed is required (--seed or 'seed' in [experiment])")
    merged = {k: d for k, (_, d) in _FIELDS.items()}
    merged.update(values)
    return validate(mode, merged, params, source)


def validate(mode: str, v: Mapping[str, Any], params: Mapping[str, Any], source: str) -> ExperimentConfig:
    seed = int(v["seed"])
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    eps = tuple(float(e) for e in v["epsilon"])
    if not eps or any(not (0 < e < 1) or math.isnan(e) for e in eps):
        raise ConfigError("every epsilon must lie in (0, 1)")
    lo, hi = int(v["n_min"]), int(v["n_max"])
    if not 1 <= lo <= hi:
        raise ConfigError("need 1 <= n_min <= n_max")
    window = None
    if v["entropy_n_min"] is not None or v["entropy_n_max"] is not None:
        window = (int(v["entropy_n_min"] or lo), int(v["entropy_n_max"] or hi))
        if not 1 <= window[0] <= window[1]:
            raise ConfigError("need 1 <= entropy_n_min <= entropy_n_max")
    for key in ("samples", "m", "eval_points", "trials"):
        if int(v[key]) < 1:
            raise ConfigError(f"{key} must be positive")
    if v["side"] not in SIDES:
        raise ConfigError(f"side must be one of {', '.join(SIDES)}")
    which = tuple(v["which"])
    if any(w not in LEMMA_CHECKS for w in which) or not which:
        raise ConfigError(f"which must be drawn from {', '.join(LEMMA_CHECKS)}")
    if v["distance_mode"] not in ("exact", "bisection"):
        raise ConfigError("distance_mode must be exact or bisection")
    if mode == "vp-check" and not v["measure"]:
        raise ConfigError("vp-check needs at least one measure")
    if mode == "dist" and (v["x"] is None or v["y"] is None):
        raise ConfigError("dist needs two points (--x and --y)")
    cfg = ExperimentConfig(
        mode=mode, seed=seed, system=str(v["system"]), system_params=dict(sorted(params.items())),
        epsilon_list=eps, n_range=(lo, hi), sample_size=int(v["samples"]),
        measures=tuple(v["measure"]), output_path=str(v["output"]), m=int(v["m"]),
        eval_points=int(v["eval_points"]), entropy_window=window, slack=float(v["slack"]),
        side=str(v["side"]), which=which, trials=int(v["trials"]), x=v["x"], y=v["y"],
        n=None if v["n"] is None else int(v["n"]), distance_mode=str(v["distance_mode"]),
        tol=float(v["tol"]), source=source)
    system = cfg.make_system()  # validates the system block
    top = max(hi, window[1] if window else hi, cfg.n or 0)
    if system.consumes_coordinates and system.required_length(top) > 100_000:
        raise ConfigError("n_max exceeds the truncation budget")
    return cfg
