# src/vortexlab/config.py

"""
Configuration settings for vortexlab.

Module-level values are the documented defaults. A run is described by a
RunConfig, built by parse_config from an optional key=value file and the
command-line flags (flags win). The output directory may also come from the
VORTEXLAB_OUTPUT_DIR environment variable; nothing else is read from the
environment.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
from dotenv import dotenv_values

from vortexlab.errors import ConfigError
from vortexlab.grid import Params

# --- Geometry and physics ---
DEFAULT_L: float = 1.0                 # Half-width of the sample
DEFAULT_K: float = 2.0 / 3.0           # Half-height of the sample
DEFAULT_DELTA: float = 4.0 / 15.0      # Lead half-length (== K: full-side leads, 0: no leads)
DEFAULT_H: float = 0.0                 # Applied magnetic field
DEFAULT_I: float = 0.0                 # Applied current

# --- Discretization ---
DEFAULT_NX: int = 65                   # Nodes in x (odd)
DEFAULT_NY: int = 43                   # Nodes in y (odd)

# --- Eigen-solver ---
DEFAULT_N_EIGS: int = 4
DEFAULT_EIG_METHOD: str = "auto"       # auto | dense | arnoldi
DEFAULT_DENSE_LIMIT: int = 2500        # Free unknowns up to which "auto" goes dense
DEFAULT_EIG_TOL: float = 1e-8
DEFAULT_EIG_MAXITER: int = 5000
DEFAULT_IM_TOL_REL: float = 1e-6       # Real/complex decision scale, relative to ||phi0|| I

# --- Critical current ---
DEFAULT_IC_LOW: float = 0.0
DEFAULT_IC_HIGH: float = 40.0
DEFAULT_IC_REL_WIDTH: float = 1e-3

# --- Sweeps ---
DEFAULT_SWEEP_PARAM: str = "I"         # I | h
DEFAULT_SWEEP_START: float = 0.0
DEFAULT_SWEEP_STOP: float = 120.0
DEFAULT_SWEEP_COUNT: int = 25
DEFAULT_SWEEP_KIND: str = "normal-form"   # normal-form | beta (used by the sweep command)
DEFAULT_OVERLAP_MIN: float = 0.8

# --- Motion law and simulation ---
DEFAULT_PROMINENCE: float = 0.1        # Smallest beta extremum kept, as a fraction of the range of beta
DEFAULT_PERIODS: float = 2.0           # Orbit periods covered by predict/simulate/validate
DEFAULT_TIME_SAMPLES: int = 400
DEFAULT_STRIDE: int = 10               # Steps between recorded frames
DEFAULT_VORTEX_THRESHOLD: float = 0.5
DEFAULT_INIT_SCALE: float = 1e-3       # c in psi0 = c (u1 + u1^dagger)
DEFAULT_VALIDATE_EPS: Tuple[float, ...] = (0.01, 0.02, 0.04)   # eps / Re lambda_1

# --- Output ---
OUTPUT_DIR_ENV: str = "VORTEXLAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR: str = "vortexlab-out"   # Used when neither the flag nor VORTEXLAB_OUTPUT_DIR is set
CACHE_ENABLED: bool = True
DEFAULT_WORKERS: int = 1               # joblib n_jobs for sweeps
FLOAT_FORMAT: str = "%.12e"            # CSV float format

# --- Logging Settings ---
LOG_LEVEL = logging.INFO
LOG_FORMAT: str = '%(asctime)s - %(levelname)s - [%(name)s] %(message)s'
LOG_DATE_FORMAT: str = '%Y-%m-%d %H:%M:%S'

EIG_METHODS = ("auto", "dense", "arnoldi")
SWEEP_PARAMS = ("I", "h")
SWEEP_KINDS = ("normal-form", "beta")
TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


@dataclass(frozen=True)
class RunConfig:
    """Every setting of one command run. Field names are the config-file keys."""

    L: float = DEFAULT_L
    K: float = DEFAULT_K
    delta: float = DEFAULT_DELTA
    h: float = DEFAULT_H
    I: float = DEFAULT_I
    gamma: Optional[float] = None
    eps: Optional[float] = None
    eps_rel: float = 0.01                  # eps / Re lambda_1 when neither gamma nor eps is set
    nx: int = DEFAULT_NX
    ny: int = DEFAULT_NY
    n_eigs: int = DEFAULT_N_EIGS
    eig_method: str = DEFAULT_EIG_METHOD
    dense_limit: int = DEFAULT_DENSE_LIMIT
    eig_tol: float = DEFAULT_EIG_TOL
    eig_maxiter: int = DEFAULT_EIG_MAXITER
    im_tol_rel: float = DEFAULT_IM_TOL_REL
    ic_low: float = DEFAULT_IC_LOW
    ic_high: float = DEFAULT_IC_HIGH
    ic_rel_width: float = DEFAULT_IC_REL_WIDTH
    ic_two_grid: bool = False
    sweep_param: str = DEFAULT_SWEEP_PARAM
    sweep_start: float = DEFAULT_SWEEP_START
    sweep_stop: float = DEFAULT_SWEEP_STOP
    sweep_count: int = DEFAULT_SWEEP_COUNT
    sweep2_param: str = ""
    sweep2_start: float = 0.0
    sweep2_stop: float = 0.0
    sweep2_count: int = 1
    sweep_kind: str = DEFAULT_SWEEP_KIND
    overlap_min: float = DEFAULT_OVERLAP_MIN
    prominence: float = DEFAULT_PROMINENCE
    periods: float = DEFAULT_PERIODS
    time_samples: int = DEFAULT_TIME_SAMPLES
    dt: Optional[float] = None
    t_end: Optional[float] = None
    stride: int = DEFAULT_STRIDE
    y_probe: float = 0.0
    vortex_threshold: float = DEFAULT_VORTEX_THRESHOLD
    init_scale: float = DEFAULT_INIT_SCALE
    seed: int = -1
    validate_eps: Tuple[float, ...] = DEFAULT_VALIDATE_EPS
    output_dir: str = ""                   # Resolved by parse_config
    cache: bool = CACHE_ENABLED
    workers: int = DEFAULT_WORKERS
    dump_fields: bool = False

    @property
    def params(self) -> Params:
        return Params(L=self.L, K=self.K, delta=self.delta, h=self.h, I=self.I, gamma=self.gamma, eps=self.eps)

    def sweep_values(self) -> np.ndarray:
        return np.linspace(self.sweep_start, self.sweep_stop, self.sweep_count)

    def sweep2_values(self) -> np.ndarray:
        if not self.sweep2_param:
            return np.array([])
        return np.linspace(self.sweep2_start, self.sweep2_stop, self.sweep2_count)

    def canonical(self) -> Dict[str, Any]:
        """Settings that determine results, as a plain JSON-ready map."""
        out: Dict[str, Any] = {}
        for f in dataclasses.fields(self):
            if f.name in NON_SEMANTIC_KEYS:
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def with_(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


# Keys that change where or how fast a run happens, not what it computes
NON_SEMANTIC_KEYS = frozenset({"output_dir", "cache", "workers"})

_OPTIONAL_FLOATS = frozenset({"gamma", "eps", "dt", "t_end"})


def config_keys() -> Tuple[str, ...]:
    return tuple(f.name for f in dataclasses.fields(RunConfig))


def _coerce(key: str, raw: Any, default: Any) -> Any:
    """Converts a raw file or flag value to the type of the field's default."""
    if raw is None and key not in _OPTIONAL_FLOATS:
        raise ConfigError(f"'{key}' has no value (expected key=value)")
    text = raw.strip() if isinstance(raw, str) else raw
    try:
        if key in _OPTIONAL_FLOATS:
            if text is None or (isinstance(text, str) and text.lower() in ("", "none", "null")):
                return None
            return float(text)
        if isinstance(default, bool):
            if isinstance(text, bool):
                return text
            low = str(text).lower()
            if low in TRUE_WORDS:
                return True
            if low in FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: '{text}'")
        if isinstance(default, int):
            if isinstance(text, float) and not text.is_integer():
                raise ValueError("not an integer")
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            parts = text.split(",") if isinstance(text, str) else text
            return tuple(float(part) for part in parts if str(part).strip())
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for '{key}': {raw!r} ({e})") from e
    return str(text)


def _validate(cfg: RunConfig) -> None:
    """Raises ConfigError naming the offending key."""
    if cfg.delta > cfg.K:
        raise ConfigError(f"delta must be < K (delta == K selects full-side leads): delta={cfg.delta}, K={cfg.K}")
    for key in ("L", "K"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{key} must be > 0, got {getattr(cfg, key)}")
    for key in ("delta", "h", "I"):
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be >= 0, got {getattr(cfg, key)}")
    if cfg.gamma is not None and cfg.eps is not None:
        raise ConfigError("gamma and eps are mutually exclusive; set only one")
    for key in ("nx", "ny"):
        n = getattr(cfg, key)
        if n < 5 or n % 2 == 0:
            raise ConfigError(f"{key} must be an odd integer >= 5, got {n}")
    for key in ("eig_tol", "im_tol_rel", "ic_rel_width", "eps_rel", "prominence", "periods",
                "vortex_threshold", "init_scale"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{key} must be > 0, got {getattr(cfg, key)}")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError(f"dt must be > 0, got {cfg.dt}")
    if cfg.t_end is not None and cfg.t_end < 0:
        raise ConfigError(f"t_end must be >= 0, got {cfg.t_end}")
    if not 1 <= cfg.n_eigs <= 12:
        raise ConfigError(f"n_eigs must be between 1 and 12, got {cfg.n_eigs}")
    for key in ("eig_maxiter", "dense_limit", "time_samples", "stride", "workers"):
        if getattr(cfg, key) < 1 and not (key == "workers" and cfg.workers == -1):
            raise ConfigError(f"{key} must be >= 1, got {getattr(cfg, key)}")
    if cfg.eig_method not in EIG_METHODS:
        raise ConfigError(f"eig_method must be one of {', '.join(EIG_METHODS)}, got '{cfg.eig_method}'")
    if not 0 < cfg.overlap_min <= 1:
        raise ConfigError(f"overlap_min must be in (0, 1], got {cfg.overlap_min}")
    if not cfg.ic_high > cfg.ic_low >= 0:
        raise ConfigError(f"ic_low/ic_high must satisfy 0 <= ic_low < ic_high, got [{cfg.ic_low}, {cfg.ic_high}]")
    if cfg.sweep_param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep_param must be one of {', '.join(SWEEP_PARAMS)}, got '{cfg.sweep_param}'")
    if cfg.sweep_count < 2 or not cfg.sweep_stop > cfg.sweep_start:
        raise ConfigError(
            f"sweep_start/sweep_stop/sweep_count describe a degenerate range: "
            f"[{cfg.sweep_start}, {cfg.sweep_stop}] x {cfg.sweep_count}"
        )
    if cfg.sweep2_param:
        if cfg.sweep2_param not in SWEEP_PARAMS or cfg.sweep2_param == cfg.sweep_param:
            raise ConfigError(f"sweep2_param must be the other of {', '.join(SWEEP_PARAMS)}, got '{cfg.sweep2_param}'")
        if cfg.sweep2_count < 2 or not cfg.sweep2_stop > cfg.sweep2_start:
            raise ConfigError(
                f"sweep2_start/sweep2_stop/sweep2_count describe a degenerate range: "
                f"[{cfg.sweep2_start}, {cfg.sweep2_stop}] x {cfg.sweep2_count}"
            )
    if cfg.sweep_kind not in SWEEP_KINDS:
        raise ConfigError(f"sweep_kind must be one of {', '.join(SWEEP_KINDS)}, got '{cfg.sweep_kind}'")
    if not cfg.validate_eps or any(not e > 0 for e in cfg.validate_eps):
        raise ConfigError(f"validate_eps must be a non-empty list of positive numbers, got {cfg.validate_eps}")
    if not cfg.output_dir:
        raise ConfigError("output_dir must not be empty")


def _check_output_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"output_dir '{path}' cannot be created: {e}") from e
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output_dir '{path}' is not writable")


def parse_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Builds a validated RunConfig.

    Args:
        path: Optional key=value file (``#`` comments, blank lines ignored).
        overrides: Values from command-line flags; they replace file values.

    Returns:
        The RunConfig with defaults filled in.

    Raises:
        ConfigError: Missing file, unknown key, bad value or violated invariant.
    """
    defaults = RunConfig()
    known = set(config_keys())
    values: Dict[str, Any] = {}

    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file '{path}' does not exist")
        file_values = dotenv_values(path, interpolate=False)
        logging.debug(f"Read {len(file_values)} key(s) from {path}")
        for key, raw in file_values.items():
            if key not in known:
                raise ConfigError(f"unknown config key '{key}' in {path}")
            values[key] = _coerce(key, raw, getattr(defaults, key))

    for key, raw in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")
        if path is not None and key in values:
            logging.debug(f"Flag overrides '{key}' from the config file")
        values[key] = _coerce(key, raw, getattr(defaults, key))

    if not values.get("output_dir"):
        values["output_dir"] = os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR
    cfg = dataclasses.replace(defaults, **values)
    _validate(cfg)
    _check_output_dir(cfg.output_dir)
    return cfg
