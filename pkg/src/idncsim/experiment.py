"""Experiment description and its flat key = value config file.

Example file::

    [experiment]
    name = fig2a
    objective = P1
    policies = P1, ContentAwareLossUnawareP1, LossAwareIdnc, LossUnawareIdnc
    n_values = 2, 4, 6, 8, 10
    m_values = 10
    constraints = 0.2
    importance = gamma
    stage1_loss = 0.3, 0.8
    d2d_loss = 0.0, 0.3
    trials = 200
    seed = 1

For ``objective = P1`` the constraints are distortion budgets expressed as a
fraction of each device's total importance; for ``P2`` they are round
deadlines. Unset optional keys are written as empty values.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass

from .errors import ConfigError
from .policies import PolicyKind

SECTION = "experiment"
IMPORTANCE_SOURCES = ("gamma", "uniform", "trace")

P1_POLICIES = ("P1", "ContentAwareLossUnawareP1", "LossAwareIdnc", "LossUnawareIdnc")
P2_POLICIES = ("P2", "ContentAwareLossUnawareP2", "LossAwareIdnc", "LossUnawareIdnc")


@dataclass(frozen=True)
class ExperimentSpec:
    objective: str = "P1"
    policies: tuple = P1_POLICIES
    n_values: tuple = (10,)
    m_values: tuple = (10,)
    constraints: tuple = (0.2,)
    importance: str = "gamma"
    gamma_mean: float = 1.0
    gamma_variance: float = 50.0
    trace_path: str = None
    block_size: int = 10
    stage1_loss: tuple = (0.3, 0.8)
    d2d_loss: tuple = (0.0, 0.3)
    p_norm: float = 2.0
    trials: int = 100
    seed: int = 0
    out: str = None
    max_rounds: int = None
    greedy_clique: bool = False
    name: str = "experiment"

    def __post_init__(self):
        for key in ("policies", "n_values", "m_values", "constraints", "stage1_loss", "d2d_loss"):
            object.__setattr__(self, key, tuple(getattr(self, key)))
        self.validate()

    @property
    def metric_names(self):
        if self.objective == "P1":
            return ("completion_time", "successful_rounds")
        return ("distortion_norm",)

    def validate(self):
        if self.objective not in ("P1", "P2"):
            raise ConfigError("objective must be P1 or P2")
        allowed = P1_POLICIES if self.objective == "P1" else P2_POLICIES
        if not self.policies:
            raise ConfigError("policies must not be empty")
        for pol in self.policies:
            try:
                PolicyKind(pol)
            except ValueError:
                raise ConfigError(f"unknown policy {pol!r}") from None
            if pol not in allowed:
                raise ConfigError(f"policy {pol} does not apply to objective {self.objective}")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("duplicate policy")
        if not self.n_values or any(int(n) != n or n < 2 for n in self.n_values):
            raise ConfigError("n_values: non-empty list of integers >= 2")
        if not self.m_values or any(int(m) != m or m < 1 for m in self.m_values):
            raise ConfigError("m_values: non-empty list of integers >= 1")
        if not self.constraints:
            raise ConfigError("constraints must not be empty")
        if self.objective == "P1":
            if any(not 0 <= c <= 1 for c in self.constraints):
                raise ConfigError("P1 constraints are budget fractions in [0, 1]")
        elif any(int(c) != c or c < 0 for c in self.constraints):
            raise ConfigError("P2 constraints are non-negative integer deadlines")
        if self.importance not in IMPORTANCE_SOURCES:
            raise ConfigError(f"importance must be one of {', '.join(IMPORTANCE_SOURCES)}")
        if self.importance == "gamma" and not (self.gamma_mean > 0 and self.gamma_variance > 0):
            raise ConfigError("gamma mean and variance must be positive")
        if self.importance == "trace":
            if not self.trace_path:
                raise ConfigError("importance = trace needs trace_path")
            if tuple(self.m_values) != (self.block_size,):
                raise ConfigError("with a trace, m_values must equal (block_size,)")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        _check_range("stage1_loss", self.stage1_loss, 0.0, 1.0, inclusive_hi=True)
        _check_range("d2d_loss", self.d2d_loss, 0.0, 1.0, inclusive_hi=False)
        if not self.p_norm >= 1:
            raise ConfigError("p_norm must be >= 1")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be an integer >= 1")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _check_range(key, rng, lo, hi, inclusive_hi):
    if len(rng) != 2:
        raise ConfigError(f"{key} needs exactly two numbers: low, high")
    a, b = rng
    top_ok = b <= hi if inclusive_hi else b < hi
    if not (lo <= a <= b and top_ok):
        raise ConfigError(f"{key} must satisfy {lo} <= low <= high {'<=' if inclusive_hi else '<'} {hi}")


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentSpec)}
_INT_KEYS = {"n_values", "m_values", "block_size", "trials", "seed", "max_rounds"}
_FLOAT_KEYS = {"gamma_mean", "gamma_variance", "p_norm", "stage1_loss", "d2d_loss"}
_LIST_KEYS = {"policies", "n_values", "m_values", "constraints", "stage1_loss", "d2d_loss"}
_OPTIONAL = {"trace_path", "out", "max_rounds"}


def config_keys():
    return list(_FIELDS)


def _fmt_scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_value(key, value):
    if value is None:
        return ""
    if key in _LIST_KEYS:
        return ", ".join(_fmt_scalar(v) for v in value)
    return _fmt_scalar(value)


def _parse_number(key, text, as_int):
    try:
        if as_int:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None


def parse_value(key, text):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    if text == "":
        if key in _OPTIONAL:
            return None
        raise ConfigError(f"{key} must not be empty")
    if key == "greedy_clique":
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"greedy_clique: expected true/false, got {text!r}")
        return low in ("true", "1", "yes")
    if key in _LIST_KEYS:
        parts = [s.strip() for s in text.split(",") if s.strip()]
        if key == "policies":
            return tuple(parts)
        if key == "constraints":
            return tuple(_constraint(p) for p in parts)
        return tuple(_parse_number(key, p, key in _INT_KEYS) for p in parts)
    if key in _INT_KEYS:
        return _parse_number(key, text, True)
    if key in _FLOAT_KEYS:
        return _parse_number(key, text, False)
    return text


def _constraint(text):
    # deadlines stay integers, budget fractions stay floats
    try:
        return int(text)
    except ValueError:
        return _parse_number("constraints", text, False)


def emit_config(spec):
    buf = io.StringIO()
    buf.write(f"[{SECTION}]\n")
    for key in _FIELDS:
        buf.write(f"{key} = {format_value(key, getattr(spec, key))}\n")
    return buf.getvalue()


def parse_config(text, overrides=None):
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config file: {exc}") from None
    if not cp.has_section(SECTION):
        raise ConfigError(f"config file needs an [{SECTION}] section")
    values = {k: parse_value(k, v) for k, v in cp.items(SECTION)}
    for k, v in (overrides or {}).items():
        values[k] = parse_value(k, v) if isinstance(v, str) else v
    try:
        return ExperimentSpec(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)
