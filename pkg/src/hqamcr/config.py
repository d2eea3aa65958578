"""Experiment configuration: a flat YAML mapping, validated field by field.

Powers are given in dB in the file and converted to linear values here;
everything downstream works with linear quantities.
"""
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
import yaml

__all__ = ["ExperimentConfig", "ConfigError", "validate_config", "load_config", "SWEEP_AXES",
           "db_to_linear", "linear_to_db"]

SWEEP_AXES = ("p_d", "p_f", "alpha0", "lam", "m", "q_avg_db")


def db_to_linear(value_db):
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value):
    return 10.0 * math.log10(value)


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {d}" for d in self.diagnostics))


@dataclass(frozen=True)
class ExperimentConfig:
    sweep_axis: str
    sweep_values: Tuple[float, ...]
    q_avg_db: float
    p_pk_db: Optional[float] = None
    p_avg_db: Optional[float] = None
    constraint: Tuple[str, ...] = ("peak",)
    inner: Tuple[str, ...] = ("exact",)
    csi: str = "statistical"
    sigma_n2: float = 0.01
    sigma_w2: float = 0.5
    sigma_e2: float = 0.0
    prior_busy: float = 0.4
    p_d: float = 0.9
    p_f: float = 0.1
    alpha0: float = 1.0
    alpha1: float = 1.0
    lam: float = 0.5
    m: float = 1.0
    omega_h: float = 1.0
    omega_g: float = 1.0
    upper_bound: bool = False
    method: str = "auto"
    step: float = 1e-3
    tol: float = 1e-7
    max_iter: int = 20000
    silent_threshold: Optional[float] = None
    n_samples: int = 10000
    sample_seed: int = 1
    eval_samples: int = 100000
    eval_seed: int = 2
    seeds: Tuple[int, ...] = (0,)
    link_sim: bool = False
    image: Optional[str] = None
    image_size: int = 64
    n_packets: int = 64
    thr: float = 1.8
    n_upper: Optional[int] = None
    mapping: str = "hqam"
    output: Optional[str] = None

    @property
    def q_avg(self):
        return db_to_linear(self.q_avg_db)

    @property
    def p_pk(self):
        return None if self.p_pk_db is None else db_to_linear(self.p_pk_db)

    @property
    def p_avg(self):
        return None if self.p_avg_db is None else db_to_linear(self.p_avg_db)

    @property
    def prior_idle(self):
        return 1.0 - self.prior_busy

    def at(self, value):
        """Copy with the sweep axis set to ``value``."""
        return replace(self, **{self.sweep_axis: float(value)})


# field -> (kind, check, description); kinds: float, int, bool, str, seq
_PROB = (lambda v: 0.0 <= v <= 1.0, "must lie in [0, 1]")
_POS = (lambda v: v > 0, "must be > 0")
_NONNEG = (lambda v: v >= 0, "must be >= 0")
_ANY = (lambda v: True, "")
_FIELDS = {
    "sigma_n2": ("float", _POS),
    "sigma_w2": ("float", _NONNEG),
    "sigma_e2": ("float", _NONNEG),
    "prior_busy": ("float", _PROB),
    "p_d": ("float", _PROB),
    "p_f": ("float", _PROB),
    "alpha0": ("float", _POS),
    "alpha1": ("float", _POS),
    "lam": ("float", _PROB),
    "m": ("float", (lambda v: v >= 0.5, "must be >= 0.5")),
    "omega_h": ("float", _POS),
    "omega_g": ("float", _POS),
    "q_avg_db": ("float", _ANY),
    "p_pk_db": ("float", _ANY),
    "p_avg_db": ("float", _ANY),
    "upper_bound": ("bool", _ANY),
    "step": ("float", _POS),
    "tol": ("float", _POS),
    "max_iter": ("int", _POS),
    "silent_threshold": ("float", _NONNEG),
    "n_samples": ("int", _POS),
    "sample_seed": ("int", _NONNEG),
    "eval_samples": ("int", _POS),
    "eval_seed": ("int", _NONNEG),
    "link_sim": ("bool", _ANY),
    "image": ("str", _ANY),
    "image_size": ("int", _POS),
    "n_packets": ("int", _POS),
    "thr": ("float", _NONNEG),
    "n_upper": ("int", _NONNEG),
    "output": ("str", _ANY),
}
_CHOICES = {
    "constraint": ("peak", "avg"),
    "inner": ("exact", "lambertw"),
    "csi": ("statistical", "perfect", "imperfect"),
    "method": ("auto", "subgradient", "bracket"),
    "mapping": ("hqam", "qam"),
}
_MULTI = ("constraint", "inner")
_NULLABLE = ("p_pk_db", "p_avg_db", "silent_threshold", "image", "n_upper", "output")


def _key_lines(text):
    """Line number (1-based) of every top-level key."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value if isinstance(k, yaml.ScalarNode)}


def _coerce(kind, value):
    if kind == "bool":
        if not isinstance(value, bool):
            raise TypeError("must be true or false")
        return value
    if isinstance(value, bool):
        raise TypeError(f"must be a {kind}")
    if kind == "float":
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise TypeError("must be a finite number")
        return float(value)
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise TypeError("must be an integer")
        return value
    if not isinstance(value, str):
        raise TypeError("must be a string")
    return value


def _sweep_values(spec):
    if not isinstance(spec, dict) or "axis" not in spec:
        raise TypeError("must be a mapping with 'axis' and either 'values' or 'start'/'stop'/'num'")
    axis = spec["axis"]
    if axis not in SWEEP_AXES:
        raise TypeError(f"axis {axis!r} is not one of {', '.join(SWEEP_AXES)}")
    extra = set(spec) - {"axis", "values", "start", "stop", "num"}
    if extra:
        raise TypeError(f"unknown keys {sorted(extra)}")
    if "values" in spec:
        vals = spec["values"]
        if not isinstance(vals, list) or not vals:
            raise TypeError("'values' must be a non-empty list")
        vals = [_coerce("float", v) for v in vals]
    else:
        try:
            start = _coerce("float", spec["start"])
            stop = _coerce("float", spec["stop"])
            num = _coerce("int", spec["num"])
        except KeyError as exc:
            raise TypeError(f"missing {exc.args[0]!r}") from None
        if num < 1:
            raise TypeError("'num' must be >= 1")
        vals = [float(v) for v in np.linspace(start, stop, num)]
    return axis, tuple(vals)


def validate_config(text):
    """Parse and validate YAML ``text``.

    Raises
    ------
    ConfigError
        With one diagnostic per invalid or missing field, each naming the
        field, its line when known, and the violated bound.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError([f"{where}YAML syntax error: {getattr(exc, 'problem', exc)}"]) from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a key: value mapping"])
    lines = _key_lines(text)
    diags: List[str] = []
    values = {}

    def bad(key, msg):
        line = lines.get(key)
        diags.append(f"{'line %d: ' % line if line else ''}{key}: {msg}")

    for key, value in raw.items():
        if key == "sweep":
            try:
                values["sweep_axis"], values["sweep_values"] = _sweep_values(value)
            except TypeError as exc:
                bad(key, str(exc))
            continue
        if key == "seeds":
            if isinstance(value, int) and not isinstance(value, bool):
                value = [value]
            if not isinstance(value, list) or not value or not all(
                    isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in value):
                bad(key, "must be a non-empty list of non-negative integers")
            else:
                values["seeds"] = tuple(value)
            continue
        if key in _CHOICES:
            items = value if isinstance(value, list) and key in _MULTI else [value]
            if not items or any(v not in _CHOICES[key] for v in items):
                bad(key, f"must be one of {', '.join(_CHOICES[key])}, got {value!r}")
            else:
                values[key] = tuple(items) if key in _MULTI else items[0]
            continue
        if key not in _FIELDS:
            bad(key, "unknown field")
            continue
        if value is None and key in _NULLABLE:
            values[key] = None
            continue
        kind, (check, text_bound) = _FIELDS[key]
        try:
            v = _coerce(kind, value)
        except TypeError as exc:
            bad(key, f"{exc}, got {value!r}")
            continue
        if not check(v):
            bad(key, f"{text_bound}, got {v}")
            continue
        values[key] = v

    if "sweep_axis" not in values and "sweep" not in raw:
        diags.append("sweep: required (exactly one sweep axis)")
    if "q_avg_db" not in raw:
        if values.get("sweep_axis") == "q_avg_db":
            values["q_avg_db"] = values["sweep_values"][0]
        else:
            diags.append("q_avg_db: required")
    constraints = values.get("constraint", ("peak",))
    if "peak" in constraints and values.get("p_pk_db") is None:
        diags.append("p_pk_db: required for constraint 'peak'")
    if "avg" in constraints and values.get("p_avg_db") is None:
        diags.append("p_avg_db: required for constraint 'avg'")
    axis = values.get("sweep_axis")
    if axis is not None and axis != "q_avg_db":
        check = {"p_d": _PROB, "p_f": _PROB, "lam": _PROB, "alpha0": _POS,
                 "m": _FIELDS["m"][1]}[axis]
        for v in values["sweep_values"]:
            if not check[0](v):
                bad("sweep", f"{axis} value {v} {check[1]}")
    if "lambertw" in values.get("inner", ()):
        p_d = values.get("p_d", 0.9)
        p_f = values.get("p_f", 0.1)
        swept = axis in ("p_d", "p_f", "lam")
        if swept or p_d != 1.0 or p_f != 0.0 or values.get("lam", 0.5) != 1.0:
            diags.append("inner: lambertw requires p_d = 1, p_f = 0 and lam = 1 (not swept)")
        if values.get("csi", "statistical") == "statistical":
            diags.append("inner: lambertw applies to instantaneous CSI only")
    if values.get("sigma_e2", 0.0) >= values.get("omega_g", 1.0):
        bad("sigma_e2", "must be smaller than omega_g")
    if diags:
        raise ConfigError(diags)
    return ExperimentConfig(**values)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return validate_config(fh.read())
