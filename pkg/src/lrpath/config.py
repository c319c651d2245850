"""Run configuration: a flat ``key = value`` file with ``[section]`` headers.

Example::

    [problem]
    name = cauchy
    T = 1

    [grid]
    n = 32, 64, 128, 256
    N_x = 4000

    [solver]
    eps_c = 1e-10

A custom problem sets ``name = custom`` and gives ``V`` (over ``x`` and
``t``) and ``f`` (over ``x``) as arithmetic expressions. ``#`` starts a
comment. Keys are case-sensitive.
"""

from __future__ import annotations

import dataclasses
import inspect
from dataclasses import dataclass, field
from typing import Optional

from .expr import ExprError, compile_expression
from .mesh import RULES
from .monte_carlo import McConfig
from .problems import PROBLEMS, ProblemSpec


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class McBlock:
    K: int
    seed: int = 0
    x0: float = 0.0
    antithetic: bool = False

    def to_mc_config(self) -> McConfig:
        return McConfig(K=self.K, seed=self.seed, x0=self.x0, antithetic=self.antithetic)


@dataclass(frozen=True)
class RunConfig:
    problem: str = "cauchy"
    V: Optional[str] = None
    f: Optional[str] = None
    sigma: Optional[float] = None
    T: Optional[float] = None
    params: dict = field(default_factory=dict)
    n: tuple = (32, 64, 128)
    a_x: float = 2.0
    N_x: int = 4000
    time_rule: str = "trapezoid"
    spatial_rule: str = "rectangle"
    eps_c: float = 1e-10
    r0: int = 4
    r_max: Optional[int] = None
    dense_switch_k: int = 20
    seed: int = 0
    mc: Optional[McBlock] = None
    dense: bool = False
    memory_budget: int = 2**30
    x0: Optional[float] = None
    output: Optional[str] = None
    timings: bool = True

    def validate(self) -> "RunConfig":
        if self.problem == "custom":
            if self.V is None or self.f is None:
                raise ConfigError("custom problem needs both V and f", key="problem")
            if self.sigma is None or self.T is None:
                raise ConfigError("custom problem needs sigma and T", key="problem")
        elif self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from "
                              f"{sorted(PROBLEMS) + ['custom']}", key="name")
        for key in ("sigma", "T", "a_x", "eps_c"):
            v = getattr(self, key)
            if v is not None and not v > 0:
                raise ConfigError(f"must be positive, got {v}", key=key)
        for key in ("N_x", "r0", "memory_budget"):
            if getattr(self, key) < 1:
                raise ConfigError(f"must be >= 1, got {getattr(self, key)}", key=key)
        if self.r_max is not None and self.r_max < 1:
            raise ConfigError(f"must be >= 1, got {self.r_max}", key="r_max")
        if self.dense_switch_k < 0:
            raise ConfigError("must be >= 0", key="dense_switch_k")
        if not self.n or any(k < 1 for k in self.n):
            raise ConfigError(f"steps must be positive integers, got {list(self.n)}", key="n")
        for key in ("time_rule", "spatial_rule"):
            if getattr(self, key) not in RULES:
                raise ConfigError(f"must be one of {list(RULES)}", key=key)
        if self.mc is not None and self.mc.K < 1:
            raise ConfigError("must be >= 1", key="K")
        return self

    def require_doubling(self) -> None:
        ns = list(self.n)
        if any(b != 2 * a for a, b in zip(ns, ns[1:])):
            raise ConfigError(f"n-sweep must double from entry to entry, got {ns}", key="n")

    def build_problem(self) -> ProblemSpec:
        if self.problem == "custom":
            try:
                V = compile_expression(self.V, ("x", "t"))
                f = compile_expression(self.f, ("x",))
            except ExprError as err:
                raise ConfigError(str(err), key="V/f") from None
            return ProblemSpec(lambda x, t: V(x=x, t=t), lambda x: f(x=x),
                               self.sigma, self.T, "custom",
                               params={"V": self.V, "f": self.f})
        factory = PROBLEMS[self.problem]
        accepted = inspect.signature(factory).parameters
        kwargs = dict(self.params)
        for key in kwargs:
            if key not in accepted:
                raise ConfigError(f"problem {self.problem!r} has no parameter {key!r}", key=key)
        if self.sigma is not None:
            kwargs["sigma"] = self.sigma
        if self.T is not None:
            kwargs["T"] = self.T
        try:
            return factory(**kwargs)
        except ValueError as err:
            raise ConfigError(str(err), key="problem") from None


# key -> (section, field, type)
_FLOAT, _INT, _BOOL, _STR, _INTS, _OPT_INT = "float", "int", "bool", "str", "ints", "opt_int"
_SCHEMA = {
    "problem": {"name": ("problem", _STR), "V": ("V", _STR), "f": ("f", _STR),
                "sigma": ("sigma", _FLOAT), "T": ("T", _FLOAT)},
    "grid": {"n": ("n", _INTS), "a_x": ("a_x", _FLOAT), "N_x": ("N_x", _INT),
             "time_rule": ("time_rule", _STR), "spatial_rule": ("spatial_rule", _STR)},
    "solver": {"eps_c": ("eps_c", _FLOAT), "r0": ("r0", _INT), "r_max": ("r_max", _OPT_INT),
               "dense_switch_k": ("dense_switch_k", _INT), "seed": ("seed", _INT),
               "dense": ("dense", _BOOL), "memory_budget": ("memory_budget", _INT)},
    "mc": {"K": ("K", _INT), "seed": ("seed", _INT), "x0": ("x0", _FLOAT),
           "antithetic": ("antithetic", _BOOL)},
    "output": {"x0": ("x0", _FLOAT), "csv": ("output", _STR), "timings": ("timings", _BOOL)},
}
_PROBLEM_PARAMS = {"beta", "a"}
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(kind: str, raw: str, line: int, key: str):
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            return _int(raw)
        if kind == _OPT_INT:
            return None if raw.lower() in ("", "none") else _int(raw)
        if kind == _INTS:
            return tuple(_int(p) for p in raw.split(","))
        if kind == _BOOL:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(f"expected a boolean, got {raw!r}")
    except ValueError as err:
        raise ConfigError(str(err), line, key) from None
    return raw


def _int(raw: str) -> int:
    raw = raw.strip()
    value = float(raw)
    if value != int(value):
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(value)


def parse_config(text: str) -> RunConfig:
    """Parse config text; errors carry the line number and field name."""
    section = None
    values: dict = {}
    mc: dict = {}
    params: dict = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"malformed section header {body!r}", lineno)
            section = body[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if section is None:
            raise ConfigError("key outside any section", lineno, key)
        if (section, key) in seen:
            raise ConfigError("duplicate key", lineno, key)
        seen.add((section, key))
        if section == "problem" and key in _PROBLEM_PARAMS:
            params[key] = _convert(_FLOAT, raw, lineno, key)
            continue
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key in [{section}]", lineno, key)
        name, kind = _SCHEMA[section][key]
        value = _convert(kind, raw, lineno, key)
        if section == "mc":
            mc[name] = value
        else:
            values[name] = value
    if mc:
        if "K" not in mc:
            raise ConfigError("[mc] section needs K", key="K")
        values["mc"] = McBlock(**mc)
    if params:
        values["params"] = params
    return RunConfig(**values).validate()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Text that :func:`parse_config` maps back to ``cfg``; unset optionals are omitted."""
    out = []
    for section, keys in _SCHEMA.items():
        lines = []
        source = cfg.mc if section == "mc" else cfg
        if source is None:
            continue
        for key, (name, _) in keys.items():
            value = getattr(source, name)
            if value is None:
                continue
            lines.append(f"{key} = {_fmt(value)}")
        if section == "problem":
            lines += [f"{k} = {_fmt(float(v))}" for k, v in sorted(cfg.params.items())]
        out.append(f"[{section}]")
        out.extend(lines)
        out.append("")
    return "\n".join(out)


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Replace the non-``None`` entries of ``changes`` and re-validate."""
    changes = {k: v for k, v in changes.items() if v is not None}
    mc_keys = {"K", "mc_seed", "mc_x0", "antithetic"}
    mc_changes = {k: changes.pop(k) for k in list(changes) if k in mc_keys}
    if mc_changes:
        base = cfg.mc or McBlock(K=mc_changes.get("K", 1))
        cfg = dataclasses.replace(cfg, mc=dataclasses.replace(
            base, **{{"mc_seed": "seed", "mc_x0": "x0"}.get(k, k): v
                     for k, v in mc_changes.items()}))
    return dataclasses.replace(cfg, **changes).validate()


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    return parse_config(text)
