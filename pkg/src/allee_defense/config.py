"""Run configuration files: flat ``key = value`` lines under bracketed sections.

Example::

    # Table 1 scenario
    [model]
    r = 1
    k = 1
    w = 0.3
    a = 0.6
    b = 0.7
    c = 0.3
    delta = 0.1
    h = 0.2

    [integrator]
    t_end = 2000

Sections: ``[model]`` (required), ``[integrator]``, ``[initial]``,
``[sweep]``, ``[grid]``. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import MISSING, dataclass, fields

from .dynamics import IntegratorConfig
from .model import PARAM_NAMES, ModelParams, State


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class SweepSpec:
    param: str
    lo: float
    hi: float
    steps: int = 201
    hopf_lo: float | None = None
    hopf_hi: float | None = None


@dataclass(frozen=True)
class GridSpec:
    N_lo: float = 0.0
    N_hi: float = 1.0
    P_lo: float = 0.0
    P_hi: float = 1.0
    nN: int = 41
    nP: int = 41


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    integrator: IntegratorConfig = IntegratorConfig()
    initial: State = State(0.5, 0.3)
    sweep: SweepSpec | None = None
    grid: GridSpec | None = None


_MODEL_KEYS = {name: name for name in PARAM_NAMES}
_MODEL_KEYS["k"] = "K"
_INT_FIELDS = {"steps", "nN", "nP", "max_steps"}
SECTIONS = ("model", "integrator", "initial", "sweep", "grid")


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.fullmatch(r"\[(.+)\]", line)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*=", line):
            return n
    return None


def _number(section: str, key: str, raw: str, text: str):
    try:
        if key in _INT_FIELDS:
            return int(raw)
        value = float(raw)
    except ValueError:
        kind = "an integer" if key in _INT_FIELDS else "a number"
        raise ConfigError(f"[{section}] {key} must be {kind}, got {raw!r}", key,
                          _line_of(text, section, key)) from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key} must be finite, got {raw!r}", key, _line_of(text, section, key))
    return value


def _read(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        empty_lines_in_values=False,
        default_section="__defaults__",
    )
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"expected a [section] header before {exc.line.strip()!r}", line=exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], line=exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r} (expected key = value)", line=lineno) from None
    return cp


def _apply_override(cp: configparser.ConfigParser, spec: str) -> tuple[str, str]:
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} must look like section.key=value")
    lhs, value = spec.split("=", 1)
    lhs = lhs.strip()
    section, key = lhs.split(".", 1) if "." in lhs else ("model", lhs)
    if not cp.has_section(section):
        cp.add_section(section)
    cp.set(section, key.strip(), value.strip())
    return section, key.strip()


def _mask_key(text: str, section: str, key: str) -> str:
    n = _line_of(text, section, key)
    if n is None:
        return text
    lines = text.splitlines()
    lines[n - 1] = "#"
    return "\n".join(lines)


def parse_config(text: str, overrides: list[str] | tuple[str, ...] = ()) -> RunConfig:
    """Parse and validate a run configuration; ``overrides`` (``section.key=value``) win over the text."""
    cp = _read(text)
    for spec in overrides:
        section, key = _apply_override(cp, spec)
        # error messages must not point at a file line whose value was overridden
        text = _mask_key(text, section, key)

    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", line=_section_line(text, section))
    if not cp.has_section("model"):
        raise ConfigError("missing [model] section")

    model: dict[str, float] = {}
    for key, raw in cp.items("model"):
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown key {key!r} in [model]", key, _line_of(text, "model", key))
        model[_MODEL_KEYS[key]] = _number("model", key, raw, text)
    missing = [name for name in PARAM_NAMES if name not in model]
    if missing:
        raise ConfigError(f"[model] is missing {', '.join('k' if m == 'K' else m for m in missing)}",
                          missing[0])
    for name in PARAM_NAMES:
        if not model[name] > 0:
            key = "k" if name == "K" else name
            raise ConfigError(f"[model] {key} must be positive, got {model[name]!r}", key,
                              _line_of(text, "model", key) or _line_of(text, "model", name))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = ModelParams(**model)

    integrator = _build(IntegratorConfig, cp, "integrator", text)
    init_vals = _section_values(cp, "initial", ("N0", "P0"), text)
    initial = State(init_vals.get("N0", 0.5), init_vals.get("P0", 0.3))
    if initial.N < 0 or initial.P < 0:
        raise ConfigError(f"[initial] state must lie in the first quadrant, got {tuple(initial)}",
                          "N0" if initial.N < 0 else "P0")

    sweep = None
    if cp.has_section("sweep"):
        param = cp.get("sweep", "param", fallback=None)
        if param is None:
            raise ConfigError("[sweep] needs param = <name>", "param")
        param = _MODEL_KEYS.get(param, param)
        if param not in PARAM_NAMES:
            raise ConfigError(f"[sweep] param must be one of {', '.join(PARAM_NAMES)}, got {param!r}", "param",
                              _line_of(text, "sweep", "param"))
        sweep = _build(SweepSpec, cp, "sweep", text, skip=("param",), extra={"param": param})
        if not 0 < sweep.lo < sweep.hi:
            raise ConfigError(f"[sweep] needs 0 < lo < hi, got lo={sweep.lo!r}, hi={sweep.hi!r}", "lo")
        if sweep.steps < 2:
            raise ConfigError(f"[sweep] steps must be at least 2, got {sweep.steps}", "steps")
        if (sweep.hopf_lo is None) != (sweep.hopf_hi is None):
            raise ConfigError("[sweep] hopf_lo and hopf_hi must be given together", "hopf_lo")
        if sweep.hopf_lo is not None and not 0 < sweep.hopf_lo < sweep.hopf_hi:
            raise ConfigError("[sweep] needs 0 < hopf_lo < hopf_hi", "hopf_lo")

    grid = None
    if cp.has_section("grid"):
        grid = _build(GridSpec, cp, "grid", text)
        if not 0 <= grid.N_lo < grid.N_hi:
            raise ConfigError("[grid] needs 0 <= N_lo < N_hi", "N_lo")
        if not 0 <= grid.P_lo < grid.P_hi:
            raise ConfigError("[grid] needs 0 <= P_lo < P_hi", "P_lo")
        if grid.nN < 2 or grid.nP < 2:
            raise ConfigError("[grid] resolution must be at least 2x2", "nN" if grid.nN < 2 else "nP")

    return RunConfig(params, integrator, initial, sweep, grid)


def _section_line(text: str, section: str) -> int | None:
    for n, raw in enumerate(text.splitlines(), start=1):
        if raw.strip() == f"[{section}]":
            return n
    return None


def _section_values(cp, section, allowed, text, skip=()) -> dict:
    out = {}
    if not cp.has_section(section):
        return out
    for key, raw in cp.items(section):
        if key in skip:
            continue
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{section}]", key, _line_of(text, section, key))
        out[key] = _number(section, key, raw, text)
    return out


def _build(cls, cp, section, text, skip=(), extra=None):
    allowed = tuple(f.name for f in fields(cls) if f.name not in skip)
    values = _section_values(cp, section, allowed, text, skip)
    values.update(extra or {})
    try:
        return cls(**values)
    except TypeError:
        absent = [f.name for f in fields(cls) if f.name not in values and f.default is MISSING]
        raise ConfigError(f"[{section}] is missing {', '.join(absent)}", absent[0] if absent else None) from None
    except ValueError as exc:
        key = next((k for k in allowed if repr(k) in str(exc) or k in str(exc)), None)
        raise ConfigError(str(exc), key, _line_of(text, section, key) if key else None) from None


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def dump_config(cfg: RunConfig) -> str:
    """Serialize ``cfg`` so that ``parse_config(dump_config(cfg)) == cfg``."""
    lines = ["[model]"]
    for name in PARAM_NAMES:
        lines.append(f"{'k' if name == 'K' else name} = {_fmt(getattr(cfg.params, name))}")
    lines += ["", "[integrator]"]
    for f in fields(IntegratorConfig):
        lines.append(f"{f.name} = {_fmt(getattr(cfg.integrator, f.name))}")
    lines += ["", "[initial]", f"N0 = {_fmt(cfg.initial.N)}", f"P0 = {_fmt(cfg.initial.P)}"]
    if cfg.sweep is not None:
        lines += ["", "[sweep]", f"param = {cfg.sweep.param}"]
        for f in fields(SweepSpec):
            v = getattr(cfg.sweep, f.name)
            if f.name != "param" and v is not None:
                lines.append(f"{f.name} = {_fmt(v)}")
    if cfg.grid is not None:
        lines += ["", "[grid]"]
        for f in fields(GridSpec):
            lines.append(f"{f.name} = {_fmt(getattr(cfg.grid, f.name))}")
    return "\n".join(lines) + "\n"
