"""Scenario configuration files.

INI-style text with sections; numbers may be written as small arithmetic
expressions (``pi/2``, ``3/2*sqrt(3)``, ``1 - i``).  Example::

    [scenario]
    name = rect-s5
    mode = full-scheme-two

    [source]
    g = 1

    [component.1]
    shape = rect(1, 2, 1, 1.6)
    f = 5

    [wavenumbers]
    k_min = 0.5
    k_max = 20
    count = 20

    [directions]
    count = 20
    arc_start = -pi/2
    arc_stop = pi/2

    [reference]
    z0 = (4, 4)
    tau = 1, -1, i

    [noise]
    type = relative
    level = 0.1
    seed = 7

    [sampling]
    x_lo = -2
    x_hi = 4
    y_lo = -2
    y_hi = 4
    nx = 200
    ny = 200
"""

from __future__ import annotations

import ast
import configparser
import math
import re
from dataclasses import dataclass
from typing import Optional

from .expression import Expression, ExpressionError
from .forward import NoiseSpec, WaveNumberGrid
from .phase_retrieval import check_strengths
from .sampling import SamplingGrid
from .scene import Component, Difference, Disc, Point2, Polygon, Rectangle, SourceModel

MODES = ("forward", "retrieve", "sample-i1", "sample-i2", "full-scheme-one", "full-scheme-two")
NOISE_KINDS = ("none", "relative", "absolute")

_KEYS = {
    "scenario": {"name", "mode", "output"},
    "source": {"g"},
    "component": {"shape", "f"},
    "wavenumbers": {"k_min", "k_max", "count"},
    "directions": {"angles", "count", "arc_start", "arc_stop"},
    "reference": {"z0", "tau"},
    "noise": {"type", "level", "seed"},
    "sampling": {"x_lo", "x_hi", "y_lo", "y_hi", "nx", "ny"},
}
_REQUIRED = ("scenario", "source", "wavenumbers", "directions")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    mode: str
    components: tuple[tuple[str, str], ...]
    g: str
    k_min: float
    k_max: float
    count: int
    angles: tuple[float, ...]
    z0s: tuple[tuple[float, float], ...] = ()
    taus: tuple[complex, ...] = ()
    noise: NoiseSpec = NoiseSpec()
    sampling: Optional[SamplingGrid] = None
    output: Optional[str] = None

    @property
    def grid(self) -> WaveNumberGrid:
        return WaveNumberGrid(self.k_min, self.k_max, self.count)

    def model(self) -> SourceModel:
        return SourceModel(tuple(Component(parse_shape(s), Expression(f)) for s, f in self.components),
                           Expression(self.g))


# --------------------------------------------------------------------------
# value syntax
# --------------------------------------------------------------------------

_NAMES = {"pi": math.pi, "i": 1j}
_FUNCS = {"sqrt": math.sqrt}


def _num(node: ast.AST) -> complex | float:
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _num(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        a, b = _num(node.left), _num(node.right)
        op = node.op
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            if b == 0:
                raise ValueError("division by zero")
            return a / b
        if isinstance(op, ast.Pow):
            return a ** b
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_real(_num(node.args[0])))
    raise ValueError(f"not a number: {ast.unparse(node)!r}")


def _real(v) -> float:
    if isinstance(v, complex):
        if v.imag != 0:
            raise ValueError(f"expected a real number, got {v}")
        v = v.real
    return float(v)


def _parse(text: str) -> ast.AST:
    try:
        return ast.parse(text.strip().replace("^", "**"), mode="eval").body
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text.strip()!r}: {exc.msg}") from None


def parse_real(text: str) -> float:
    return _real(_num(_parse(text)))


def parse_int(text: str) -> int:
    v = parse_real(text)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {text.strip()!r}")
    return int(v)


def parse_complex_list(text: str) -> tuple[complex, ...]:
    node = _parse(text)
    items = node.elts if isinstance(node, ast.Tuple) else [node]
    return tuple(complex(_num(n)) for n in items)


def parse_real_list(text: str) -> tuple[float, ...]:
    node = _parse(text)
    items = node.elts if isinstance(node, ast.Tuple) else [node]
    return tuple(_real(_num(n)) for n in items)


def _pair(node: ast.AST) -> tuple[float, float]:
    if not (isinstance(node, ast.Tuple) and len(node.elts) == 2):
        raise ValueError(f"expected a point (x, y), got {ast.unparse(node)!r}")
    return _real(_num(node.elts[0])), _real(_num(node.elts[1]))


def parse_points(text: str) -> tuple[tuple[float, float], ...]:
    node = _parse(text)
    if isinstance(node, ast.Tuple) and node.elts and all(isinstance(e, ast.Tuple) for e in node.elts):
        return tuple(_pair(e) for e in node.elts)
    return (_pair(node),)


def _shape(node: ast.AST):
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)) or node.keywords:
        raise ValueError(f"expected rect(...), disc(...), polygon(...) or diff(...), got {ast.unparse(node)!r}")
    kind, args = node.func.id, node.args
    if kind == "rect":
        if len(args) != 4:
            raise ValueError("rect takes x_lo, x_hi, y_lo, y_hi")
        return Rectangle(*(_real(_num(a)) for a in args))
    if kind == "disc":
        if len(args) != 3:
            raise ValueError("disc takes cx, cy, r")
        cx, cy, r = (_real(_num(a)) for a in args)
        return Disc(Point2(cx, cy), r)
    if kind == "polygon":
        return Polygon(tuple(Point2(*_pair(a)) for a in args))
    if kind == "diff":
        if len(args) != 2:
            raise ValueError("diff takes an outer and a hole shape")
        return Difference(_shape(args[0]), _shape(args[1]))
    raise ValueError(f"unknown shape {kind!r}")


def parse_shape(text: str):
    return _shape(_parse(text))


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number, and section -> header line."""
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = n
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            index.setdefault((section, m.group(1).strip().lower()), n)
    return index


def _section_kind(name: str) -> str:
    return "component" if re.fullmatch(r"component\.\d+", name) else name


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario; raises ConfigError listing every problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   strict=True, default_section="__defaults__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    lines = _line_index(text)
    errors: list[str] = []

    def err(section, key, msg):
        n = lines.get((section, key)) or lines.get((section, None))
        where = f"line {n}: " if n else ""
        errors.append(f"{where}[{section}]{' ' + key if key else ''}: {msg}")

    for sec in cp.sections():
        kind = _section_kind(sec)
        if kind not in _KEYS:
            err(sec, None, "unknown section")
            continue
        for key in cp[sec]:
            if key not in _KEYS[kind]:
                err(sec, key, "unknown key")
    for sec in _REQUIRED:
        if not cp.has_section(sec):
            errors.append(f"missing section [{sec}]")
    if errors:
        raise ConfigError(errors)

    def get(sec, key, conv, default=None, required=True):
        if not cp.has_option(sec, key):
            if required:
                err(sec, key, "missing")
            return default
        try:
            return conv(cp[sec][key])
        except (ValueError, TypeError, ZeroDivisionError, OverflowError) as exc:
            err(sec, key, str(exc))
            return default

    name = get("scenario", "name", str.strip, "")
    mode = get("scenario", "mode", str.strip, "")
    if mode and mode not in MODES:
        err("scenario", "mode", f"must be one of {', '.join(MODES)}")
    output = get("scenario", "output", str.strip, None, required=False)
    g = get("source", "g", lambda s: Expression(s).text, "1")

    comp_secs = sorted((s for s in cp.sections() if _section_kind(s) == "component"),
                       key=lambda s: int(s.split(".")[1]))
    components = []
    for sec in comp_secs:
        shape_text = get(sec, "shape", lambda s: (parse_shape(s), " ".join(s.split()))[1])
        f_text = get(sec, "f", lambda s: Expression(s).text)
        if shape_text and f_text:
            components.append((shape_text, f_text))
    if not comp_secs:
        errors.append("missing [component.N] section")

    k_min = get("wavenumbers", "k_min", parse_real, 0.0)
    k_max = get("wavenumbers", "k_max", parse_real, 0.0)
    count = get("wavenumbers", "count", parse_int, 0)

    d = "directions"
    if cp.has_option(d, "angles"):
        if any(cp.has_option(d, key) for key in ("count", "arc_start", "arc_stop")):
            err(d, "angles", "give either angles or count/arc_start/arc_stop")
        angles = get(d, "angles", parse_real_list, ())
    else:
        n = get(d, "count", parse_int, 0)
        a0 = get(d, "arc_start", parse_real, 0.0)
        a1 = get(d, "arc_stop", parse_real, 0.0)
        angles = tuple(a0 + j * (a1 - a0) / n for j in range(1, n + 1)) if n and n > 0 else ()
    if not angles:
        err(d, None, "no directions")
    elif len({round(a, 12) for a in angles}) != len(angles):
        err(d, None, "duplicate direction angles")

    has_ref = cp.has_section("reference")
    z0s = get("reference", "z0", parse_points, (), required=False) if has_ref else ()
    taus = get("reference", "tau", parse_complex_list, (), required=False) if has_ref else ()

    noise = NoiseSpec()
    if cp.has_section("noise"):
        kind = get("noise", "type", str.strip, "none")
        if kind not in NOISE_KINDS:
            err("noise", "type", f"must be one of {', '.join(NOISE_KINDS)}")
        level = get("noise", "level", parse_real, 0.0, required=kind not in ("none",))
        seed = get("noise", "seed", parse_int, 0, required=False)
        if level is not None and level < 0:
            err("noise", "level", "must be non-negative")
        if seed is not None and seed < 0:
            err("noise", "seed", "must be non-negative")
        noise = NoiseSpec(kind, float(level or 0.0), int(seed or 0))

    sampling = None
    if cp.has_section("sampling"):
        s = "sampling"
        vals = [get(s, key, parse_real, 0.0) for key in ("x_lo", "x_hi", "y_lo", "y_hi")]
        nx, ny = get(s, "nx", parse_int, 0), get(s, "ny", parse_int, 0)
        try:
            sampling = SamplingGrid(*vals, nx, ny)
        except ValueError as exc:
            err(s, None, str(exc))

    if errors:
        raise ConfigError(errors)

    cfg = ScenarioConfig(name=name, mode=mode, components=tuple(components), g=g,
                         k_min=k_min, k_max=k_max, count=count, angles=tuple(angles),
                         z0s=tuple(z0s), taus=tuple(taus), noise=noise, sampling=sampling,
                         output=output)
    _validate(cfg, err)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate(cfg: ScenarioConfig, err) -> None:
    try:
        cfg.grid
    except ValueError as exc:
        err("wavenumbers", None, str(exc))
    try:
        model = cfg.model()
    except (ValueError, ExpressionError) as exc:
        err("source", None, str(exc))
        model = None
    if not cfg.name:
        err("scenario", "name", "must not be empty")

    mode = cfg.mode
    needs_ref = mode != "sample-i2"
    if needs_ref and not cfg.z0s:
        err("reference", "z0", f"mode {mode} needs a reference point")
    if needs_ref and not cfg.taus:
        err("reference", "tau", f"mode {mode} needs scattering strengths")
    if len(set(cfg.taus)) != len(cfg.taus):
        err("reference", "tau", "duplicate scattering strengths")
    if model is not None:
        for z0 in cfg.z0s:
            if bool(model.contains(*z0)):
                err("reference", "z0", f"{z0} lies inside the source support")
    if mode in ("retrieve", "full-scheme-two"):
        if len(cfg.taus) != 3:
            err("reference", "tau", f"mode {mode} needs exactly three strengths")
        else:
            try:
                check_strengths(cfg.taus)
            except ValueError as exc:
                err("reference", "tau", str(exc))
        if len(cfg.z0s) > 1:
            err("reference", "z0", f"mode {mode} uses a single reference point")
    if mode in ("sample-i1", "full-scheme-one"):
        nonzero = [t for t in cfg.taus if t != 0]
        if 0 not in cfg.taus or len(nonzero) != 1 or len(cfg.taus) != 2:
            err("reference", "tau", f"mode {mode} needs tau = 0 and exactly one non-zero strength")
    if mode.startswith(("sample", "full")) and cfg.sampling is None:
        err("sampling", None, f"mode {mode} needs a [sampling] section")


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------


def _r(v: float) -> str:
    return repr(float(v))


def _c(v: complex) -> str:
    v = complex(v)
    if v.imag == 0:
        return _r(v.real)
    return f"{_r(v.real)} + {_r(v.imag)}*i"


def format_config(cfg: ScenarioConfig) -> str:
    out = ["[scenario]", f"name = {cfg.name}", f"mode = {cfg.mode}"]
    if cfg.output:
        out.append(f"output = {cfg.output}")
    out += ["", "[source]", f"g = {cfg.g}"]
    for n, (shape, f) in enumerate(cfg.components, start=1):
        out += ["", f"[component.{n}]", f"shape = {shape}", f"f = {f}"]
    out += ["", "[wavenumbers]", f"k_min = {_r(cfg.k_min)}", f"k_max = {_r(cfg.k_max)}",
            f"count = {cfg.count}"]
    out += ["", "[directions]", "angles = " + ", ".join(_r(a) for a in cfg.angles)
            + ("," if len(cfg.angles) == 1 else "")]
    if cfg.z0s or cfg.taus:
        out += ["", "[reference]"]
        if cfg.z0s:
            out.append("z0 = " + ", ".join(f"({_r(x)}, {_r(y)})" for x, y in cfg.z0s))
        if cfg.taus:
            out.append("tau = " + ", ".join(_c(t) for t in cfg.taus) + ("," if len(cfg.taus) == 1 else ""))
    if cfg.noise.kind != "none" or cfg.noise.seed:
        out += ["", "[noise]", f"type = {cfg.noise.kind}", f"level = {_r(cfg.noise.level)}",
                f"seed = {cfg.noise.seed}"]
    if cfg.sampling is not None:
        s = cfg.sampling
        out += ["", "[sampling]", f"x_lo = {_r(s.x_lo)}", f"x_hi = {_r(s.x_hi)}",
                f"y_lo = {_r(s.y_lo)}", f"y_hi = {_r(s.y_hi)}", f"nx = {s.nx}", f"ny = {s.ny}"]
    return "\n".join(out) + "\n"
