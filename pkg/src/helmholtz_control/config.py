"""Experiment configuration: a sectioned ``key = value`` text format.

Layout::

    [experiment]   name, seed, morozov_delta, noise_epsilon, output_dir, orders
    [source]       a_prime, a_phys, center
    [propagator]   k, eta1, eta2, L
    [medium]       rho, c
    [region:NAME]  type = sector | exterior, geometry keys, target keys, counts
    [synthesis]    wavenumbers, weights, L, n_time, direction      (optional)

Sector keys are ``r_min, r_max, theta_min, theta_max, phi_intervals,
translation``; the exterior region takes ``R``.  Targets use ``target``
(``plane_wave`` or ``zero``), ``target_direction``, ``target_amplitude`` and
``target_k`` (defaults to the propagator wavenumber).  Numbers may be
written as simple arithmetic in ``pi`` (``3*pi/4``).  Vectors are comma
separated and ``phi_intervals`` separates intervals with ``;``.
"""

from __future__ import annotations

import ast
import configparser
import io
import operator
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import NoiseSpec
from .geometry import ExteriorSphereRegion, SectorRegion, SourceSpec, check_configuration
from .propagator import MediumParams, PropagatorConfig
from .solver import Control, TargetField, make_control
from .synthesis import SynthesisSpec

__all__ = [
    "ConfigError",
    "RegionSpec",
    "ExperimentConfig",
    "parse_number",
    "load_config",
    "loads_config",
    "dumps_config",
    "bundled_config",
    "BUNDLED_CONFIGS",
    "bundled_config_path",
]

BUNDLED_CONFIGS = ("baseline", "two_region", "obstacle", "synthesis")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return np.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    raise ConfigError(f"unsupported expression element {ast.dump(node)}")


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or arithmetic in ``pi`` without ``eval``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        tree = ast.parse(text, mode="eval")
        return float(_eval_node(tree.body))
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ConfigError(f"cannot parse number {text!r}: {exc}") from exc


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        return complex(parse_number(text))


def _parse_vector(text: str, n: int | None = 3) -> tuple[float, ...]:
    vals = tuple(parse_number(t) for t in text.split(",") if t.strip())
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} components, got {text!r}")
    return vals


def _parse_intervals(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            lo, hi = _parse_vector(chunk, 2)
            out.append((lo, hi))
    if not out:
        raise ConfigError("phi_intervals is empty")
    return tuple(out)


def _fmt(x) -> str:
    if isinstance(x, complex):
        return repr(x.real) if x.imag == 0 else repr(x)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _fmt_vec(v) -> str:
    return ", ".join(_fmt(x) for x in v)


@dataclass(frozen=True)
class RegionSpec:
    """A named control region, its target and its boundary sampling."""

    name: str
    region: SectorRegion | ExteriorSphereRegion
    target: TargetField
    n_points: int = 2400
    n_azimuthal: int = 200
    n_polar: int = 100

    def build(self) -> Control:
        return make_control(self.name, self.region, self.target, self.n_points,
                            self.n_azimuthal, self.n_polar)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    name: str
    source: SourceSpec
    regions: tuple[RegionSpec, ...]
    propagator: PropagatorConfig
    medium: MediumParams = field(default_factory=MediumParams)
    morozov_delta: float = 1e-3
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    output_dir: str = "out"
    orders: tuple[int, ...] = (15, 30)
    synthesis: SynthesisSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ConfigError("at least one region is required")
        names = [r.name for r in self.regions]
        if len(set(names)) != len(names):
            raise ConfigError("region names must be unique")
        if self.propagator.a_prime != self.source.a_prime:
            raise ConfigError("propagator a_prime differs from the source a_prime")
        if self.propagator.center != self.source.center:
            raise ConfigError("propagator centre differs from the source centre")
        if not self.morozov_delta > 0:
            raise ConfigError("morozov_delta must be positive")

    @property
    def seed(self) -> int:
        return self.noise.seed

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, noise=replace(self.noise, seed=int(seed)))

    def build_controls(self) -> list[Control]:
        return [r.build() for r in self.regions]

    def validate(self) -> None:
        """Raise :class:`GeometryError` if regions hit the source or each other."""
        check_configuration(self.source, [r.region for r in self.regions])

    def synthesis_spec(self) -> SynthesisSpec:
        spec = self.synthesis or SynthesisSpec()
        return replace(spec, medium=self.medium)


def _target_from(sec, k_default: float) -> TargetField:
    kind = sec.get("target", "zero").strip()
    if kind == "zero":
        return TargetField.zero()
    if kind != "plane_wave":
        raise ConfigError(f"unknown target {kind!r}")
    direction = _parse_vector(sec.get("target_direction", "1, 0, 0"))
    amp = _parse_complex(sec.get("target_amplitude", "1"))
    k = parse_number(sec["target_k"]) if "target_k" in sec else k_default
    return TargetField("plane_wave", direction, amp, k)


def _region_from(name: str, sec, k_default: float) -> RegionSpec:
    kind = sec.get("type", "").strip()
    if kind == "sector":
        region = SectorRegion(
            (parse_number(sec["r_min"]), parse_number(sec["r_max"])),
            (parse_number(sec.get("theta_min", "-pi/2")), parse_number(sec.get("theta_max", "pi/2"))),
            _parse_intervals(sec.get("phi_intervals", "0, 2*pi")),
            _parse_vector(sec.get("translation", "0, 0, 0")),
        )
    elif kind == "exterior":
        region = ExteriorSphereRegion(parse_number(sec["R"]))
    else:
        raise ConfigError(f"region {name}: type must be 'sector' or 'exterior', got {kind!r}")
    return RegionSpec(name, region, _target_from(sec, k_default),
                      int(sec.get("n_points", "2400")), int(sec.get("n_azimuthal", "200")),
                      int(sec.get("n_polar", "100")))


def loads_config(text: str) -> ExperimentConfig:
    """Parse configuration text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
        exp, src, prop = cp["experiment"], cp["source"], cp["propagator"]
        med = cp["medium"] if cp.has_section("medium") else {}
        source = SourceSpec(parse_number(src.get("a_prime", "0.01")),
                            parse_number(src.get("a_phys", "0.0105")),
                            _parse_vector(src.get("center", "0, 0, 0")))
        k = parse_number(prop.get("k", "10"))
        propagator = PropagatorConfig(k, source.a_prime, parse_number(prop.get("eta1", "1")),
                                      parse_number(prop.get("eta2", "1")), int(prop.get("L", "30")),
                                      source.center)
        medium = MediumParams(parse_number(med.get("rho", "1.204")),
                              parse_number(med.get("c", "343")))
        regions = tuple(_region_from(s.split(":", 1)[1].strip(), cp[s], k)
                        for s in cp.sections() if s.startswith("region:"))
        noise = NoiseSpec(parse_number(exp.get("noise_epsilon", "1e-3")), int(exp.get("seed", "0")))
        orders = tuple(int(v) for v in exp.get("orders", "15, 30").split(",") if v.strip())
        synthesis = None
        if cp.has_section("synthesis"):
            syn = cp["synthesis"]
            ks = _parse_vector(syn["wavenumbers"], None)
            ws = tuple(_parse_complex(w) for w in syn["weights"].split(",") if w.strip())
            synthesis = SynthesisSpec(ks, ws, int(syn.get("L", "30")), int(syn.get("n_time", "2000")),
                                      _parse_vector(syn.get("direction", "1, 0, 0")), medium)
        return ExperimentConfig(
            name=exp.get("name", "experiment"),
            source=source,
            regions=regions,
            propagator=propagator,
            medium=medium,
            morozov_delta=parse_number(exp.get("morozov_delta", "1e-3")),
            noise=noise,
            output_dir=exp.get("output_dir", "out"),
            orders=orders,
            synthesis=synthesis,
        )
    except ConfigError:
        raise
    except (configparser.Error, KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, KeyError):
            raise ConfigError(f"missing key or section {exc}") from exc
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return loads_config(text)


def dumps_config(config: ExperimentConfig) -> str:
    """Serialize so that ``loads_config(dumps_config(c)) == c``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = {
        "name": config.name,
        "seed": str(config.noise.seed),
        "morozov_delta": _fmt(config.morozov_delta),
        "noise_epsilon": _fmt(config.noise.epsilon),
        "output_dir": config.output_dir,
        "orders": ", ".join(str(L) for L in config.orders),
    }
    s, p = config.source, config.propagator
    cp["source"] = {"a_prime": _fmt(s.a_prime), "a_phys": _fmt(s.a_phys), "center": _fmt_vec(s.center)}
    cp["propagator"] = {"k": _fmt(p.k), "eta1": _fmt(p.eta1), "eta2": _fmt(p.eta2), "L": str(p.L)}
    cp["medium"] = {"rho": _fmt(config.medium.rho), "c": _fmt(config.medium.c)}
    for r in config.regions:
        sec: dict[str, str] = {}
        if isinstance(r.region, SectorRegion):
            g = r.region
            sec.update(type="sector", r_min=_fmt(g.r_range[0]), r_max=_fmt(g.r_range[1]),
                       theta_min=_fmt(g.theta_range[0]), theta_max=_fmt(g.theta_range[1]),
                       phi_intervals="; ".join(_fmt_vec(iv) for iv in g.phi_ranges),
                       translation=_fmt_vec(g.translation))
        else:
            sec.update(type="exterior", R=_fmt(r.region.R))
        t = r.target
        if t.kind == "zero":
            sec["target"] = "zero"
        elif t.kind == "plane_wave":
            sec.update(target="plane_wave", target_direction=_fmt_vec(t.direction),
                       target_amplitude=_fmt(t.amplitude), target_k=_fmt(t.k))
        else:
            raise ConfigError("superposition targets are not representable in config files")
        sec.update(n_points=str(r.n_points), n_azimuthal=str(r.n_azimuthal), n_polar=str(r.n_polar))
        cp[f"region:{r.name}"] = sec
    if config.synthesis is not None:
        y = config.synthesis
        cp["synthesis"] = {"wavenumbers": _fmt_vec(y.wavenumbers),
                           "weights": ", ".join(_fmt(w) for w in y.weights),
                           "L": str(y.L), "n_time": str(y.n_time),
                           "direction": _fmt_vec(y.direction)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def bundled_config(name: str) -> ExperimentConfig:
    """One of the shipped experiment configurations (see ``BUNDLED_CONFIGS``)."""
    if name not in BUNDLED_CONFIGS:
        raise ConfigError(f"unknown bundled config {name!r}; choose from {BUNDLED_CONFIGS}")
    text = resources.files("helmholtz_control").joinpath("configs", f"{name}.ini").read_text()
    return loads_config(text)


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("helmholtz_control").joinpath("configs", f"{name}.ini")))

