"""Problem configuration files: YAML key tree, schema validation, object construction.

Every error raised while loading carries the file name and the line of the
offending key, e.g. ``demo.yaml:14: material: missing required key 'sigma_f'``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .elasticity import LoadData
from .exceptions import LcfShapeError, ValidationError
from .expressions import as_field_function
from .geometry import BaselineDesign, DeformationMap, build_baseline
from .material import MaterialParams
from .optimize import DesignProblem, OptimizationConfig
from .thermal import RobinData

__all__ = ["ConfigError", "ProblemConfig", "load_config", "parse_config"]


class ConfigError(ValidationError):
    """Schema or value error in a configuration file (CLI exit code 2)."""


class _Map(dict):
    """Mapping node that remembers where it and each of its keys start."""

    line: int = 0
    key_lines: dict


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads "1e5" as a string; accept exponent floats without a dot.
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9_]+)[eE][-+]?[0-9]+$"),
    list("-+0123456789."),
)


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Map()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            err = ConfigError(f"duplicate key {key!r}")
            err.line = key_node.start_mark.line + 1
            raise err
        out[key] = loader.construct_object(value_node, deep=True)
        out.key_lines[key] = key_node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)

_NUM = (int, float)

# block -> key -> (accepted types, required, default)
_SCHEMA = {
    "geometry": {
        "outer_radius": (_NUM, True, None),
        "hole_center": (list, False, [0.0, 0.0]),
        "hole_radius": (_NUM, True, None),
        "ext_radius": (_NUM, True, None),
        "resolution": (_NUM, True, None),
        "dim": (int, False, 2),
        "thickness": (_NUM, False, None),
        "n_modes": (int, False, 4),
        "K": (_NUM, False, 10.0),
        "det_floor": (_NUM, False, 0.1),
        "vol_tol": (_NUM, False, 1e-3),
        "theta": (list, False, None),
    },
    "material": {
        "E": (_NUM, True, None),
        "nu": (_NUM, False, None),
        "lam": (_NUM, False, None),
        "mu": (_NUM, False, None),
        "rho_cte": (_NUM, True, None),
        "k_cond": (_NUM, True, None),
        "K_hard": (_NUM, True, None),
        "n_hard": (_NUM, True, None),
        "sigma_f": (_NUM, True, None),
        "eps_f": (_NUM, True, None),
        "b_exp": (_NUM, True, None),
        "c_exp": (_NUM, True, None),
        "Q_act": (_NUM, True, None),
        "T0": (_NUM, True, None),
        "units": (str, False, "MPa"),
        "rtol": (_NUM, False, 1e-6),
    },
    "loads": {
        "T_e": ((str, *_NUM), True, None),
        "eta": ((str, *_NUM), True, None),
        "f": (list, False, None),
        "g": (list, False, None),
        "traction_bound": (_NUM, False, None),
    },
    "reliability": {
        "m": (_NUM, True, None),
        "t_grid": (list, False, [1e2, 1e3, 1e4, 1e5]),
        "include_dirichlet": (bool, False, True),
    },
    "optimizer": {
        "simplex_scale": (_NUM, False, 0.02),
        "max_evaluations": (int, False, 200),
        "w_volume": (_NUM, False, 1e5),
        "w_det": (_NUM, False, 1e3),
        "w_budget": (_NUM, False, 1e-2),
        "tol": (_NUM, False, 1e-6),
        "xtol": (_NUM, False, 1e-4),
        "restarts": (int, False, 3),
        "seed": (int, False, 0),
        "initial": (list, False, None),
    },
    "sample": {
        "t_max": (_NUM, False, None),
        "replications": (int, False, 1000),
        "seed": (int, False, 0),
    },
    "diagnose": {
        "n_shapes": (int, False, 50),
        "amplitude": (_NUM, False, 0.02),
        "seed": (int, False, 0),
        "max_attempts": (int, False, 20),
    },
    "numerics": {
        "solver": (str, False, "cg"),
        "threads": (int, False, 1),
    },
    "output": {
        "directory": (str, False, "out"),
        "formats": (list, False, ["csv", "json"]),
        "gnuplot": (bool, False, True),
    },
}
_REQUIRED_BLOCKS = ("geometry", "material", "loads", "reliability")


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    """Validated configuration plus the objects built from it."""

    source: str
    blocks: dict
    design: BaselineDesign
    material: MaterialParams
    robin: RobinData
    loads: LoadData
    template: DeformationMap
    theta: np.ndarray
    optimizer: OptimizationConfig
    digest: str
    _mesh: list = field(default_factory=list, repr=False)

    def block(self, name) -> dict:
        return self.blocks[name]

    @property
    def baseline_mesh(self):
        if not self._mesh:
            g = self.blocks["geometry"]
            try:
                self._mesh.append(build_baseline(self.design, g["resolution"], dim=g["dim"], thickness=g["thickness"]))
            except LcfShapeError as exc:
                raise ConfigError(f"{self.source}:{self.blocks['geometry'].line}: geometry: {exc}") from None
        return self._mesh[0]

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.blocks["reliability"]["t_grid"], dtype=float)

    def problem(self) -> DesignProblem:
        g = self.blocks["geometry"]
        return DesignProblem(
            design=self.design,
            baseline_mesh=self.baseline_mesh,
            template=self.template,
            material=self.material,
            robin=self.robin,
            loads=self.loads,
            include_dirichlet=self.blocks["reliability"]["include_dirichlet"],
            det_floor=g["det_floor"],
            vol_tol=g["vol_tol"],
            solver=self.blocks["numerics"]["solver"],
        )


def _err(source, line, block, msg):
    where = f"{source}:{line}: " if line else f"{source}: "
    return ConfigError(f"{where}{block + ': ' if block else ''}{msg}")


def _validate_block(source, name, raw, parent_line):
    schema = _SCHEMA[name]
    if raw is None:
        raw = _Map()
        raw.line, raw.key_lines = parent_line, {}
    if not isinstance(raw, dict):
        raise _err(source, parent_line, name, "expected a mapping of keys")
    out = _Map()
    out.line, out.key_lines = raw.line, dict(raw.key_lines)
    for key, value in raw.items():
        line = raw.key_lines.get(key, raw.line)
        if key not in schema:
            raise _err(source, line, name, f"unknown key {key!r}")
        types = schema[key][0]
        types = types if isinstance(types, tuple) else (types,)
        ok = isinstance(value, types) and (bool in types or not isinstance(value, bool))
        if not ok and not (value is None and not schema[key][1]):
            raise _err(source, line, name, f"key {key!r} has wrong type {type(value).__name__}")
        if isinstance(value, float) and not math.isfinite(value):
            raise _err(source, line, name, f"key {key!r} must be finite")
        out[key] = value
    for key, (_, required, default) in schema.items():
        if key not in out:
            if required:
                raise _err(source, parent_line, name, f"missing required key {key!r}")
            out[key] = default
    return out


def parse_config(text: str, source: str = "<config>") -> ProblemConfig:
    """Validate a YAML document and build the problem objects it describes."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except ConfigError as exc:
        raise _err(source, getattr(exc, "line", 0), "", str(exc)) from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        raise _err(source, line, "", f"invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise _err(source, 1, "", "top level must be a mapping of blocks")
    for key in doc:
        if key not in _SCHEMA:
            raise _err(source, doc.key_lines[key], "", f"unknown block {key!r}")
    for key in _REQUIRED_BLOCKS:
        if key not in doc:
            raise _err(source, 1, "", f"missing required block {key!r}")
    blocks = {name: _validate_block(source, name, doc.get(name), doc.key_lines.get(name, 1)) for name in _SCHEMA}

    def build(name, fn, key=None):
        line = blocks[name].key_lines.get(key, blocks[name].line)
        try:
            return fn()
        except (LcfShapeError, TypeError, ValueError) as exc:
            raise _err(source, line, name, str(exc)) from None

    g = blocks["geometry"]
    design = build(
        "geometry",
        lambda: BaselineDesign(g["outer_radius"], tuple(map(float, g["hole_center"])), g["hole_radius"], g["ext_radius"]),
    )
    m = blocks["material"]
    r = blocks["reliability"]
    build("reliability", lambda: _check_weibull_shape(r["m"]), "m")
    build("reliability", lambda: _check_reliability(r), "t_grid")

    def make_material():
        common = {k: float(m[k]) for k in ("rho_cte", "k_cond", "K_hard", "n_hard", "sigma_f", "eps_f", "b_exp", "c_exp", "Q_act", "T0", "rtol")}
        common.update(units=m["units"], m_weib=float(r["m"]))
        if m["nu"] is not None:
            if m["lam"] is not None or m["mu"] is not None:
                raise ValidationError("give either 'nu' or both 'lam' and 'mu', not both")
            return MaterialParams.from_engineering(float(m["E"]), float(m["nu"]), **common)
        for key in ("lam", "mu"):
            if m[key] is None:
                raise ValidationError(f"missing required key {key!r} (or give 'nu')")
        return MaterialParams(lam=float(m["lam"]), mu=float(m["mu"]), E=float(m["E"]), **common)

    material = build("material", make_material)
    L = blocks["loads"]
    dim = g["dim"]
    for key in ("T_e", "eta", "f", "g"):
        if L[key] is not None:
            build("loads", lambda: as_field_function(L[key], vector=key in ("f", "g")), key)
    robin = build("loads", lambda: RobinData(L["eta"], L["T_e"], material.k_cond))

    def make_loads():
        zero = ["0"] * dim
        f = [str(v) for v in (L["f"] or zero)]
        gg = [str(v) for v in (L["g"] or zero)]
        if len(f) != dim or len(gg) != dim:
            raise ValidationError(f"f and g need {dim} components")
        return LoadData(tuple(f), tuple(gg), L["traction_bound"])

    loads = build("loads", make_loads)
    template = build("geometry", lambda: DeformationMap.fourier(design, n_modes=g["n_modes"], K=float(g["K"])))
    n = len(template.basis)

    def coeffs(values, what):
        if values is None:
            return np.zeros(n)
        arr = np.asarray(values, dtype=float)
        if arr.shape != (n,):
            raise ValidationError(f"{what} needs {n} coefficients, got {arr.size}")
        return arr

    theta = build("geometry", lambda: coeffs(g["theta"], "theta"))
    o = blocks["optimizer"]

    def make_opt():
        init = coeffs(o["initial"], "initial")
        kw = {k: v for k, v in o.items() if k != "initial"}
        return OptimizationConfig(initial=tuple(float(t) for t in init), **kw)

    optimizer = build("optimizer", make_opt)
    build("numerics", lambda: _check_numerics(blocks["numerics"]))
    build("output", lambda: _check_output(blocks["output"]))
    return ProblemConfig(
        source=source,
        blocks=blocks,
        design=design,
        material=material,
        robin=robin,
        loads=loads,
        template=template,
        theta=theta,
        optimizer=optimizer,
        digest=hashlib.sha256(text.encode()).hexdigest(),
    )


def _check_weibull_shape(m):
    if not m > 0:
        raise ValidationError(f"Weibull shape m must be > 0, got {m}")


def _check_reliability(r):
    t = np.asarray(r["t_grid"], dtype=float)
    if t.ndim != 1 or np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValidationError("t_grid must be a list of finite times >= 0")


def _check_numerics(n):
    if n["solver"] not in ("cg", "dense"):
        raise ValidationError(f"solver must be 'cg' or 'dense', got {n['solver']!r}")
    if n["threads"] < 1:
        raise ValidationError("threads must be >= 1")


def _check_output(o):
    bad = set(o["formats"]) - {"csv", "json"}
    if bad:
        raise ValidationError(f"unknown output formats {sorted(bad)}")


def load_config(path) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))
