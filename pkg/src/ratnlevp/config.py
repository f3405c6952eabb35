"""Run configuration for the command line tool.

A configuration is a JSON object with the sections ``problem``, ``contour``,
``approximation``, ``solver`` and ``output``::

    {"problem": {"name": "delay", "params": {"tau": 1.0}},
     "contour": {"shape": "circle", "center": [-1, 0], "radius": 6},
     "approximation": {"m": 50, "inner_scale": 0.5},
     "solver": {"method": "full-arnoldi", "k": 5},
     "output": {"dir": "out"}}

``problem`` either names a gallery problem or gives ``path`` to a problem
directory. Unknown keys are rejected; every error names the offending field.
"""
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .contour import contour_from_dict
from .errors import ConfigError, InvalidContour, ParseError
from .gallery import EXPERIMENTS, MAKERS
from .solvers import METHODS

SOLVE_METHODS = METHODS + ("beyn",)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError("expected an object", where)
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) {extra}", where)


def _int(d, key, where, default, lo=None):
    v = d.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", f"{where}.{key}")
    if lo is not None and v < lo:
        raise ConfigError(f"must be >= {lo}, got {v}", f"{where}.{key}")
    return v


def _float(d, key, where, default, positive=False):
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", f"{where}.{key}")
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v}", f"{where}.{key}")
    return float(v)


def _bool(d, key, where, default):
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"expected true or false, got {v!r}", f"{where}.{key}")
    return v


def _complex_or_none(v, where):
    if v is None:
        return None
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(f"expected a number or [re, im], got {v!r}", where)


@dataclass(frozen=True)
class ProblemSpec:
    name: Optional[str] = None
    params: dict = field(default_factory=dict)
    path: Optional[str] = None

    @classmethod
    def from_dict(cls, d, where="problem"):
        _check_keys(d, ("name", "params", "path"), where)
        name, path = d.get("name"), d.get("path")
        if (name is None) == (path is None):
            raise ConfigError("give exactly one of 'name' and 'path'", where)
        if name is not None and name not in MAKERS:
            raise ConfigError(f"unknown gallery problem {name!r}; choose from {sorted(MAKERS)}",
                              f"{where}.name")
        if path is not None and not isinstance(path, str):
            raise ConfigError("expected a string", f"{where}.path")
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("expected an object", f"{where}.params")
        if path is not None and params:
            raise ConfigError("params only apply to gallery problems", f"{where}.params")
        return cls(name, dict(params), path)

    def to_dict(self):
        if self.path is not None:
            return {"path": self.path}
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class ApproxSpec:
    m: int = 50
    inner_scale: float = 0.5
    m_values: Optional[tuple] = None
    per_side: bool = False
    principal_parts: bool = True

    @classmethod
    def from_dict(cls, d, where="approximation"):
        _check_keys(d, ("m", "inner_scale", "m_values", "per_side", "principal_parts"), where)
        m = _int(d, "m", where, 50, lo=1)
        inner = _float(d, "inner_scale", where, 0.5, positive=True)
        if inner >= 1:
            raise ConfigError(f"must lie in (0, 1), got {inner}", f"{where}.inner_scale")
        mv = d.get("m_values")
        if mv is not None:
            if not isinstance(mv, list):
                raise ConfigError("expected a list of integers", f"{where}.m_values")
            if not mv:
                raise ConfigError("empty m range", f"{where}.m_values")
            for i, x in enumerate(mv):
                if isinstance(x, bool) or not isinstance(x, int) or x < 1:
                    raise ConfigError(f"expected a positive integer, got {x!r}",
                                      f"{where}.m_values[{i}]")
            mv = tuple(mv)
        return cls(m, inner, mv, _bool(d, "per_side", where, False),
                   _bool(d, "principal_parts", where, True))

    def to_dict(self):
        return {"m": self.m, "inner_scale": self.inner_scale,
                "m_values": None if self.m_values is None else list(self.m_values),
                "per_side": self.per_side, "principal_parts": self.principal_parts}


@dataclass(frozen=True)
class SolverSpec:
    method: str = "full-arnoldi"
    sigma: Optional[complex] = None
    k: int = 5
    nu: Optional[int] = None
    q: int = 5
    tol: float = 1e-10
    max_outer: int = 50
    seed: int = 0
    beyn_N: int = 150
    beyn_ell: int = 10
    beyn_hankel: int = 1
    beyn_rank_tol: float = 1e-10

    @classmethod
    def from_dict(cls, d, where="solver"):
        _check_keys(d, ("method", "sigma", "k", "nu", "q", "tol", "max_outer", "seed", "beyn"), where)
        method = d.get("method", "full-arnoldi")
        if method not in SOLVE_METHODS:
            raise ConfigError(f"unknown method {method!r}; choose from {list(SOLVE_METHODS)}",
                              f"{where}.method")
        k = _int(d, "k", where, 5, lo=1)
        nu = _int(d, "nu", where, None, lo=1)
        if nu is not None and nu < k:
            raise ConfigError(f"nu={nu} must be >= k={k}", f"{where}.nu")
        b = d.get("beyn", {})
        _check_keys(b, ("N", "ell", "hankel", "rank_tol"), f"{where}.beyn")
        return cls(method, _complex_or_none(d.get("sigma"), f"{where}.sigma"), k, nu,
                   _int(d, "q", where, 5, lo=1), _float(d, "tol", where, 1e-10, positive=True),
                   _int(d, "max_outer", where, 50, lo=1), _int(d, "seed", where, 0, lo=0),
                   _int(b, "N", f"{where}.beyn", 150, lo=8), _int(b, "ell", f"{where}.beyn", 10, lo=1),
                   _int(b, "hankel", f"{where}.beyn", 1, lo=1),
                   _float(b, "rank_tol", f"{where}.beyn", 1e-10, positive=True))

    def to_dict(self):
        sigma = None if self.sigma is None else [self.sigma.real, self.sigma.imag]
        return {"method": self.method, "sigma": sigma, "k": self.k, "nu": self.nu, "q": self.q,
                "tol": self.tol, "max_outer": self.max_outer, "seed": self.seed,
                "beyn": {"N": self.beyn_N, "ell": self.beyn_ell, "hankel": self.beyn_hankel,
                         "rank_tol": self.beyn_rank_tol}}


def _contour_from_config(d, where="contour"):
    if not isinstance(d, dict):
        raise ConfigError("expected an object", where)
    keys = {"circle": ("shape", "center", "radius"), "ellipse": ("shape", "center", "semi_x", "semi_y"),
            "rectangle": ("shape", "bottom_left", "top_right")}
    shape = d.get("shape")
    if shape not in keys:
        raise ConfigError(f"shape must be one of {sorted(keys)}, got {shape!r}", f"{where}.shape")
    _check_keys(d, keys[shape], where)
    for k in keys[shape][1:]:
        if k not in d:
            raise ConfigError("missing", f"{where}.{k}")
    d = dict(d)
    for k in ("center", "bottom_left", "top_right"):
        if k in d:
            d[k] = _complex_or_none(d[k], f"{where}.{k}")
    for k in ("radius", "semi_x", "semi_y"):
        if k in d:
            _float(d, k, where, None)
    try:
        return contour_from_dict(d)
    except InvalidContour as exc:
        raise ConfigError(str(exc), where) from exc


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    contour: object
    approximation: ApproxSpec = ApproxSpec()
    solver: SolverSpec = SolverSpec()
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d):
        _check_keys(d, ("problem", "contour", "approximation", "solver", "output"), "config")
        for key in ("problem", "contour"):
            if key not in d:
                raise ConfigError("missing section", key)
        out = d.get("output", {})
        _check_keys(out, ("dir",), "output")
        out_dir = out.get("dir", "out")
        if not isinstance(out_dir, str):
            raise ConfigError("expected a string", "output.dir")
        return cls(ProblemSpec.from_dict(d["problem"]), _contour_from_config(d["contour"]),
                   ApproxSpec.from_dict(d.get("approximation", {})),
                   SolverSpec.from_dict(d.get("solver", {})), out_dir)

    def to_dict(self):
        return {"problem": self.problem.to_dict(), "contour": self.contour.to_dict(),
                "approximation": self.approximation.to_dict(), "solver": self.solver.to_dict(),
                "output": {"dir": self.output_dir}}

    def with_seed(self, seed):
        return replace(self, solver=replace(self.solver, seed=int(seed)))


def parse_config(text, source="<config>"):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}: {exc.msg}") from exc
    return RunConfig.from_dict(d)


def serialize_config(cfg):
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path} ({exc})") from exc
    return parse_config(text, str(path))


def experiment_config(name, method=None):
    """The configuration of a built-in experiment."""
    try:
        e = EXPERIMENTS[name]
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
    solver = dict(e["solver"])
    solver.update({f"beyn_{k}": v for k, v in e.get("beyn", {}).items()})
    if method is not None:
        solver["method"] = method
    return RunConfig(ProblemSpec(e.get("problem", name), dict(e["params"])), e["contour"],
                     ApproxSpec(m=e["m"], per_side=e.get("per_side", False)),
                     SolverSpec(**solver))
