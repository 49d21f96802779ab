"""Benchmark systems and the JSON model format.

Continuous models are stored as polynomial vector fields and discretized
with explicit Euler, ``x+ = x + delta * g(x)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Parallelotope
from .poly import MultiPoly


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ModelDef:
    name: str
    dim: int
    var_names: tuple[str, ...]
    map_kind: str
    dynamics: tuple[MultiPoly, ...]
    default_steps: int
    initial_box: tuple[tuple[float, float], ...]
    delta: float | None = None
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "var_names", tuple(self.var_names))
        object.__setattr__(self, "dynamics", tuple(self.dynamics))
        object.__setattr__(self, "initial_box",
                           tuple((float(lo), float(hi)) for lo, hi in self.initial_box))
        if self.map_kind not in ("discrete", "euler"):
            raise ModelError(f"map must be 'discrete' or 'euler', got {self.map_kind!r}")
        if self.map_kind == "euler" and self.delta is None:
            raise ModelError("euler models need a delta")
        if len(self.var_names) != self.dim:
            raise ModelError(f"{len(self.var_names)} variable names for dimension {self.dim}")
        if len(self.dynamics) != self.dim:
            raise ModelError(f"{len(self.dynamics)} dynamics components for dimension {self.dim}")
        for i, p in enumerate(self.dynamics):
            if p.nvars != self.dim:
                raise ModelError(f"dynamics[{i}] has {p.nvars} variables, expected {self.dim}")
        if len(self.initial_box) != self.dim:
            raise ModelError(f"initial_box has {len(self.initial_box)} intervals, expected {self.dim}")
        for i, (lo, hi) in enumerate(self.initial_box):
            if lo > hi:
                raise ModelError(f"initial_box[{i}]: lower {lo} exceeds upper {hi}")

    def __eq__(self, other):
        if not isinstance(other, ModelDef):
            return NotImplemented
        return (self.name, self.dim, self.var_names, self.map_kind, self.dynamics,
                self.default_steps, self.initial_box, self.delta, self.params) == (
                other.name, other.dim, other.var_names, other.map_kind, other.dynamics,
                other.default_steps, other.initial_box, other.delta, other.params)

    def step_map(self) -> tuple[MultiPoly, ...]:
        return discretize(self)

    def initial_set(self, scale: float = 1.0) -> Parallelotope:
        """Initial box, grown about its center by ``scale`` in every coordinate."""
        if scale <= 0:
            raise ModelError("scale must be positive")
        lo = np.array([b[0] for b in self.initial_box])
        hi = np.array([b[1] for b in self.initial_box])
        mid, half = (lo + hi) / 2, (hi - lo) / 2 * scale
        if scale == 1.0:
            return Parallelotope.box(lo, hi)
        return Parallelotope.box(mid - half, mid + half)


def discretize(m: ModelDef) -> tuple[MultiPoly, ...]:
    """Discrete map of the model; Euler models become ``x_i + delta * g_i``."""
    if m.map_kind == "discrete":
        return m.dynamics
    return tuple(MultiPoly.variable(i, m.dim) + p.scale(m.delta) for i, p in enumerate(m.dynamics))


def _vars(n: int) -> list[MultiPoly]:
    return [MultiPoly.variable(i, n) for i in range(n)]


def _vanderpol() -> ModelDef:
    x, y = _vars(2)
    g = (y, (1 - x * x) * y - x)
    return ModelDef("vanderpol", 2, ("x", "y"), "euler", g, 70, ((0.0, 0.1), (1.99, 2.0)),
                    delta=0.08, params={"mu": 1.0})


def _jetengine() -> ModelDef:
    x, y = _vars(2)
    g = (-y - 1.5 * x ** 2 - 0.5 * x ** 3 - 0.5, 3 * x - y)
    return ModelDef("jetengine", 2, ("x", "y"), "euler", g, 100, ((0.8, 1.2), (0.8, 1.2)),
                    delta=0.2)


def _neuron() -> ModelDef:
    x, y = _vars(2)
    g = (x - x ** 3 * (1.0 / 3.0) - y + 0.875, 0.08 * (x + 0.7 - 0.8 * y))
    return ModelDef("neuron", 2, ("x", "y"), "euler", g, 200, ((0.9, 1.1), (2.4, 2.6)),
                    delta=0.2, params={"I": 0.875, "a": 0.7, "b": 0.8, "tau_inv": 0.08})


def _sir() -> ModelDef:
    beta, gamma = 0.05, 0.34
    s, i, r = _vars(3)
    g = (-beta * s * i, beta * s * i - gamma * i, gamma * i)
    return ModelDef("sir", 3, ("s", "i", "r"), "euler", g, 150,
                    ((0.79, 0.8), (0.19, 0.2), (0.0, 0.0)), delta=0.1,
                    params={"beta": beta, "gamma": gamma})


def _coupled_vanderpol() -> ModelDef:
    x1, y1, x2, y2 = _vars(4)
    g = (y1, (1 - x1 * x1) * y1 - x1 + (x2 - x1),
         y2, (1 - x2 * x2) * y2 - x2 + (x1 - x2))
    return ModelDef("coupled_vanderpol", 4, ("x1", "y1", "x2", "y2"), "euler", g, 40,
                    ((1.25, 2.25),) * 4, delta=0.08, params={"mu": 1.0, "coupling": 1.0})


COVID_PARAMS = {
    "text": {"beta": 0.25, "gamma": 0.02, "eta": 0.02, "delta": 0.1, "steps": 200},
    "table": {"beta": 0.05, "gamma": 0.0, "eta": 0.02, "delta": 0.08, "steps": 200},
}


def covid(params: str = "text", corrected: bool = False) -> ModelDef:
    """Seven-compartment epidemic model with asymptomatic carriers.

    ``corrected`` swaps the infected-asymptomatic inflow to ``S_A`` and its
    removal to ``gamma * A``; by default the original form is kept.
    """
    if params not in COVID_PARAMS:
        raise ModelError(f"covid params must be one of {sorted(COVID_PARAMS)}")
    p = COVID_PARAMS[params]
    beta, gamma, eta = p["beta"], p["gamma"], p["eta"]
    sa, si, a, i, ra, ri, d = _vars(7)
    infected = a + i
    if corrected:
        a_dot = beta * sa * infected - gamma * a
    else:
        a_dot = beta * si * infected - gamma * i
    g = (-beta * sa * infected, -beta * si * infected, a_dot,
         beta * si * infected - gamma * i, gamma * a, gamma * i, eta * i)
    box = ((0.69, 0.7), (0.09, 0.1), (0.14, 0.15), (0.04, 0.05), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
    return ModelDef("covid", 7, ("S_A", "S_I", "A", "I", "R_A", "R_I", "D"), "euler", g,
                    p["steps"], box, delta=p["delta"],
                    params={"beta": beta, "gamma": gamma, "eta": eta})


BUILTINS: dict[str, Callable[[], ModelDef]] = {
    "vanderpol": _vanderpol,
    "jetengine": _jetengine,
    "neuron": _neuron,
    "sir": _sir,
    "coupled_vanderpol": _coupled_vanderpol,
    "covid": covid,
}


def builtin(name: str, covid_params: str = "text", covid_corrected: bool = False) -> ModelDef:
    if name not in BUILTINS:
        raise ModelError(f"unknown model {name!r}; available: {', '.join(BUILTINS)}")
    if name == "covid":
        return covid(covid_params, covid_corrected)
    return BUILTINS[name]()


def to_json(m: ModelDef) -> dict:
    doc = {
        "name": m.name,
        "dim": m.dim,
        "vars": list(m.var_names),
        "map": m.map_kind,
        "dynamics": [p.to_json() for p in m.dynamics],
        "steps": m.default_steps,
        "initial_box": [list(b) for b in m.initial_box],
    }
    if m.delta is not None:
        doc["delta"] = m.delta
    if m.params:
        doc["params"] = dict(m.params)
    return doc


def serialize_model(m: ModelDef) -> str:
    return json.dumps(to_json(m), indent=2)


def _reject_constant(name: str):
    raise ModelError(f"non-finite number {name} is not allowed")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ModelError(f"{where}: non-finite number")
    return float(value)


def _integer(value, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{where}: expected an integer, got {value!r}")
    if value < minimum:
        raise ModelError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _require(doc: dict, key: str, kind: type | tuple, where: str = ""):
    if key not in doc:
        raise ModelError(f"{where}missing required field {key!r}")
    if not isinstance(doc[key], kind):
        raise ModelError(f"{where}field {key!r} has wrong type {type(doc[key]).__name__}")
    return doc[key]


def parse_model(text: bytes | str) -> ModelDef:
    """Parse and validate a JSON model document."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelError(f"model file is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")

    name = _require(doc, "name", str)
    dim = _integer(_require(doc, "dim", int), "dim", minimum=1)
    var_names = _require(doc, "vars", list)
    if len(var_names) != dim or not all(isinstance(v, str) for v in var_names):
        raise ModelError(f"vars: expected {dim} strings")
    map_kind = _require(doc, "map", str)
    if map_kind not in ("discrete", "euler"):
        raise ModelError(f"map: expected 'discrete' or 'euler', got {map_kind!r}")
    delta = None
    if map_kind == "euler":
        delta = _number(_require(doc, "delta", (int, float)), "delta")
    elif doc.get("delta") is not None:
        delta = _number(doc["delta"], "delta")
    steps = _integer(_require(doc, "steps", int), "steps")

    dyn_doc = _require(doc, "dynamics", list)
    if len(dyn_doc) != dim:
        raise ModelError(f"dynamics: expected {dim} components, got {len(dyn_doc)}")
    dynamics = []
    for i, comp in enumerate(dyn_doc):
        if not isinstance(comp, list):
            raise ModelError(f"dynamics[{i}]: expected a list of terms")
        terms: dict[tuple[int, ...], float] = {}
        for j, term in enumerate(comp):
            where = f"dynamics[{i}][{j}]"
            if not isinstance(term, dict):
                raise ModelError(f"{where}: expected an object with 'coeff' and 'exps'")
            coeff = _number(_require(term, "coeff", (int, float), f"{where}: "), f"{where}.coeff")
            exps = _require(term, "exps", list, f"{where}: ")
            if len(exps) != dim:
                raise ModelError(f"{where}.exps: length {len(exps)} does not match dim {dim}")
            key = tuple(_integer(e, f"{where}.exps[{k}]") for k, e in enumerate(exps))
            terms[key] = terms.get(key, 0.0) + coeff
        dynamics.append(MultiPoly(dim, terms))

    box_doc = _require(doc, "initial_box", list)
    if len(box_doc) != dim:
        raise ModelError(f"initial_box: expected {dim} intervals, got {len(box_doc)}")
    box = []
    for i, iv in enumerate(box_doc):
        if not isinstance(iv, list) or len(iv) != 2:
            raise ModelError(f"initial_box[{i}]: expected [lo, hi]")
        box.append((_number(iv[0], f"initial_box[{i}][0]"), _number(iv[1], f"initial_box[{i}][1]")))

    params = {}
    for k, v in (doc.get("params") or {}).items():
        params[str(k)] = _number(v, f"params.{k}")

    return ModelDef(name, dim, tuple(var_names), map_kind, tuple(dynamics), steps, tuple(box),
                    delta=delta, params=params)


def load_model(path) -> ModelDef:
    with open(path, "rb") as fh:
        return parse_model(fh.read())
