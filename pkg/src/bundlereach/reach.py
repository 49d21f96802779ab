"""Reachable-set drivers: one-step bundle image, static and dynamic flowpipes.

The one-step image bounds every template direction ``t . f(x)`` over each
member parallelotope: ``f`` is composed with the member's generator map so
the objective becomes a polynomial over the unit box, which the Bernstein
enclosure bounds. Per direction the tightest bound over all members wins.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import templates as tpl
from .bernstein import dense_to_bernstein, subdivide
from .geometry import Bundle, GeometryError, Parallelotope, maximize_direction, volume_estimate
from .poly import MultiPoly, compose_affine, eval_map, multi_degree, to_dense
from .templates import TemplateSet

log = logging.getLogger(__name__)

CROSSING_SLACK = 1e-9


DIVERGENCE_LIMIT = 1e12


class SoundnessError(AssertionError):
    """A computed lower bound exceeds its upper bound; indicates a bug, not an empty set."""


class ReachError(RuntimeError):
    """The flowpipe could not be continued at some step."""

    def __init__(self, step: int, msg: str):
        super().__init__(f"step {step}: {msg}")
        self.step = step


class DivergenceError(ReachError):
    pass


@dataclass(frozen=True)
class ReachConfig:
    steps: int
    mode: str = "dynamic"
    l_lin: int = 1
    l_pca: int = 0
    static_sets: tuple[TemplateSet, ...] = ()
    subdivision_depth: int = 0
    rng_seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "static_sets", tuple(self.static_sets))
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.mode not in ("static", "dynamic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.l_lin < 0 or self.l_pca < 0:
            raise ValueError("lifespans must be non-negative")
        if self.mode == "dynamic" and self.l_lin + self.l_pca < 1:
            raise ValueError("dynamic mode needs l_lin + l_pca >= 1")
        if self.subdivision_depth < 0:
            raise ValueError("subdivision_depth must be non-negative")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def to_json(self) -> dict:
        out = {"steps": self.steps, "mode": self.mode, "subdivision_depth": self.subdivision_depth,
               "rng_seed": self.rng_seed}
        if self.mode == "dynamic":
            out.update(l_lin=self.l_lin, l_pca=self.l_pca)
        else:
            out["static_sets"] = [t.to_json() for t in self.static_sets]
        return out


@dataclass
class Flowpipe:
    bundles: list[Bundle]
    volumes: list[float]
    events: list[tuple[int, str]] = field(default_factory=list)

    @property
    def total_volume(self) -> float:
        return float(sum(self.volumes))

    def __len__(self) -> int:
        return len(self.bundles)

    def to_json(self, model: str = "", config: dict | None = None) -> str:
        doc = {
            "model": model,
            "config": config or {},
            "steps": [{"k": k, "parallelotopes": b.to_json(), "volume": v}
                      for k, (b, v) in enumerate(zip(self.bundles, self.volumes))],
            "events": [{"step": s, "warning": w} for s, w in self.events],
        }
        return json.dumps(doc, indent=1)

    def volumes_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "volume"])
        for k, v in enumerate(self.volumes):
            w.writerow([k, repr(v)])
        return buf.getvalue()


def simulate(f: Sequence[MultiPoly], x0, steps: int) -> np.ndarray:
    """Trajectory ``x0, f(x0), ..., f^steps(x0)``; ``x0`` may be a batch of start points."""
    x = np.asarray(x0, dtype=float)
    out = [x]
    for _ in range(steps):
        x = eval_map(f, x)
        out.append(x)
    return np.stack(out)


def _member_bounds(f: Sequence[MultiPoly], P: Parallelotope, dirs: np.ndarray,
                   depth: int) -> tuple[np.ndarray, np.ndarray]:
    rep = P.generator_rep
    comps = [compose_affine(fj, rep.anchor, rep.G) for fj in f]
    # One shared degree: Bernstein coefficients are linear in the polynomial, so a
    # direction's coefficients are dirs @ component coefficients.
    degree = np.max([multi_degree(c) for c in comps], axis=0)
    dense = np.stack([to_dense(c, degree) for c in comps])
    bern = dense_to_bernstein(dense, lead=1)
    n = len(comps)
    if depth:
        flat = np.concatenate([p.reshape(n, -1) for p in subdivide(bern, depth, lead=1)], axis=1)
    else:
        flat = bern.reshape(n, -1)
    vals = dirs @ flat
    return vals.max(axis=1), vals.min(axis=1)


def transform_bundle(f: Sequence[MultiPoly], Q, templates: Sequence[TemplateSet],
                     depth: int = 0, jobs: int = 1) -> Bundle:
    """Sound overapproximation of ``f(Q)`` with one parallelotope per template set."""
    Q = Q if isinstance(Q, Bundle) else Bundle([Q])
    if not templates:
        raise ValueError("need at least one template set")
    dirs = np.vstack([t.dirs for t in templates])
    members = list(Q)
    if jobs > 1 and len(members) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda P: _member_bounds(f, P, dirs, depth), members))
    else:
        results = [_member_bounds(f, P, dirs, depth) for P in members]
    upper = np.min([r[0] for r in results], axis=0)
    lower = np.max([r[1] for r in results], axis=0)
    crossed = lower > upper + CROSSING_SLACK * (1.0 + np.abs(upper))
    if np.any(crossed):
        rows = np.flatnonzero(crossed).tolist()
        raise SoundnessError(f"lower bound exceeds upper bound for template rows {rows}")
    lower, upper = np.minimum(lower, upper), np.maximum(lower, upper)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))) or \
            max(np.max(np.abs(lower)), np.max(np.abs(upper))) > DIVERGENCE_LIMIT:
        raise OverflowError("template bounds blew up")
    out = []
    i = 0
    for t in templates:
        n = t.dim
        out.append(Parallelotope(t.dirs, lower[i:i + n], upper[i:i + n]))
        i += n
    return Bundle(out)


def fit_template(Q, t: TemplateSet) -> Parallelotope:
    """Tightest parallelotope with directions ``t`` around the bundle ``Q``."""
    hi = np.array([maximize_direction(Q, row)[1] for row in t.dirs])
    lo = np.array([-maximize_direction(Q, -row)[1] for row in t.dirs])
    return Parallelotope(t.dirs, np.minimum(lo, hi), np.maximum(lo, hi))


def initial_template(P0: Parallelotope) -> TemplateSet:
    T = P0.T / np.linalg.norm(P0.T, axis=1)[:, None]
    origin = "axis" if np.array_equal(T, np.eye(P0.dim)) else "user"
    return TemplateSet(T, origin, 0)


@contextmanager
def _step_errors(k: int):
    """Re-raise numerical failures inside step ``k`` as errors naming the step."""
    try:
        yield
    except SoundnessError:
        raise
    except OverflowError as exc:
        raise DivergenceError(k, f"flowpipe diverged ({exc}); try a deeper --subdivision "
                                 "or different templates") from exc
    except GeometryError as exc:
        raise ReachError(k, str(exc)) from exc


def _record(bundles: list[Bundle], volumes: list[float], Q: Bundle) -> None:
    bundles.append(Q)
    volumes.append(volume_estimate(Q))


def reach_static(f: Sequence[MultiPoly], P0: Parallelotope, cfg: ReachConfig) -> Flowpipe:
    """Flowpipe with fixed templates: the initial directions plus ``cfg.static_sets``."""
    init = initial_template(P0)
    Q = Bundle([P0] + [fit_template(P0, t) for t in cfg.static_sets])
    active = [init, *cfg.static_sets]
    bundles: list[Bundle] = []
    volumes: list[float] = []
    _record(bundles, volumes, Q)
    for k in range(1, cfg.steps + 1):
        with _step_errors(k):
            Q = transform_bundle(f, Q, active, cfg.subdivision_depth, cfg.jobs)
            _record(bundles, volumes, Q)
    return Flowpipe(bundles, volumes)


def reach_dynamic(f: Sequence[MultiPoly], P0: Parallelotope, cfg: ReachConfig) -> Flowpipe:
    """Flowpipe whose templates are regenerated every step from support points.

    Per step: support points of the current bundle and their images give a
    least-squares linear map ``A``; the running template moves to ``T @ inv(A)``
    and is born as this step's linear-approximation set, while PCA of the
    images gives this step's PCA set. Sets stay active for their lifespan; the
    initial set stays active for good.
    """
    init = initial_template(P0)
    running = TemplateSet(init.dirs, "linapp", 0)
    history: list[TemplateSet] = []
    events: list[tuple[int, str]] = []
    Q = Bundle([P0])
    bundles: list[Bundle] = []
    volumes: list[float] = []
    _record(bundles, volumes, Q)
    for k in range(1, cfg.steps + 1):
        with _step_errors(k):
            supp = tpl.get_support_points(Q)
            prop = tpl.propagate_points(supp, f)
            if cfg.l_lin:
                A = tpl.approx_linear_trans(supp.T, prop.T)
                running = tpl.update_linapp_template(running, A, k, events)
                history.append(running)
            if cfg.l_pca:
                history.append(tpl.pca_directions(prop, k))
            # drop sets that can never become active again
            horizon = k - max(cfg.l_lin, cfg.l_pca)
            history = [t for t in history if t.birth_step > horizon]
            active = tpl.assemble_active_templates(history, k, cfg.l_lin, cfg.l_pca, init)
            Q = transform_bundle(f, Q, active, cfg.subdivision_depth, cfg.jobs)
            _record(bundles, volumes, Q)
    return Flowpipe(bundles, volumes, events)


def reach(f: Sequence[MultiPoly], P0: Parallelotope, cfg: ReachConfig) -> Flowpipe:
    if cfg.mode == "static":
        return reach_static(f, P0, cfg)
    return reach_dynamic(f, P0, cfg)
