"""Parallelotopes, parallelotope bundles and the queries the reachability loop needs.

A parallelotope is stored in half-space form ``c_l <= T x <= c_u`` with an
invertible ``n x n`` template matrix ``T``; its generator form (anchor plus
``n`` edge vectors) is derived on demand. A bundle is the intersection of
several parallelotopes in the same space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

SINGULAR_TOL = 1e-12


class GeometryError(ValueError):
    pass


class SingularTemplateError(GeometryError):
    pass


class EmptyBundleError(GeometryError):
    pass


def _as_bounds(c_l, c_u, n: int) -> tuple[np.ndarray, np.ndarray]:
    c_l = np.array(c_l, dtype=float).reshape(-1)
    c_u = np.array(c_u, dtype=float).reshape(-1)
    if c_l.shape != (n,) or c_u.shape != (n,):
        raise GeometryError(f"bounds must have length {n}, got {c_l.shape} and {c_u.shape}")
    if not (np.all(np.isfinite(c_l)) and np.all(np.isfinite(c_u))):
        raise GeometryError("bounds must be finite")
    if np.any(c_l > c_u):
        bad = np.flatnonzero(c_l > c_u).tolist()
        raise GeometryError(f"lower bound exceeds upper bound in rows {bad}")
    return c_l, c_u


@dataclass(frozen=True)
class GeneratorRep:
    """``{anchor + G @ alpha : alpha in [0, 1]^n}``; columns of ``G`` are the generators."""

    anchor: np.ndarray
    G: np.ndarray

    @property
    def generators(self) -> list[np.ndarray]:
        return [self.G[:, i] for i in range(self.G.shape[1])]

    def vertices(self) -> np.ndarray:
        n = self.G.shape[1]
        corners = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
        return self.anchor + corners @ self.G.T


@dataclass(frozen=True, eq=False)
class Parallelotope:
    T: np.ndarray
    c_l: np.ndarray
    c_u: np.ndarray

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise GeometryError(f"template matrix must be square, got shape {T.shape}")
        c_l, c_u = _as_bounds(self.c_l, self.c_u, T.shape[0])
        for arr in (T, c_l, c_u):
            arr.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "c_l", c_l)
        object.__setattr__(self, "c_u", c_u)

    @classmethod
    def box(cls, lo, hi) -> "Parallelotope":
        lo = np.asarray(lo, dtype=float)
        return cls(np.eye(lo.size), lo, hi)

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @cached_property
    def generator_rep(self) -> GeneratorRep:
        return to_generator_rep(self)

    def to_json(self) -> dict:
        return {"T": self.T.tolist(), "c_l": self.c_l.tolist(), "c_u": self.c_u.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Parallelotope":
        return cls(obj["T"], obj["c_l"], obj["c_u"])


def normalize_rows(T, c_l, c_u) -> Parallelotope:
    """Scale each template row to unit length; the represented set does not change."""
    T = np.asarray(T, dtype=float)
    norms = np.linalg.norm(T, axis=1)
    if np.any(norms == 0.0):
        raise GeometryError(f"zero template row(s) {np.flatnonzero(norms == 0.0).tolist()}")
    return Parallelotope(T / norms[:, None], np.asarray(c_l, dtype=float) / norms,
                         np.asarray(c_u, dtype=float) / norms)


def template_det(T) -> float:
    """Determinant of ``T`` after scaling rows to unit norm."""
    T = np.asarray(T, dtype=float)
    norms = np.linalg.norm(T, axis=1)
    if np.any(norms == 0.0):
        return 0.0
    return float(np.linalg.det(T / norms[:, None]))


def to_generator_rep(P: Parallelotope) -> GeneratorRep:
    """Anchor solves ``T x = c_l``; vertex ``j+1`` solves ``T x = c_l`` with row ``j`` raised to ``c_u[j]``."""
    det = template_det(P.T)
    if abs(det) <= SINGULAR_TOL:
        raise SingularTemplateError(
            f"singular template matrix (normalized |det| = {abs(det):.3e}, "
            f"cond = {np.linalg.cond(P.T):.3e}):\n{P.T}")
    n = P.dim
    rhs = np.tile(P.c_l[:, None], (1, n + 1))
    rhs[np.arange(n), np.arange(1, n + 1)] = P.c_u
    V = np.linalg.solve(P.T, rhs)
    anchor = V[:, 0]
    return GeneratorRep(anchor, V[:, 1:] - anchor[:, None])


class Bundle:
    """Intersection of parallelotopes of equal dimension."""

    __slots__ = ("ptopes", "_A", "_lo", "_hi")

    def __init__(self, ptopes: Sequence[Parallelotope]):
        ptopes = tuple(ptopes)
        if not ptopes:
            raise GeometryError("a bundle needs at least one parallelotope")
        n = ptopes[0].dim
        if any(p.dim != n for p in ptopes):
            raise GeometryError("bundle members differ in dimension")
        self.ptopes = ptopes
        self._A = np.vstack([p.T for p in ptopes])
        self._lo = np.concatenate([p.c_l for p in ptopes])
        self._hi = np.concatenate([p.c_u for p in ptopes])

    @property
    def dim(self) -> int:
        return self.ptopes[0].dim

    def __len__(self) -> int:
        return len(self.ptopes)

    def __iter__(self):
        return iter(self.ptopes)

    def constraints(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stacked ``(T, c_l, c_u)`` of all members."""
        return self._A, self._lo, self._hi

    def to_json(self) -> list[dict]:
        return [p.to_json() for p in self.ptopes]


def as_bundle(Q) -> Bundle:
    return Q if isinstance(Q, Bundle) else Bundle([Q])


def maximize_direction(Q, v) -> tuple[np.ndarray, float]:
    """Maximize ``v . x`` over the bundle by linear programming (HiGHS dual simplex)."""
    Q = as_bundle(Q)
    v = np.asarray(v, dtype=float)
    A, lo, hi = Q.constraints()
    res = linprog(-v, A_ub=np.vstack([A, -A]), b_ub=np.concatenate([hi, -lo]),
                  bounds=[(None, None)] * Q.dim, method="highs-ds")
    if res.status == 2:
        raise EmptyBundleError("bundle is empty: member constraints have no common point")
    if res.status == 3:
        raise GeometryError(f"LP unbounded in direction {v}")
    if res.status != 0:
        raise GeometryError(f"LP failed in direction {v}: {res.message}")
    x = np.asarray(res.x, dtype=float)
    return x, float(v @ x)


def contains_point(Q, x, tol: float = 1e-9):
    """Membership test; ``x`` may be one point or an ``(N, n)`` batch."""
    Q = as_bundle(Q)
    A, lo, hi = Q.constraints()
    y = np.asarray(x, dtype=float) @ A.T
    ok = np.all((y >= lo - tol) & (y <= hi + tol), axis=-1)
    return bool(ok) if np.ndim(ok) == 0 else ok


def bounding_box(Q) -> tuple[np.ndarray, np.ndarray]:
    Q = as_bundle(Q)
    n = Q.dim
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        hi[i] = maximize_direction(Q, e)[1]
        lo[i] = -maximize_direction(Q, -e)[1]
    return lo, hi


def bundle_vertices(Q, tol: float = 1e-9) -> np.ndarray:
    """All vertices of the bundle by brute-force enumeration of active constraint sets.

    Every choice of ``n`` hyperplanes among the ``2 m n`` bounding ones is
    solved; feasible intersection points are kept. Only sensible for small ``n``.
    """
    Q = as_bundle(Q)
    A, lo, hi = Q.constraints()
    n = Q.dim
    H = np.vstack([A, A])
    b = np.concatenate([lo, hi])
    combos = np.array(list(itertools.combinations(range(H.shape[0]), n)))
    if combos.size == 0:
        return np.empty((0, n))
    M = H[combos]
    rhs = b[combos]
    dets = np.abs(np.linalg.det(M))
    keep = dets > SINGULAR_TOL
    if not np.any(keep):
        return np.empty((0, n))
    pts = np.linalg.solve(M[keep], rhs[keep][..., None])[..., 0]
    scale = 1.0 + np.max(np.abs(b))
    pts = pts[contains_point(Q, pts, tol * scale)]
    if len(pts) == 0:
        return pts
    return np.unique(np.round(pts, 12), axis=0)


def volume_estimate(Q) -> float:
    """Convex-hull volume of the bundle for ``n <= 3``, bounding-box volume above that.

    Flat (lower-dimensional) sets have volume 0.
    """
    Q = as_bundle(Q)
    n = Q.dim
    if n > 3:
        lo, hi = bounding_box(Q)
        return float(np.prod(np.maximum(hi - lo, 0.0)))
    if n == 1:
        lo, hi = bounding_box(Q)
        return float(max(hi[0] - lo[0], 0.0))
    pts = bundle_vertices(Q)
    if len(pts) <= n:
        if len(pts) == 0:
            # vertex filter is stricter than the LP; fall back to feasibility check
            maximize_direction(Q, np.ones(n))
        return 0.0
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0
