"""Template-direction generation for parallelotope bundles.

Dynamic templates come from two sources, both fed by the support points of
the current bundle and their one-step images: a least-squares linear fit of
the map (the running template is pushed through its inverse) and PCA of the
images. Static baselines (axis/diagonal combinations, random directions)
live here as well.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import SINGULAR_TOL, Bundle, as_bundle, maximize_direction, template_det
from .poly import MultiPoly, eval_map

log = logging.getLogger(__name__)

ORIGINS = ("axis", "linapp", "pca", "diagonal", "random", "user")

DEDUP_TOL = 1e-9
PINV_RCOND = 1e-10
RANDOM_DET_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class TemplateSet:
    """``n`` unit template directions (rows of ``dirs``) plus provenance."""

    dirs: np.ndarray
    origin: str = "user"
    birth_step: int = 0

    def __post_init__(self):
        dirs = np.array(self.dirs, dtype=float)
        if dirs.ndim != 2 or dirs.shape[0] != dirs.shape[1]:
            raise ValueError(f"template set must be square, got shape {dirs.shape}")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown template origin {self.origin!r}")
        if self.birth_step < 0:
            raise ValueError("birth_step must be non-negative")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("template set has a zero direction")
        dirs = dirs / norms[:, None]
        if abs(np.linalg.det(dirs)) <= SINGULAR_TOL:
            raise ValueError("template directions are linearly dependent")
        dirs.setflags(write=False)
        object.__setattr__(self, "dirs", dirs)

    @property
    def dim(self) -> int:
        return self.dirs.shape[0]

    @classmethod
    def axis(cls, n: int) -> "TemplateSet":
        return cls(np.eye(n), "axis", 0)

    def to_json(self) -> dict:
        return {"dirs": self.dirs.tolist(), "origin": self.origin, "birth_step": self.birth_step}


def get_support_points(Q) -> np.ndarray:
    """Bundle maximizers of ``+row`` and ``-row`` for every template row of every member.

    Returns an ``(N, n)`` array with near-duplicates (within 1e-9) removed.
    """
    Q = as_bundle(Q)
    pts: list[np.ndarray] = []
    for P in Q:
        for row in P.T:
            for v in (row, -row):
                x, _ = maximize_direction(Q, v)
                if not any(np.max(np.abs(x - q)) <= DEDUP_TOL for q in pts):
                    pts.append(x)
    return np.array(pts)


def propagate_points(points, f: Sequence[MultiPoly]) -> np.ndarray:
    return eval_map(f, np.atleast_2d(points))


def approx_linear_trans(X, X_next) -> np.ndarray:
    """Least-squares ``A`` with ``X_next ~= A @ X``; points are columns.

    Among all minimizers of ``||X_next - A X||_F`` this returns the one
    nearest the identity, ``X_next @ pinv(X) + (I - X @ pinv(X))``. When the
    points span the space it is exactly ``X_next @ pinv(X)``; directions the
    points do not reach (flat sets) are left unchanged instead of collapsed.
    Singular values below ``1e-10 * sigma_max`` count as zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X_next = np.atleast_2d(np.asarray(X_next, dtype=float))
    if X.shape != X_next.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {X_next.shape}")
    pinv = np.linalg.pinv(X, rcond=PINV_RCOND)
    return X_next @ pinv + (np.eye(X.shape[0]) - X @ pinv)


def update_linapp_template(T: TemplateSet, A, step: int,
                           events: list | None = None) -> TemplateSet:
    """Push template rows through the inverse of ``A``: new rows are ``T @ inv(A)``, normalized.

    When ``A`` (or the resulting template) is numerically singular, the
    previous template is returned unchanged and a warning is recorded in
    ``events`` as ``(step, message)``.
    """
    A = np.asarray(A, dtype=float)
    scale = np.max(np.abs(A)) if A.size else 0.0
    detA = np.linalg.det(A / scale) if scale > 0 else 0.0
    if abs(detA) <= SINGULAR_TOL:
        return _fallback(T, step, f"near-singular linear fit (|det| = {abs(detA):.3e}); "
                                  "reusing previous linear-approximation template", events)
    new = T.dirs @ np.linalg.inv(A)
    if abs(template_det(new)) <= SINGULAR_TOL:
        return _fallback(T, step, "updated linear-approximation template is degenerate; "
                                  "reusing previous template", events)
    return TemplateSet(new, "linapp", step)


def _fallback(T: TemplateSet, step: int, msg: str, events: list | None) -> TemplateSet:
    log.warning("step %d: %s", step, msg)
    if events is not None:
        events.append((step, msg))
    return TemplateSet(T.dirs, "linapp", step)


def _complete_basis(rows: list[np.ndarray], n: int) -> list[np.ndarray]:
    """Extend orthonormal ``rows`` to a basis by Gram-Schmidt on e_1, e_2, ... in order."""
    rows = list(rows)
    for i in range(n):
        if len(rows) == n:
            break
        v = np.zeros(n)
        v[i] = 1.0
        for r in rows:
            v = v - (r @ v) * r
        for r in rows:  # second pass for orthogonality to machine precision
            v = v - (r @ v) * r
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            rows.append(v / norm)
    return rows


def pca_directions(points, step: int = 0) -> TemplateSet:
    """Principal axes of a point cloud as an orthonormal template set.

    Rows are ordered by decreasing variance, each signed so that its largest
    magnitude entry is positive. Zero-variance directions are replaced by a
    deterministic completion of the basis.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n = X.shape[1]
    Xc = X - X.mean(axis=0)
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    cutoff = PINV_RCOND * s[0] if s.size and s[0] > 0 else np.inf
    rows = []
    for sigma, v in zip(s, Vt):
        if sigma > cutoff and sigma > 0:
            rows.append(v / np.linalg.norm(v))
    rows = _complete_basis(rows, n)
    out = []
    for r in rows:
        k = int(np.argmax(np.abs(r)))
        out.append(r if r[k] > 0 else -r)
    return TemplateSet(np.array(out), "pca", step)


def diagonal_directions(n: int) -> np.ndarray:
    """``(e_i + e_j)/sqrt(2)`` and ``(e_i - e_j)/sqrt(2)`` for ``i < j``, in that order per pair."""
    dirs = []
    for i, j in itertools.combinations(range(n), 2):
        for sign in (1.0, -1.0):
            v = np.zeros(n)
            v[i] = 1.0
            v[j] = sign
            dirs.append(v / math.sqrt(2.0))
    return np.array(dirs).reshape(-1, n)


ENUMERATION_LIMIT = 200_000


def diagonal_template_sets(n: int, count: int, seed: int = 0) -> list[TemplateSet]:
    """Static sets drawn from axis and diagonal directions, each with at least one diagonal.

    The candidate pool is every nonsingular ``n``-subset of axis plus diagonal
    directions, in lexicographic order. When ``count`` is below the pool size
    the first ``count`` of a seed-shuffled order are returned. Pools too large
    to enumerate (``n >= 6``) are sampled without replacement instead.
    """
    if count < 1:
        raise ValueError("count must be positive")
    pool_dirs = np.vstack([np.eye(n), diagonal_directions(n)])
    m = len(pool_dirs)
    rng = np.random.default_rng(seed)

    def valid(idx) -> bool:
        return max(idx) >= n and abs(np.linalg.det(pool_dirs[list(idx)])) > SINGULAR_TOL

    if math.comb(m, n) <= ENUMERATION_LIMIT:
        pool = [idx for idx in itertools.combinations(range(m), n) if valid(idx)]
        if count > len(pool):
            raise ValueError(f"only {len(pool)} diagonal template sets exist in dimension {n}, "
                             f"requested {count}")
        if count < len(pool):
            order = rng.permutation(len(pool))
            pool = [pool[i] for i in order[:count]]
        chosen = pool
    else:
        chosen, seen = [], set()
        while len(chosen) < count:
            idx = tuple(sorted(rng.choice(m, size=n, replace=False).tolist()))
            if idx not in seen and valid(idx):
                seen.add(idx)
                chosen.append(idx)
    return [TemplateSet(pool_dirs[list(idx)], "diagonal", 0) for idx in chosen]


def random_template_sets(n: int, count: int, seed: int = 0) -> list[TemplateSet]:
    """Sets of ``n`` directions uniform on the unit sphere, resampled until ``|det| > 1e-6``."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        D = rng.standard_normal((n, n))
        D /= np.linalg.norm(D, axis=1)[:, None]
        if abs(np.linalg.det(D)) > RANDOM_DET_TOL:
            out.append(TemplateSet(D, "random", 0))
    return out


def assemble_active_templates(history: Sequence[TemplateSet], k: int, l_lin: int, l_pca: int,
                              initial: TemplateSet | None = None) -> list[TemplateSet]:
    """Template sets in force at step ``k``.

    The initial (axis) set is always first, followed by linear-approximation
    sets born in ``[k - l_lin + 1, k]`` and PCA sets born in
    ``[k - l_pca + 1, k]``, each group oldest first.
    """
    active = [] if initial is None else [initial]
    for origin, life in (("linapp", l_lin), ("pca", l_pca)):
        group = [t for t in history if t.origin == origin and k - life < t.birth_step <= k]
        active.extend(sorted(group, key=lambda t: t.birth_step))
    return active
