"""Range enclosure of polynomials over the unit box via Bernstein coefficients.

Every value of a polynomial on ``[0, 1]^n`` is a convex combination of its
Bernstein coefficients, so the extreme coefficients bracket its range. Bounds
are exact in real arithmetic; floating-point rounding is not directed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .poly import MultiPoly, multi_degree, to_dense


@lru_cache(maxsize=None)
def _pascal(nmax: int) -> np.ndarray:
    table = np.zeros((nmax + 1, nmax + 1))
    for i in range(nmax + 1):
        table[i, 0] = 1.0
        for j in range(1, i + 1):
            table[i, j] = table[i - 1, j - 1] + table[i - 1, j]
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _basis_change(d: int) -> np.ndarray:
    """Matrix M with b = M @ a for a univariate power -> Bernstein change of degree d.

    M[i, j] = C(i, j) / C(d, j) for j <= i, else 0.
    """
    C = _pascal(d)
    M = np.zeros((d + 1, d + 1))
    for i in range(d + 1):
        for j in range(i + 1):
            M[i, j] = C[i, j] / C[d, j]
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class BernsteinTensor:
    degree: tuple[int, ...]
    coeffs: np.ndarray

    def upper(self) -> float:
        return float(self.coeffs.max())

    def lower(self) -> float:
        return float(self.coeffs.min())

    def corner(self, vertex) -> float:
        """Coefficient at a 0/1 vertex of the box; equals the polynomial value there."""
        idx = tuple(d if v else 0 for d, v in zip(self.degree, vertex))
        return float(self.coeffs[idx])


def dense_to_bernstein(a: np.ndarray, lead: int = 0) -> np.ndarray:
    """Bernstein coefficients of a dense power-basis tensor.

    The first ``lead`` axes are batch axes and pass through untouched; the
    degree along every other axis is its length minus one.
    """
    b = np.asarray(a, dtype=float)
    for axis in range(lead, b.ndim):
        d = b.shape[axis] - 1
        if d == 0:
            continue
        b = np.moveaxis(np.tensordot(_basis_change(d), b, axes=([1], [axis])), 0, axis)
    return b


def power_to_bernstein(p: MultiPoly) -> BernsteinTensor:
    deg = multi_degree(p)
    return BernsteinTensor(deg, dense_to_bernstein(to_dense(p, deg)))


def opt_box_upper(p: MultiPoly) -> float:
    """Upper bound of ``p`` over the unit box."""
    return power_to_bernstein(p).upper()


def opt_box_lower(p: MultiPoly) -> float:
    """Lower bound of ``p`` over the unit box; equals ``-opt_box_upper(-p)``."""
    return power_to_bernstein(p).lower()


def split(b: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """de Casteljau bisection at 1/2 along ``axis``.

    Returns the Bernstein coefficients of the two halves, each re-parametrized
    over ``[0, 1]`` in that coordinate.
    """
    work = np.moveaxis(np.array(b, dtype=float), axis, 0)
    d = work.shape[0] - 1
    left = [work[0].copy()]
    right = [work[d].copy()]
    for r in range(1, d + 1):
        work = 0.5 * (work[:-1] + work[1:])
        left.append(work[0].copy())
        right.append(work[-1].copy())
    lo = np.moveaxis(np.stack(left), 0, axis)
    hi = np.moveaxis(np.stack(right[::-1]), 0, axis)
    return lo, hi


def subdivide(b: np.ndarray, depth: int, lead: int = 0) -> list[np.ndarray]:
    """Split the box ``depth`` times, always along the widest side (lowest index on ties).

    All pieces are split in the same order, so widths stay uniform across
    pieces and one axis schedule serves every piece.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    nbox = b.ndim - lead
    widths = [1.0] * nbox
    pieces = [np.asarray(b, dtype=float)]
    for _ in range(depth):
        k = int(np.argmax(widths))
        widths[k] /= 2
        nxt = []
        for piece in pieces:
            nxt.extend(split(piece, lead + k))
        pieces = nxt
    return pieces


def opt_box_upper_subdivided(p: MultiPoly, depth: int) -> float:
    """Upper bound from the Bernstein coefficients of ``2**depth`` sub-boxes."""
    pieces = subdivide(power_to_bernstein(p).coeffs, depth)
    return max(float(piece.max()) for piece in pieces)


def opt_box_lower_subdivided(p: MultiPoly, depth: int) -> float:
    pieces = subdivide(power_to_bernstein(p).coeffs, depth)
    return min(float(piece.min()) for piece in pieces)
