"""Sparse multivariate polynomials in the power basis.

A polynomial is a mapping from exponent tuples to float coefficients. Values
are immutable; every operation returns a new polynomial in canonical form
(no zero coefficients stored).
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

Exps = tuple[int, ...]


class DimensionError(ValueError):
    """Raised when operands disagree on the number of variables."""


class MultiPoly:
    """Sparse polynomial over ``nvars`` real variables.

    >>> x, y = MultiPoly.variable(0, 2), MultiPoly.variable(1, 2)
    >>> (x + y) * (x - y) == x * x - y * y
    True
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Iterable[int], float] | None = None):
        if nvars < 1:
            raise ValueError(f"nvars must be positive, got {nvars}")
        canon: dict[Exps, float] = {}
        for exps, coeff in (terms or {}).items():
            key = tuple(int(e) for e in exps)
            if len(key) != nvars:
                raise DimensionError(f"exponent vector {key} has length {len(key)}, expected {nvars}")
            if any(e < 0 for e in key):
                raise ValueError(f"negative exponent in {key}")
            canon[key] = canon.get(key, 0.0) + float(coeff)
        object.__setattr__(self, "nvars", int(nvars))
        object.__setattr__(self, "_terms", {k: v for k, v in canon.items() if v != 0.0})

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    @classmethod
    def _raw(cls, nvars: int, terms: dict[Exps, float]) -> "MultiPoly":
        # trusted constructor: keys already validated
        p = object.__new__(cls)
        object.__setattr__(p, "nvars", nvars)
        object.__setattr__(p, "_terms", {k: v for k, v in terms.items() if v != 0.0})
        return p

    @classmethod
    def constant(cls, c: float, nvars: int) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, i: int, nvars: int) -> "MultiPoly":
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {tuple(exps): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[float], offset: float = 0.0) -> "MultiPoly":
        """Affine form ``offset + sum_j coeffs[j] * x_j``."""
        n = len(coeffs)
        terms: dict[Exps, float] = {(0,) * n: float(offset)}
        for j, c in enumerate(coeffs):
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = float(c)
        return cls(n, terms)

    @property
    def terms(self) -> dict[Exps, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"MultiPoly({self.nvars}, 0)"
        parts = []
        for exps, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}" for i, e in enumerate(exps) if e)
            parts.append(f"{c!r}*{mono}" if mono else repr(c))
        return f"MultiPoly({self.nvars}, {' + '.join(parts)})"

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise DimensionError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return MultiPoly.constant(float(other), self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scale(float(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = MultiPoly.constant(1.0, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c: float) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, {k: c * v for k, v in self._terms.items()})

    def __call__(self, x):
        return poly_eval(self, x)

    def to_json(self) -> list[dict]:
        return [{"coeff": c, "exps": list(e)} for e, c in sorted(self._terms.items())]

    @classmethod
    def from_json(cls, nvars: int, terms: Iterable[Mapping]) -> "MultiPoly":
        acc: dict[Exps, float] = {}
        for t in terms:
            key = tuple(int(e) for e in t["exps"])
            acc[key] = acc.get(key, 0.0) + float(t["coeff"])
        return cls(nvars, acc)


def poly_add(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    if p.nvars != q.nvars:
        raise DimensionError(f"nvars mismatch: {p.nvars} vs {q.nvars}")
    out = dict(p._terms)
    for k, v in q._terms.items():
        out[k] = out.get(k, 0.0) + v
    return MultiPoly._raw(p.nvars, out)


def poly_mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    if p.nvars != q.nvars:
        raise DimensionError(f"nvars mismatch: {p.nvars} vs {q.nvars}")
    out: dict[Exps, float] = {}
    q_items = list(q._terms.items())
    for ep, cp in p._terms.items():
        for eq, cq in q_items:
            key = tuple(a + b for a, b in zip(ep, eq))
            out[key] = out.get(key, 0.0) + cp * cq
    return MultiPoly._raw(p.nvars, out)


def poly_eval(p: MultiPoly, x) -> float | np.ndarray:
    """Evaluate ``p`` at a point of shape ``(n,)`` or a batch of shape ``(N, n)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (p.nvars,):
        raise DimensionError(f"point has shape {x.shape}, polynomial has {p.nvars} variables")
    acc = np.zeros(x.shape[:-1])
    for exps, c in p._terms.items():
        term = np.full(x.shape[:-1], c)
        for i, e in enumerate(exps):
            if e:
                term = term * x[..., i] ** e
        acc = acc + term
    return float(acc) if acc.ndim == 0 else acc


def multi_degree(p: MultiPoly) -> Exps:
    deg = [0] * p.nvars
    for exps in p._terms:
        for i, e in enumerate(exps):
            if e > deg[i]:
                deg[i] = e
    return tuple(deg)


def compose_affine(p: MultiPoly, a, G) -> MultiPoly:
    """Return ``q`` with ``q(alpha) = p(a + G @ alpha)``.

    Each original variable becomes the affine form ``a_i + G[i, :] @ alpha``;
    powers of these forms are cached so every distinct power is expanded once.
    """
    a = np.asarray(a, dtype=float)
    G = np.asarray(G, dtype=float)
    n = p.nvars
    if a.shape != (n,) or G.shape[0] != n or G.ndim != 2:
        raise DimensionError(f"affine map shapes {a.shape}, {G.shape} do not match {n} variables")
    m = G.shape[1]
    forms = [MultiPoly.linear(G[i], a[i]) for i in range(n)]
    one = MultiPoly.constant(1.0, m)
    powers: list[dict[int, MultiPoly]] = [{0: one, 1: forms[i]} for i in range(n)]

    def power(i: int, e: int) -> MultiPoly:
        cache = powers[i]
        if e not in cache:
            cache[e] = power(i, e - 1) * forms[i]
        return cache[e]

    out: dict[Exps, float] = {}
    for exps, c in p._terms.items():
        term = None
        for i, e in enumerate(exps):
            if e:
                f = power(i, e)
                term = f if term is None else term * f
        if term is None:
            key = (0,) * m
            out[key] = out.get(key, 0.0) + c
            continue
        for k, v in term._terms.items():
            out[k] = out.get(k, 0.0) + c * v
    return MultiPoly._raw(m, out)


def to_dense(p: MultiPoly, degree: Sequence[int] | None = None) -> np.ndarray:
    """Dense coefficient tensor of shape ``degree + 1`` (defaults to the multi-degree)."""
    deg = multi_degree(p) if degree is None else tuple(degree)
    arr = np.zeros(tuple(d + 1 for d in deg))
    for exps, c in p._terms.items():
        arr[exps] += c
    return arr


def eval_map(f: Sequence[MultiPoly], x) -> np.ndarray:
    """Apply a polynomial map componentwise; ``x`` may be a single point or a batch."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.asarray(poly_eval(fi, x)) for fi in f], axis=-1)
