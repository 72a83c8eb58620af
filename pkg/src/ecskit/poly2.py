"""Dense polynomials in two real variables.

Used to represent connection coefficients, Ricci tensors and the tensor
``phi`` of the d = 2 family exactly, so that every derivative needed by the
curvature engine is available in closed form.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P


class Poly2:
    """p(x, y) = sum_ij c[i, j] x**i y**j."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        self.c = _trim(c)

    @classmethod
    def zero(cls):
        return cls([[0.0]])

    @classmethod
    def const(cls, value):
        return cls([[float(value)]])

    @classmethod
    def x(cls):
        return cls([[0.0], [1.0]])

    @classmethod
    def y(cls):
        return cls([[0.0, 1.0]])

    @property
    def degree(self):
        nz = np.argwhere(self.c != 0)
        return int(nz.sum(axis=1).max()) if len(nz) else 0

    def __call__(self, x, y):
        return P.polyval2d(x, y, self.c)

    def deriv(self, axis, m=1):
        if m == 0:
            return self
        c = self.c
        if c.shape[axis] <= m:
            return Poly2.zero()
        return Poly2(P.polyder(c, m, axis=axis))

    def grad(self):
        return self.deriv(0), self.deriv(1)

    def __add__(self, other):
        other = _as_poly(other)
        a, b = _pad(self.c, other.c)
        return Poly2(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Poly2(-self.c)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return Poly2(self.c * float(other))
        other = _as_poly(other)
        a, b = self.c, other.c
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
        for i, j in zip(*np.nonzero(a)):
            out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
        return Poly2(out)

    __rmul__ = __mul__

    def is_zero(self, tol=0.0):
        return bool(np.all(np.abs(self.c) <= tol))

    def to_list(self):
        return self.c.tolist()

    def __repr__(self):
        return f"Poly2({self.c.tolist()!r})"


def _as_poly(p):
    return p if isinstance(p, Poly2) else Poly2.const(p)


def _pad(a, b):
    shape = (max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1]))
    out_a = np.zeros(shape)
    out_b = np.zeros(shape)
    out_a[: a.shape[0], : a.shape[1]] = a
    out_b[: b.shape[0], : b.shape[1]] = b
    return out_a, out_b


def _trim(c):
    rows = np.nonzero(np.any(c != 0, axis=1))[0]
    cols = np.nonzero(np.any(c != 0, axis=0))[0]
    if len(rows) == 0:
        return np.zeros((1, 1))
    return c[: rows[-1] + 1, : cols[-1] + 1].copy()


def monomials(degree):
    """Exponent pairs (i, j) with i + j <= degree, graded order."""
    return [(i, d - i) for d in range(degree + 1) for i in range(d, -1, -1)]


def from_monomials(degree, values):
    c = np.zeros((degree + 1, degree + 1))
    for (i, j), v in zip(monomials(degree), values):
        c[i, j] = v
    return Poly2(c)
