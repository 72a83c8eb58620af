"""Truncated trigonometric series on a fixed period."""

from __future__ import annotations

import numpy as np


class TrigSeries:
    """f(t) = c0 + sum_k a_k cos(k w t) + b_k sin(k w t), with w = 2 pi / period.

    ``cos`` and ``sin`` hold the harmonics k = 1, 2, ...; both arrays have the
    same length.
    """

    def __init__(self, period, c0=0.0, cos=(), sin=()):
        if not period > 0:
            raise ValueError(f"period must be positive, got {period!r}")
        cos = np.asarray(cos, dtype=float).ravel()
        sin = np.asarray(sin, dtype=float).ravel()
        m = max(len(cos), len(sin))
        self.cos = np.zeros(m)
        self.sin = np.zeros(m)
        self.cos[: len(cos)] = cos
        self.sin[: len(sin)] = sin
        self.c0 = float(c0)
        self.period = float(period)

    @property
    def harmonics(self):
        return len(self.cos)

    @property
    def omega(self):
        return 2.0 * np.pi / self.period

    @classmethod
    def constant(cls, value, period=1.0):
        return cls(period, c0=value)

    @classmethod
    def from_samples(cls, values, period, harmonics=None):
        """Trigonometric interpolant of samples on ``t_j = j * period / N``.

        The Nyquist mode of an even-length grid is dropped, which makes the
        result real-valued and differentiable term by term.
        """
        values = np.asarray(values, dtype=float)
        N = len(values)
        F = np.fft.rfft(values) / N
        kmax = (N - 1) // 2
        if harmonics is not None:
            kmax = min(kmax, harmonics)
        return cls(period, F[0].real, 2.0 * F[1 : kmax + 1].real, -2.0 * F[1 : kmax + 1].imag)

    def grid(self, N):
        return np.arange(N) * (self.period / N)

    def samples(self, N):
        """Values on the uniform N-point grid of one period (FFT based)."""
        m = self.harmonics
        if N // 2 < m + 1:
            return self(self.grid(N))
        F = np.zeros(N // 2 + 1, dtype=complex)
        F[0] = self.c0
        F[1 : m + 1] = 0.5 * (self.cos - 1j * self.sin)
        return np.fft.irfft(F * N, n=N)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.harmonics == 0:
            return np.full(t.shape, self.c0)
        k = np.arange(1, self.harmonics + 1)
        phase = np.multiply.outer(t, k) * self.omega
        return self.c0 + np.cos(phase) @ self.cos + np.sin(phase) @ self.sin

    def deriv(self, m=1):
        out = self
        for _ in range(m):
            k = np.arange(1, out.harmonics + 1) * out.omega
            out = TrigSeries(out.period, 0.0, k * out.sin, -k * out.cos)
        return out

    def mean(self):
        return self.c0

    def integral(self):
        """Integral over one period."""
        return self.c0 * self.period

    def shift(self, t0):
        """The function t -> f(t + t0)."""
        k = np.arange(1, self.harmonics + 1) * self.omega * t0
        c, s = np.cos(k), np.sin(k)
        return TrigSeries(
            self.period,
            self.c0,
            self.cos * c + self.sin * s,
            self.sin * c - self.cos * s,
        )

    def is_constant(self, tol=0.0):
        return bool(np.all(np.abs(self.cos) <= tol) and np.all(np.abs(self.sin) <= tol))

    def __add__(self, other):
        if isinstance(other, TrigSeries):
            if not np.isclose(other.period, self.period, rtol=1e-14):
                raise ValueError("period mismatch")
            m = max(self.harmonics, other.harmonics)
            a = np.zeros((2, m))
            b = np.zeros((2, m))
            a[0, : self.harmonics], a[1, : other.harmonics] = self.cos, other.cos
            b[0, : self.harmonics], b[1, : other.harmonics] = self.sin, other.sin
            return TrigSeries(self.period, self.c0 + other.c0, a.sum(0), b.sum(0))
        return TrigSeries(self.period, self.c0 + float(other), self.cos, self.sin)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return TrigSeries(self.period, scalar * self.c0, scalar * self.cos, scalar * self.sin)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def to_dict(self):
        return {
            "family": "trig",
            "period": self.period,
            "c0": self.c0,
            "cos": self.cos.tolist(),
            "sin": self.sin.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["period"], d.get("c0", 0.0), d.get("cos", ()), d.get("sin", ()))

    def __repr__(self):
        return f"TrigSeries(period={self.period}, harmonics={self.harmonics})"


class PolyFunction:
    """Polynomial in t, exposing the same call/deriv surface as TrigSeries."""

    def __init__(self, coeffs):
        self.poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        self.period = None

    def __call__(self, t):
        return self.poly(np.asarray(t, dtype=float))

    def deriv(self, m=1):
        return PolyFunction(self.poly.deriv(m).coef)

    def is_constant(self, tol=0.0):
        return bool(np.all(np.abs(self.poly.coef[1:]) <= tol))

    def to_dict(self):
        return {"family": "polynomial", "coeffs": self.poly.coef.tolist()}

    def __repr__(self):
        return f"PolyFunction({self.poly.coef.tolist()})"


def function_from_dict(d):
    family = d.get("family")
    if family == "trig":
        return TrigSeries.from_dict(d)
    if family == "polynomial":
        return PolyFunction(d["coeffs"])
    raise ValueError(f"unknown function family {family!r}")
