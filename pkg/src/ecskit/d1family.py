"""Metrics kappa dt^2 + dt ds + delta with kappa(t, s, v) = f(t)<v,v> + <Av,v>.

Coordinates are ordered (t, s, v^1, ..., v^{n-2}).  The symmetric product
``dt ds`` contributes 1/2 to each of g_ts and g_st, so the (t, s) block is
``[[kappa, 1/2], [1/2, 0]]`` with determinant -1/4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chartcalc
from .chartcalc import MetricField, ToleranceProfile
from .periodic import PolyFunction, TrigSeries, function_from_dict


class InvalidDataError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConsistencyError(RuntimeError):
    """Two independent computations that must agree did not."""


@dataclass
class D1Data:
    f: object
    gram: np.ndarray
    A: np.ndarray
    interval: tuple[float, float] = (-np.inf, np.inf)
    period: float | None = None

    def __post_init__(self):
        self.gram = np.atleast_2d(np.asarray(self.gram, dtype=float))
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if self.period is None and isinstance(self.f, TrigSeries):
            self.period = self.f.period

    @property
    def n(self):
        return self.gram.shape[0] + 2

    @property
    def v_signature(self):
        return chartcalc.signature_of(self.gram)

    @property
    def signature(self):
        plus, minus = self.v_signature
        return plus + 1, minus + 1

    def to_dict(self):
        return {
            "f": self.f.to_dict(),
            "gram": self.gram.tolist(),
            "A": self.A.tolist(),
            "interval": [_enc(self.interval[0]), _enc(self.interval[1])],
            "period": self.period,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d):
        lo, hi = d.get("interval", [None, None])
        return cls(
            function_from_dict(d["f"]),
            np.array(d["gram"], dtype=float),
            np.array(d["A"], dtype=float),
            (_dec(lo, -np.inf), _dec(hi, np.inf)),
            d.get("period"),
        )


def _enc(x):
    return None if not np.isfinite(x) else float(x)


def _dec(x, default):
    return default if x is None else float(x)


def validate(data, tol=1e-10, samples=64):
    """List of violated requirements; empty when the data is admissible."""
    out = []
    G, A = data.gram, data.A
    m = G.shape[0]
    if G.shape != (m, m) or A.shape != (m, m):
        out.append(f"gram and A must be square of the same size, got {G.shape} and {A.shape}")
        return out
    if m + 2 < 4:
        out.append(f"n = {m + 2} must be at least 4")
    if not np.allclose(G, G.T, atol=tol):
        out.append("gram is not symmetric")
    elif np.linalg.cond(G) > 1e12:
        out.append("gram is degenerate")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A).max() <= tol:
        out.append("A = 0")
    if abs(np.trace(A)) > tol * scale * m:
        out.append(f"trace A != 0 (trace = {np.trace(A):.3g})")
    if np.abs(A.T @ G - G @ A).max() > tol * scale:
        out.append("A is not self-adjoint relative to gram")
    lo, hi = data.interval
    if not lo < hi:
        out.append(f"empty interval {data.interval}")
    if not callable(data.f) or not hasattr(data.f, "deriv"):
        out.append("f must be evaluable with derivatives")
    elif data.period is not None:
        if not data.period > 0:
            out.append("period must be positive")
        else:
            t = np.linspace(0.0, data.period, samples, endpoint=False)
            if np.abs(data.f(t + data.period) - data.f(t)).max() > 1e-9:
                out.append("f is not periodic with the stated period")
    return out


def build_metric(data):
    problems = validate(data)
    if problems:
        raise InvalidDataError(problems)
    G = data.gram
    M = G @ data.A
    M = 0.5 * (M + M.T)
    n = data.n
    f = data.f
    f1, f2 = f.deriv(1), f.deriv(2)
    lo, hi = data.interval

    def _check(t):
        if np.any((t <= lo) | (t >= hi)):
            raise chartcalc.ChartDomainError(f"t outside the interval {data.interval}")

    def metric(X):
        X = np.atleast_2d(X)
        t, v = X[:, 0], X[:, 2:]
        _check(t)
        g = np.zeros((len(X), n, n))
        vGv = np.einsum("na,ab,nb->n", v, G, v)
        vMv = np.einsum("na,ab,nb->n", v, M, v)
        g[:, 0, 0] = f(t) * vGv + vMv
        g[:, 0, 1] = g[:, 1, 0] = 0.5
        g[:, 2:, 2:] = G
        return g

    def jet(X):
        X = np.atleast_2d(X)
        t, v = X[:, 0], X[:, 2:]
        _check(t)
        N = len(X)
        g = metric(X)
        dg = np.zeros((N, n, n, n))
        ddg = np.zeros((N, n, n, n, n))
        Gv, Mv = v @ G, v @ M
        vGv = np.einsum("na,na->n", v, Gv)
        ft, f1t, f2t = f(t), f1(t), f2(t)
        dg[:, 0, 0, 0] = f1t * vGv
        dg[:, 0, 0, 2:] = 2 * ft[:, None] * Gv + 2 * Mv
        ddg[:, 0, 0, 0, 0] = f2t * vGv
        ddg[:, 0, 0, 0, 2:] = 2 * f1t[:, None] * Gv
        ddg[:, 0, 0, 2:, 0] = ddg[:, 0, 0, 0, 2:]
        ddg[:, 0, 0, 2:, 2:] = 2 * ft[:, None, None] * G + 2 * M
        return g, dg, ddg

    return MetricField(n, data.signature, metric, jet, name="d1")


def kappa(data, t, v):
    v = np.asarray(v, dtype=float)
    return float(data.f(t)) * float(v @ data.gram @ v) + float((data.A @ v) @ data.gram @ v)


def default_grid(data, per_axis=5, half_width=1.0, center=None):
    """Box grid around a base point away from the interval boundary."""
    if center is None:
        lo, hi = data.interval
        t0 = 0.3 if not (np.isfinite(lo) or np.isfinite(hi)) else 0.5 * (lo + hi)
        center = np.r_[t0, 0.0, 0.2 * np.ones(data.n - 2)]
    hw = np.full(data.n, half_width)
    lo, hi = data.interval
    if np.isfinite(lo) and np.isfinite(hi):
        hw[0] = min(hw[0], 0.4 * (hi - lo))
    return chartcalc.box_grid(center, hw, per_axis)


def local_symmetry_dichotomy(data, prof, *, f_tol=1e-9):
    """'symmetric' or 'essentially-conformally-symmetric'.

    The curvature verdict (|nabla R| against ``prof.tol_second``) is
    cross-checked against the spread of f over the grid's t-values; a
    disagreement means the engine is broken and raises ConsistencyError.
    """
    field_ = build_metric(data)
    res = chartcalc.local_symmetry_residual(field_, prof)
    symmetric = res < prof.tol_second
    ts = np.unique(prof.grid[:, 0])
    fv = data.f(ts)
    f_const = float(np.ptp(fv)) <= f_tol if len(ts) > 1 else data.f.is_constant(f_tol)
    if symmetric != f_const:
        raise ConsistencyError(
            f"|nabla R| = {res:.3g} says {'symmetric' if symmetric else 'not symmetric'} "
            f"but f spread over the grid is {float(np.ptp(fv)):.3g}"
        )
    return "symmetric" if symmetric else "essentially-conformally-symmetric"


def random_self_adjoint_traceless(rng, gram, min_norm=1e-6):
    """Random nonzero traceless A with A^T gram = gram A."""
    m = gram.shape[0]
    ginv = np.linalg.inv(gram)
    while True:
        S = rng.normal(size=(m, m))
        S = 0.5 * (S + S.T)
        A = ginv @ S
        A = A - np.trace(A) / m * np.eye(m)
        if np.linalg.norm(A) > min_norm:
            return A


def random_trig(rng, period=2 * np.pi, terms=3):
    return TrigSeries(period, rng.normal(), rng.normal(size=terms) / 2, rng.normal(size=terms) / 2)


def random_d1data(rng, n=None):
    """Randomized admissible data: random gram signature, A and trig f."""
    if n is None:
        n = int(rng.choice([4, 5, 6]))
    m = n - 2
    signs = rng.choice([-1.0, 1.0], size=m)
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    gram = Q @ np.diag(signs * rng.uniform(0.5, 2.0, size=m)) @ Q.T
    gram = 0.5 * (gram + gram.T)
    A = random_self_adjoint_traceless(rng, gram)
    return D1Data(random_trig(rng), gram, A)


def sine_example(n=4, constant=None):
    """f = sin t (or a constant), A = diag(1, -1, 0, ...), gram = identity."""
    m = n - 2
    A = np.zeros((m, m))
    A[0, 0], A[1, 1] = 1.0, -1.0
    f = TrigSeries(2 * np.pi, sin=[1.0]) if constant is None else PolyFunction([constant])
    return D1Data(f, np.eye(m), A)


def _check(value, tol, ok=None):
    value = float(value) if value is not None else None
    return {"value": value, "tol": tol, "ok": bool(value < tol if ok is None else ok)}


def run_suite(data, prof, transported=4):
    """Every local invariant of the family on ``prof.grid``.

    Returns a report dict with one entry per check (value, tolerance, ok)
    and an overall ``passed`` flag.
    """
    from . import olszak

    field_ = build_metric(data)
    summ = chartcalc.survey(field_, prof).summary()
    fibers = olszak.fibers_on_grid(field_, prof)
    par = olszak.nullity_parallel_check(field_, fibers[:transported], prof)
    dims = sorted({f.dim for f in fibers})
    t1, t2 = prof.tol_first, prof.tol_second
    checks = {
        "scalar": _check(summ["max_abs_scalar"], t1),
        "nabla_weyl": _check(summ["max_nabla_weyl"], t2),
        "harmonic_curvature": _check(summ["max_codazzi"], t2),
        "semisymmetry": _check(summ["max_semisymmetry"], t2),
        "ricci_recurrence": _check(summ["max_ricci_recurrence"], t2),
        "ricci_rank": {"value": summ["max_ricci_rank"], "tol": 2, "ok": summ["max_ricci_rank"] <= 2},
        "weyl_nonzero": {"value": summ["min_weyl_norm"], "tol": t2, "ok": summ["min_weyl_norm"] > t2},
        "olszak_dimension": {"value": dims, "tol": [1], "ok": dims == [1]},
        "olszak_nullity": _check(par["nullity"], t1),
        "olszak_parallelism": _check(par["parallelism"], t2),
        "signature": {
            "value": list(data.signature), "tol": None,
            "ok": chartcalc.check_signature(field_, prof),
        },
    }
    verdict = local_symmetry_dichotomy(data, prof)
    return {
        "n": data.n,
        "points": summ["points"],
        "checks": checks,
        "max_nabla_riem": summ["max_nabla_riem"],
        "classification": "locally symmetric" if verdict == "symmetric" else "ECS, d=1",
        "passed": all(c["ok"] for c in checks.values()),
    }
