"""Translation operators, the integrality gate and the isometry group action.

Given a septuple with period p, ``B(t) = diag(alpha, beta, gamma)`` repeated j
times and ``A = diag(a, b, c)`` repeated j times satisfy ``B' + B^2 = f + A``,
so every solution of ``u' = B u`` solves ``u'' = f u + A u``.  Translation by
the period acts on the solution space L of ``u' = B u``; in the basis of
initial conditions at t = 0 it is the fundamental matrix propagated back to
t = -p, whose eigenvalues are ``exp(-integral of alpha)`` and so on.

The group G = Z x R x E (E the solutions of ``u'' = f u + A u``) acts on the
chart (t, s, v) of ``kappa dt^2 + dt ds + <dv, dv>`` by

    (k, q, u) . (t, s, v) = (t + k p, s + q - <u'(t), 2 v + u(t)>, v + u(t)).

Composition follows from this formula; the constant term that appears is
the Wronskian ``<u2', u1> - <u1', u2>``, which is t-independent because A is
self-adjoint:

    g1 g2 = (k1 + k2, q1 + q2 + <u2'(0), w(0)> - <w'(0), u2(0)>, u2 + w)

where ``w(t) = u1(t + k2 p)`` is again a solution, with initial state
``M^k2 y1`` for the one-period monodromy M of the state system.  The inverse
of (k, q, u) is (-k, -q, -u(. - k p)).
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import chartcalc, d1family, olszak, riccati

log = logging.getLogger(__name__)

ODE_TOL = 1e-12
CROSSCHECK_TOL = 1e-10
SCHEMA_VERSION = "1.0"
LIMITATION = (
    "only the integrality condition on the translation operator is checked; "
    "the remaining conditions for a cocompact lattice, the lattice itself and "
    "the invariant functional are not constructed"
)


class IntegrationError(RuntimeError):
    pass


class NonPeriodicDataError(ValueError):
    pass


@dataclass
class BlockProfile:
    septuple: riccati.Septuple
    j: int

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"j must be a positive integer, got {self.j}")

    @property
    def dim(self):
        return 3 * self.j

    @property
    def period(self):
        return self.septuple.period

    def diag(self, t):
        """Diagonal of B(t), shape (..., 3j)."""
        s = self.septuple
        vals = np.stack([s.alpha(t), s.beta(t), s.gamma(t)], axis=-1)
        return np.tile(vals, self.j)

    def B(self, t):
        return np.diag(self.diag(t))

    @property
    def A(self):
        s = self.septuple
        return np.diag(np.tile([s.a, s.b, s.c], self.j))

    def residual(self, N=riccati.GRID):
        """max over the grid of |B' + B^2 - f - A| (diagonal entries)."""
        return float(max(self.septuple.residuals(N)))


def build_blocks(septuple, j):
    bp = BlockProfile(septuple, j)
    r = bp.residual()
    if not r < riccati.RESIDUAL_TOL:
        raise ValueError(f"B' + B^2 - f - A residual {r:.3g} exceeds {riccati.RESIDUAL_TOL:.0e}")
    if abs(np.trace(bp.A)) > 1e-12 * max(1.0, np.abs(bp.A).max()):
        raise ValueError("trace A != 0")
    return bp


@dataclass
class TranslationOperator:
    matrix: np.ndarray
    charpoly: np.ndarray
    crosscheck: float

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    def eigenvalues(self):
        return np.sort(np.linalg.eigvals(self.matrix).real)


def _propagate(rhs, y0, t_end, max_step=np.inf):
    sol = solve_ivp(
        rhs, (0.0, t_end), y0, method="DOP853", rtol=ODE_TOL, atol=ODE_TOL, max_step=max_step,
    )
    if not sol.success:
        raise IntegrationError(sol.message)
    return sol


def translation_operator(bp):
    """Backward fundamental matrix of u' = B u over one period, cross-checked."""
    m = bp.dim

    def rhs(t, y):
        return (bp.diag(t)[:, None] * y.reshape(m, m)).ravel()

    y0 = np.eye(m).ravel()
    first = _propagate(rhs, y0, -bp.period)
    steps = np.abs(np.diff(first.t))
    second = _propagate(rhs, y0, -bp.period, max_step=0.5 * float(steps.max()))
    T = first.y[:, -1].reshape(m, m)
    T2 = second.y[:, -1].reshape(m, m)
    diff = float(np.abs(T - T2).max())
    if diff > CROSSCHECK_TOL * max(1.0, np.abs(T).max()):
        raise IntegrationError(f"step-halving cross-check disagrees by {diff:.3g}")
    return TranslationOperator(T, np.poly(T), diff)


@dataclass
class GateResult:
    passed: bool
    nearest: list
    deviation: float
    constant_term: int


def charpoly_gate(T, tol=1e-6):
    """Integer characteristic polynomial with constant term +-1."""
    coeffs = T.charpoly if isinstance(T, TranslationOperator) else np.poly(np.asarray(T))
    coeffs = np.real_if_close(coeffs)
    nearest = np.rint(coeffs)
    dev = float(np.abs(coeffs - nearest).max())
    const = int(nearest[-1])
    return GateResult(bool(dev < tol and abs(const) == 1), [int(c) for c in nearest], dev, const)


# ----------------------------------------------------------------------------
# group action


@dataclass(frozen=True)
class GroupElement:
    k: int
    q: float
    u0: np.ndarray
    udot0: np.ndarray

    def state(self):
        return np.r_[self.u0, self.udot0]

    @classmethod
    def from_state(cls, k, q, y):
        m = len(y) // 2
        return cls(int(k), float(q), np.asarray(y[:m], float), np.asarray(y[m:], float))

    @classmethod
    def identity(cls, m):
        return cls(0, 0.0, np.zeros(m), np.zeros(m))


class SolutionSpace:
    """Solutions of u'' = f u + A u for periodic D1 data, evaluated by integration."""

    def __init__(self, data):
        if data.period is None:
            raise NonPeriodicDataError("the group action needs periodic f")
        self.data = data
        self.period = float(data.period)
        self.m = data.gram.shape[0]
        self._cache = {}
        self.monodromy = self.fundamental(self.period)
        self._minv = np.linalg.inv(self.monodromy)

    def _rhs(self, t, y):
        m = self.m
        Y = y.reshape(2 * m, 2 * m)
        top, bottom = Y[:m], Y[m:]
        acc = float(self.data.f(t)) * top + self.data.A @ top
        return np.concatenate([bottom, acc]).ravel()

    def fundamental(self, t):
        """State transition matrix from 0 to t, |t| <= period."""
        key = float(t)
        if key not in self._cache:
            if key == 0.0:
                self._cache[key] = np.eye(2 * self.m)
            else:
                sol = _propagate(self._rhs, np.eye(2 * self.m).ravel(), key)
                self._cache[key] = sol.y[:, -1].reshape(2 * self.m, 2 * self.m)
        return self._cache[key]

    def power(self, k):
        M = self.monodromy if k >= 0 else self._minv
        return np.linalg.matrix_power(M, abs(int(k)))

    def state_at(self, y0, t):
        """(u(t), u'(t)) stacked, for the solution with initial state y0."""
        n, tau = divmod(float(t), self.period)
        return self.fundamental(tau) @ (self.power(int(n)) @ np.asarray(y0, float))

    def inner(self, x, y):
        return float(x @ self.data.gram @ y)


def group_compose(g1, g2, space):
    m = space.m
    y1 = space.power(g2.k) @ g1.state()
    y2 = g2.state()
    w = space.inner(y2[m:], y1[:m]) - space.inner(y1[m:], y2[:m])
    return GroupElement.from_state(g1.k + g2.k, g1.q + g2.q + w, y1 + y2)


def group_inverse(g, space):
    y = space.power(-g.k) @ g.state()
    return GroupElement.from_state(-g.k, -g.q, -y)


def group_act(g, x, space, velocity_term=True):
    """(k, q, u) . (t, s, v); ``velocity_term=False`` drops the <u', .> term."""
    x = np.asarray(x, dtype=float)
    t, s, v = x[0], x[1], x[2:]
    m = space.m
    y = space.state_at(g.state(), t)
    u, ud = y[:m], y[m:]
    s_new = s + g.q
    if velocity_term:
        s_new -= space.inner(ud, 2 * v + u)
    return np.r_[t + g.k * space.period, s_new, v + u]


def random_element(rng, space, k_range=2, scale=0.5):
    m = space.m
    return GroupElement(
        int(rng.integers(-k_range, k_range + 1)),
        float(rng.normal()),
        scale * rng.normal(size=m),
        scale * rng.normal(size=m),
    )


def isometry_residual(g, space, field_, points, h=1e-4, velocity_term=True):
    """max over points of |J^T g(phi(x)) J - g(x)|, J by Richardson differencing."""
    worst = 0.0
    for x in np.atleast_2d(points):
        n = len(x)
        J = np.empty((n, n))
        for r in range(n):
            e = np.zeros(n)
            e[r] = h

            def act(y):
                return group_act(g, y, space, velocity_term)

            d1 = (act(x + e) - act(x - e)) / (2 * h)
            d2 = (act(x + 2 * e) - act(x - 2 * e)) / (4 * h)
            J[:, r] = (4 * d1 - d2) / 3
        pulled = J.T @ field_(group_act(g, x, space, velocity_term)) @ J
        worst = max(worst, float(np.abs(pulled - field_(x)).max()))
    return worst


# ----------------------------------------------------------------------------
# certificate


def septuple_digest(s):
    blob = json.dumps(s.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def d1data_from_blocks(bp, gram=None):
    s = bp.septuple
    m = bp.dim
    gram = np.eye(m) if gram is None else np.asarray(gram, dtype=float)
    return d1family.D1Data(s.f, gram, bp.A, period=s.period)


@dataclass
class CompactnessCertificate:
    kl: list
    j: int
    p: float
    n: int
    roots: list | None = None
    septuple_digest: str | None = None
    septuple: dict | None = None
    riccati_residuals: list | None = None
    spec_error: float | None = None
    floquet_agreement: float | None = None
    charpoly: dict | None = None
    detT: float | None = None
    gate_verdict: str | None = None
    metric_checks: dict | None = None
    isometry_residuals: dict | None = None
    signature: list | None = None
    signature_checked: bool = False
    stages: list = field(default_factory=list)
    failed_stage: str | None = None
    error: str | None = None
    verdict: str = "fail"
    limitation: str = LIMITATION
    schema_version: str = SCHEMA_VERSION

    def to_json(self):
        return json.dumps(_plain(self.__dict__), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class CertifyTolerances:
    riccati: float = 1e-8
    floquet: float = 1e-8
    charpoly: float = 1e-6
    det: float = 1e-8
    isometry: float = 1e-6
    group: float = 1e-10
    first: float = 1e-8
    second: float = 1e-6


class _Stage:
    def __init__(self, cert, name):
        self.cert, self.name = cert, name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def record(self, residual, tol, ok):
        self.cert.stages.append(
            {"stage": self.name, "residual": residual, "tolerance": tol, "ok": bool(ok)}
        )
        log.info("%-12s residual %.3e tol %.1e %s", self.name, residual, tol, "ok" if ok else "FAIL")
        if not ok and self.cert.failed_stage is None:
            self.cert.failed_stage = self.name

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, KeyboardInterrupt):
            self.cert.stages.append({"stage": self.name, "residual": None, "tolerance": None, "ok": False})
            if self.cert.failed_stage is None:
                self.cert.failed_stage = self.name
            self.cert.error = f"{type(exc).__name__}: {exc}"
            log.info("%-12s error: %s", self.name, exc)
            return True
        return False


def certify_compact(k, l, j, p, *, tol=None, seed=0, metric_points=8, group_samples=3, gram=None):
    """Run the constructive pipeline and collect every residual.

    Stages: (k, l) validation, roots of P, septuple solve, block matrices,
    translation operator, integrality gate, metric checks on the induced D1
    data (n = 3j + 2) and isometry/group-law checks of the action.  Invalid
    (k, l) raise ``InvalidKLError`` before any certificate is produced.
    """
    tol = tol or CertifyTolerances()
    problem = riccati.validate_kl(k, l)
    if problem:
        raise riccati.InvalidKLError(problem)
    cert = CompactnessCertificate([int(k), int(l)], int(j), float(p), 3 * int(j) + 2)

    with _Stage(cert, "roots") as st:
        roots = riccati.roots_of_P(k, l)
        cert.roots = roots.as_array().tolist()
        st.record(abs(float(np.prod(roots.as_array())) - 1.0), 1e-12, roots.in_U())
    if cert.failed_stage:
        return cert

    with _Stage(cert, "septuple") as st:
        sept = riccati.solve_septuple(roots, p)
        res = sept.residuals()
        sp = riccati.spec(sept)
        cert.septuple = sept.to_dict()
        cert.septuple_digest = septuple_digest(sept)
        cert.riccati_residuals = list(res)
        cert.spec_error = float(np.abs(sp.triple.as_array() - roots.as_array()).max())
        st.record(max(res), tol.riccati, max(res) < tol.riccati and cert.spec_error < tol.floquet)
    if cert.failed_stage:
        return cert

    with _Stage(cert, "blocks") as st:
        bp = build_blocks(sept, j)
        st.record(bp.residual(), tol.riccati, bp.residual() < tol.riccati)

    with _Stage(cert, "translation") as st:
        T = translation_operator(bp)
        expected = np.sort(np.tile(riccati.spec(sept).triple.as_array(), j))
        agree = float(np.abs(T.eigenvalues() - expected).max())
        cert.floquet_agreement = agree
        cert.detT = T.det
        st.record(agree, tol.floquet, agree < tol.floquet)

    with _Stage(cert, "gate") as st:
        gate = charpoly_gate(T, tol.charpoly)
        reference = np.poly(np.diag(np.tile(roots.as_array(), j)))
        cert.charpoly = {
            "computed": np.real(T.charpoly).tolist(),
            "nearest_integer": gate.nearest,
            "residual": gate.deviation,
            "matches_P": bool(np.abs(np.asarray(gate.nearest) - np.rint(reference)).max() == 0),
        }
        det_ok = abs(cert.detT - 1.0) < tol.det
        cert.gate_verdict = "pass" if gate.passed and det_ok else "fail"
        st.record(gate.deviation, tol.charpoly, gate.passed and det_ok and cert.charpoly["matches_P"])

    with _Stage(cert, "metric") as st:
        data = d1data_from_blocks(bp, gram)
        field_ = d1family.build_metric(data)
        center = np.r_[0.3 * p, 0.0, 0.2 * np.ones(data.n - 2)]
        grid = chartcalc.random_grid(center, 0.5, metric_points, seed)
        prof = chartcalc.ToleranceProfile(grid, tol_first=tol.first, tol_second=tol.second)
        summ = chartcalc.survey(field_, prof).summary()
        fibers = olszak.fibers_on_grid(field_, prof)
        dims = sorted({f.dim for f in fibers})
        null = max(f.nullity_residual for f in fibers if f.nullity_residual is not None)
        cert.signature = list(field_.signature)
        cert.signature_checked = chartcalc.check_signature(field_, prof)
        cert.metric_checks = {**summ, "olszak_dimensions": dims, "olszak_nullity": null}
        worst = max(summ["max_nabla_weyl"], summ["max_abs_scalar"], summ["max_codazzi"])
        ok = (
            summ["max_nabla_weyl"] < tol.second
            and summ["max_abs_scalar"] < tol.first
            and summ["max_codazzi"] < tol.second
            and summ["max_ricci_recurrence"] < tol.second
            and summ["max_ricci_rank"] <= 2
            and summ["min_weyl_norm"] > tol.second
            and dims == [1]
            and null < tol.first
            and cert.signature_checked
        )
        st.record(worst, tol.second, ok)

    with _Stage(cert, "isometry") as st:
        space = SolutionSpace(data)
        rng = np.random.default_rng(seed)
        iso, law = [], []
        pts = grid[: min(3, len(grid))]
        for _ in range(group_samples):
            g1, g2, g3 = (random_element(rng, space) for _ in range(3))
            iso.append(isometry_residual(g1, space, field_, pts))
            lhs = group_compose(group_compose(g1, g2, space), g3, space)
            rhs = group_compose(g1, group_compose(g2, g3, space), space)
            law.append(float(np.abs(lhs.state() - rhs.state()).max() + abs(lhs.q - rhs.q)))
            x = pts[0]
            ginv = group_inverse(g1, space)
            law.append(float(np.abs(group_act(g1, group_act(ginv, x, space), space) - x).max()))
        cert.isometry_residuals = {"isometry": max(iso), "group_law": max(law)}
        st.record(max(iso), tol.isometry, max(iso) < tol.isometry and max(law) < tol.group)

    cert.verdict = "pass" if cert.failed_stage is None and all(s["ok"] for s in cert.stages) else "fail"
    return cert
