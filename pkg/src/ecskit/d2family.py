"""Riemann extensions twisted by an area form: the d = 2 family.

Data on a surface chart Q (coordinates x^1, x^2): a torsion-free
projectively flat connection D, a D-parallel area form zeta, a sign epsilon,
a pseudo-Euclidean space V and a symmetric contravariant 2-tensor phi with

    div div phi + <rho^D, phi> = epsilon.

The metric on T*Q x V, coordinates (x^1, x^2, p_1, p_2, v^1, ...), is

    g = 2 dp_i dx^i - 2 p_k Gamma^k_ij dx^i dx^j - 2 tau - theta rho^D + <dv, dv>

with tau_jk = zeta_jl zeta_km phi^lm and theta(v) = <v, v>.

Every function of x is a polynomial (``Poly2``), except zeta which is stored
as ``scale * exp(q)`` with q polynomial, so the metric jet is exact.

Projective flatness of a surface connection is tested with the Cotton-type
tensor ``C_ijk = nabla_i P_jk - nabla_j P_ik`` of the projective Schouten
tensor ``P_ab = rho_(ab) - rho_[ab] / 3``; it vanishes identically exactly
when D is projectively flat.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np
from scipy.optimize import least_squares

from . import chartcalc
from .chartcalc import MetricField
from .d1family import InvalidDataError
from .poly2 import Poly2, from_monomials, monomials

R2 = range(2)
DATA_TOL = 1e-9
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _poly(p):
    return p if isinstance(p, Poly2) else Poly2(p)


def _ev(p, x):
    return p(x[:, 0], x[:, 1])


def _ev_tensor(polys, x, shape):
    """Evaluate a nested list of Poly2 with the given index shape at points x."""
    out = np.empty((len(x),) + shape)
    for idx in itertools.product(*(range(s) for s in shape)):
        p = polys
        for i in idx:
            p = p[i]
        out[(slice(None),) + idx] = _ev(p, x)
    return out


def _map(polys, fn, depth):
    if depth == 0:
        return fn(polys)
    return [_map(p, fn, depth - 1) for p in polys]


def _surface_points(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] < 2:
        raise chartcalc.ChartDomainError("surface points need two coordinates")
    return x[:, :2]


class SurfaceConnection:
    """Torsion-free connection with polynomial coefficients ``gamma[k][i][j]``."""

    def __init__(self, gamma, chart=((-1.0, 1.0), (-1.0, 1.0)), name=""):
        self.gamma = [[[_poly(gamma[k][i][j]) for j in R2] for i in R2] for k in R2]
        self.chart = tuple(tuple(float(c) for c in ax) for ax in chart)
        self.name = name
        for k in R2:
            if not (self.gamma[k][0][1] - self.gamma[k][1][0]).is_zero(1e-14):
                raise ValueError(f"connection has torsion: Gamma^{k + 1}_12 != Gamma^{k + 1}_21")

    @classmethod
    def flat(cls, chart=((-1.0, 1.0), (-1.0, 1.0))):
        return cls([[[Poly2.zero()] * 2] * 2] * 2, chart, "flat")

    @classmethod
    def projective_change(cls, base, pi, name=""):
        """Gamma + pi_i delta^k_j + pi_j delta^k_i for a polynomial 1-form pi."""
        G = [[[base.gamma[k][i][j] for j in R2] for i in R2] for k in R2]
        for k, i, j in itertools.product(R2, R2, R2):
            if k == i:
                G[k][i][j] = G[k][i][j] + _poly(pi[j])
            if k == j:
                G[k][i][j] = G[k][i][j] + _poly(pi[i])
        return cls(G, base.chart, name)

    def in_chart(self, x):
        x = _surface_points(x)
        ok = np.ones(len(x), dtype=bool)
        for a, (lo, hi) in enumerate(self.chart):
            ok &= (x[:, a] > lo) & (x[:, a] < hi)
        return ok

    def _check(self, x):
        if not np.all(self.in_chart(x)):
            raise chartcalc.ChartDomainError(f"point outside the chart {self.chart}")

    def __call__(self, x, order=0):
        """Gamma[N, k, i, j] and, for order >= 1, d_m Gamma at [N, k, i, j, m] etc."""
        x = _surface_points(x)
        self._check(x)
        G = _ev_tensor(self.gamma, x, (2, 2, 2))
        if order == 0:
            return G
        dpoly = [[[[self.gamma[k][i][j].deriv(m) for m in R2] for j in R2] for i in R2] for k in R2]
        dG = _ev_tensor(dpoly, x, (2, 2, 2, 2))
        if order == 1:
            return G, dG
        ddpoly = _map(dpoly, lambda p: [p.deriv(r) for r in R2], 4)
        return G, dG, _ev_tensor(ddpoly, x, (2, 2, 2, 2, 2))

    @functools.cached_property
    def ricci_polys(self):
        """rho_lj = R^i_lij as polynomials (see ``ricci_of_connection``)."""
        G = self.gamma
        Z = Poly2.zero
        return [
            [
                sum(
                    (
                        G[i][j][l].deriv(i)
                        - G[i][i][l].deriv(j)
                        + sum((G[i][i][m] * G[m][j][l] - G[i][j][m] * G[m][i][l] for m in R2), Z())
                        for i in R2
                    ),
                    Z(),
                )
                for j in R2
            ]
            for l in R2
        ]

    def trace_form(self):
        """Gamma^k_ki as polynomials."""
        return [self.gamma[0][0][i] + self.gamma[1][1][i] for i in R2]

    def to_dict(self):
        return {
            "family": "polynomial2",
            "gamma": [[[self.gamma[k][i][j].to_list() for j in R2] for i in R2] for k in R2],
            "chart": [list(ax) for ax in self.chart],
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("family", "polynomial2") != "polynomial2":
            raise ValueError(f"unsupported connection family {d.get('family')!r}")
        return cls(d["gamma"], d.get("chart", ((-1, 1), (-1, 1))), d.get("name", ""))


class AreaForm:
    """zeta_12 = scale * exp(q(x)), q polynomial."""

    def __init__(self, q=None, scale=1.0):
        self.q = Poly2.zero() if q is None else _poly(q)
        self.scale = float(scale)
        if self.scale == 0.0 or not np.isfinite(self.scale):
            raise ValueError("area form must be nonvanishing")

    def __call__(self, x):
        return self.scale * np.exp(_ev(self.q, _surface_points(x)))

    def matrix(self, x):
        z = self(x)
        return z[:, None, None] * _J

    def log_gradient(self, x):
        x = _surface_points(x)
        return np.stack([_ev(self.q.deriv(i), x) for i in R2], axis=-1)

    def to_dict(self):
        return {"family": "exp-polynomial2", "scale": self.scale, "log": self.q.to_list()}

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("log", [[0.0]]), d.get("scale", 1.0))


class D2Data:
    def __init__(self, conn, zeta, n, epsilon, gram=None, phi=None, name=""):
        self.conn = conn
        self.zeta = zeta
        self.n = int(n)
        self.epsilon = epsilon
        m = max(self.n - 4, 0)
        if m == 0 or gram is None:
            self.gram = np.zeros((m, m))
        else:
            self.gram = np.atleast_2d(np.asarray(gram, dtype=float))
        self.phi = None if phi is None else [[_poly(phi[a][b]) for b in R2] for a in R2]
        self.name = name

    @property
    def v_signature(self):
        if self.gram.size == 0:
            return (0, 0)
        return chartcalc.signature_of(self.gram)

    @property
    def signature(self):
        p, m = self.v_signature
        return p + 2, m + 2

    def to_dict(self):
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "gram": self.gram.tolist(),
            "connection": self.conn.to_dict(),
            "zeta": self.zeta.to_dict(),
            "phi": None if self.phi is None else {
                "family": "polynomial2",
                "components": [[self.phi[a][b].to_list() for b in R2] for a in R2],
            },
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d):
        phi = d.get("phi")
        if phi is not None:
            if phi.get("family", "polynomial2") != "polynomial2":
                raise ValueError(f"unsupported phi family {phi.get('family')!r}")
            phi = phi["components"]
        return cls(
            SurfaceConnection.from_dict(d["connection"]),
            AreaForm.from_dict(d["zeta"]),
            d["n"],
            d["epsilon"],
            d.get("gram"),
            phi,
            d.get("name", ""),
        )


# ----------------------------------------------------------------------------
# surface operations


def ricci_of_connection(conn, x):
    """rho^D_lj = R^i_lij at points x, shape (N, 2, 2).

    ``R^k_lij = d_i Gamma^k_jl - d_j Gamma^k_il + Gamma^k_im Gamma^m_jl -
    Gamma^k_jm Gamma^m_il``, the same convention as the metric engine.  The
    result is not symmetrized.
    """
    x = _surface_points(x)
    conn._check(x)
    rho = _ev_tensor(conn.ricci_polys, x, (2, 2))
    if not np.all(np.isfinite(rho)):
        raise chartcalc.ChartDomainError("non-finite connection coefficients")
    return rho


def _ricci_jet(conn, x, order):
    polys = conn.ricci_polys
    out = [_ev_tensor(polys, x, (2, 2))]
    if order >= 1:
        d = _map(polys, lambda p: [p.deriv(m) for m in R2], 2)
        out.append(_ev_tensor(d, x, (2, 2, 2)))
    if order >= 2:
        dd = _map(polys, lambda p: [[p.deriv(m).deriv(r) for r in R2] for m in R2], 2)
        out.append(_ev_tensor(dd, x, (2, 2, 2, 2)))
    return out


def _nabla2(T, dT, G):
    """nabla_i T_jk at [N, i, j, k] from d_i T_jk stored at [N, j, k, i]."""
    return (
        np.moveaxis(dT, 3, 1)
        - np.einsum("nmij,nmk->nijk", G, T)
        - np.einsum("nmik,njm->nijk", G, T)
    )


def chart_grid(conn, per_axis=7, margin=0.1):
    """Tensor grid over the chart shrunk by ``margin`` of its width."""
    axes = []
    for lo, hi in conn.chart:
        w = hi - lo
        axes.append(np.linspace(lo + margin * w, hi - margin * w, per_axis))
    return np.array(list(itertools.product(*axes)))


def _grid_of(conn, prof):
    if prof is None:
        return chart_grid(conn)
    return _surface_points(prof.grid)


def ricci_symmetry_residual(conn, prof=None):
    rho = ricci_of_connection(conn, _grid_of(conn, prof))
    return float(np.abs(rho - rho.transpose(0, 2, 1)).max())


def cotton_tensor(conn, x):
    """C_ijk = nabla_i P_jk - nabla_j P_ik at points x, shape (N, 2, 2, 2)."""
    x = _surface_points(x)
    conn._check(x)
    G = conn(x)
    rho, drho = _ricci_jet(conn, x, 1)
    sym = 0.5 * (rho + rho.transpose(0, 2, 1))
    skew = 0.5 * (rho - rho.transpose(0, 2, 1))
    P = sym - skew / 3.0
    dP = 0.5 * (drho + drho.transpose(0, 2, 1, 3)) - (drho - drho.transpose(0, 2, 1, 3)) / 6.0
    D = _nabla2(P, dP, G)
    return D - D.transpose(0, 2, 1, 3)


def projective_flatness_residual(conn, prof=None):
    return float(np.abs(cotton_tensor(conn, _grid_of(conn, prof))).max())


def area_parallel_residual(conn, zeta, prof=None):
    """max |d_i zeta_12 - Gamma^k_ki zeta_12| over the grid."""
    x = _grid_of(conn, prof)
    G = conn(x)
    trace = np.einsum("nkki->ni", G)
    z = zeta(x)
    return float(np.abs(z[:, None] * (zeta.log_gradient(x) - trace)).max())


def ricci_parallel_residual(conn, prof=None):
    """max |nabla^D rho^D| over the grid."""
    x = _grid_of(conn, prof)
    G = conn(x)
    rho, drho = _ricci_jet(conn, x, 1)
    return float(np.abs(_nabla2(rho, drho, G)).max())


def _phi_jet(phi, x):
    p = _ev_tensor(phi, x, (2, 2))
    dp = _ev_tensor(_map(phi, lambda q: [q.deriv(m) for m in R2], 2), x, (2, 2, 2))
    ddp = _ev_tensor(_map(phi, lambda q: [[q.deriv(m).deriv(r) for r in R2] for m in R2], 2), x, (2, 2, 2, 2))
    return p, dp, ddp


def phi_operator(G, dG, rho, phi, dphi, ddphi):
    """div div phi + <rho, phi> from pointwise jets.

    ``X^k = d_j phi^jk + Gamma^j_jm phi^mk + Gamma^k_jm phi^jm`` and
    ``div X = d_k X^k + Gamma^k_km X^m``.
    """
    X = (
        np.einsum("njkj->nk", dphi)
        + np.einsum("njjm,nmk->nk", G, phi)
        + np.einsum("nkjm,njm->nk", G, phi)
    )
    dX = (
        np.einsum("njkjr->nkr", ddphi)
        + np.einsum("njjmr,nmk->nkr", dG, phi)
        + np.einsum("njjm,nmkr->nkr", G, dphi)
        + np.einsum("nkjmr,njm->nkr", dG, phi)
        + np.einsum("nkjm,njmr->nkr", G, dphi)
    )
    div = np.einsum("nkk->n", dX) + np.einsum("nkkm,nm->n", G, X)
    return div + np.einsum("njk,njk->n", rho, phi)


def phi_residual(data, prof=None):
    if data.phi is None:
        raise InvalidDataError(["phi is missing"])
    x = _grid_of(data.conn, prof)
    G, dG = data.conn(x, order=1)
    rho = ricci_of_connection(data.conn, x)
    val = phi_operator(G, dG, rho, *_phi_jet(data.phi, x))
    return float(np.abs(val - data.epsilon).max())


def tau_from_phi(zeta, phi, x):
    """tau_jk = zeta_jl zeta_km phi^lm at points x, shape (N, 2, 2)."""
    x = _surface_points(x)
    Z = zeta.matrix(x)
    P = _ev_tensor(phi, x, (2, 2)) if isinstance(phi, list) else np.broadcast_to(phi, (len(x), 2, 2))
    return np.einsum("njl,nkm,nlm->njk", Z, Z, P)


def solve_phi(conn, epsilon, degree=12, nodes=24):
    """Polynomial phi solving the phi-equation by Chebyshev collocation.

    Minimum-norm least squares over all symmetric polynomial phi of the
    given total degree, collocated at ``nodes**2`` tensor Chebyshev points of
    the chart.  Returns the phi components as nested Poly2.
    """
    axes = [
        0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)
        for lo, hi in conn.chart
    ]
    x = np.array(list(itertools.product(*axes)))
    G, dG = conn(x, order=1)
    rho = ricci_of_connection(conn, x)
    mons = monomials(degree)
    nb = len(mons)
    cols = []
    for a, b in ((0, 0), (0, 1), (1, 1)):
        for idx in range(nb):
            vals = np.zeros(nb)
            vals[idx] = 1.0
            p = from_monomials(degree, vals)
            phi = [[Poly2.zero(), Poly2.zero()], [Poly2.zero(), Poly2.zero()]]
            phi[a][b] = phi[b][a] = p
            cols.append(phi_operator(G, dG, rho, *_phi_jet(phi, x)))
    M = np.array(cols).T
    sol, *_ = np.linalg.lstsq(M, np.full(len(x), float(epsilon)), rcond=None)
    p00, p01, p11 = (from_monomials(degree, sol[k * nb : (k + 1) * nb]) for k in range(3))
    return [[p00, p01], [p01, p11]]


# ----------------------------------------------------------------------------
# validation and metric assembly


def validate(data, prof=None, tol=DATA_TOL):
    out = []
    if data.n < 4:
        out.append(f"n = {data.n} must be at least 4")
    if data.epsilon not in (1, -1):
        out.append(f"epsilon must be +1 or -1, got {data.epsilon}")
    m = max(data.n - 4, 0)
    if data.gram.shape != (m, m):
        out.append(f"gram must be {m}x{m}")
    elif m:
        if not np.allclose(data.gram, data.gram.T):
            out.append("gram is not symmetric")
        elif np.linalg.cond(data.gram) > 1e12:
            out.append("gram is degenerate")
    if data.phi is None:
        out.append("phi is missing")
        return out
    if not (data.phi[0][1] - data.phi[1][0]).is_zero(1e-14):
        out.append("phi is not symmetric")
    res = {
        "projective flatness": projective_flatness_residual(data.conn, prof),
        "zeta parallelism": area_parallel_residual(data.conn, data.zeta, prof),
        "phi equation": phi_residual(data, prof),
    }
    for what, r in res.items():
        if not r < tol:
            out.append(f"{what} residual {r:.3g} exceeds {tol:.0e}")
    sym = ricci_symmetry_residual(data.conn, prof)
    if not sym < tol:
        out.append(f"unsupported: rho^D is not symmetric (residual {sym:.3g})")
    return out


def riemann_extension(conn):
    """h = 2 dp_i dx^i - 2 p_k Gamma^k_ij dx^i dx^j on T*Q, signature (2, 2)."""
    data = D2Data(conn, AreaForm(), 4, 1, phi=[[Poly2.zero()] * 2] * 2)
    return _assemble(data, twist=False, name="riemann-extension")


def horizontal_lift(conn, x, p, u):
    """D-horizontal lift of u at the covector (x, p): (u^i, p_k Gamma^k_ij u^i)."""
    G = conn(np.atleast_2d(x))[0]
    return np.r_[u, np.einsum("k,kij,i->j", p, G, u)]


def build_d2_metric(data, prof=None):
    problems = validate(data, prof)
    if problems:
        raise InvalidDataError(problems)
    return _assemble(data, twist=True, name="d2")


def _assemble(data, twist, name):
    conn = data.conn
    n = data.n
    gram = data.gram
    phi = data.phi
    # J phi J^T, so that tau = zeta_12^2 * T
    T = [[phi[1][1], -phi[0][1]], [-phi[1][0], phi[0][0]]]
    q = data.zeta.q
    s2 = data.zeta.scale**2

    def parts(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != n:
            raise chartcalc.ChartDomainError(f"point has {X.shape[1]} coordinates, expected {n}")
        x, p, v = X[:, :2], X[:, 2:4], X[:, 4:]
        return X, x, p, v

    def metric(X):
        return jet(X, order=0)[0]

    def jet(X, order=2):
        X, x, p, v = parts(X)
        N = len(X)
        G, dG, ddG = conn(x, order=2)
        if twist:
            Tv, dT, ddT = _phi_jet(T, x)
            qv = _ev(q, x)
            dq = np.stack([_ev(q.deriv(i), x) for i in R2], -1)
            ddq = np.stack([np.stack([_ev(q.deriv(i).deriv(j), x) for j in R2], -1) for i in R2], -2)
            E = s2 * np.exp(2 * qv)
            dE = 2 * dq * E[:, None]
            ddE = (2 * ddq + 4 * dq[:, :, None] * dq[:, None, :]) * E[:, None, None]
            rho, drho, ddrho = _ricci_jet(conn, x, 2)
            rho = 0.5 * (rho + rho.transpose(0, 2, 1))
            drho = 0.5 * (drho + drho.transpose(0, 2, 1, 3))
            ddrho = 0.5 * (ddrho + ddrho.transpose(0, 2, 1, 3, 4))
        else:
            Tv = np.zeros((N, 2, 2))
            dT, ddT = np.zeros((N, 2, 2, 2)), np.zeros((N, 2, 2, 2, 2))
            E, dE, ddE = np.zeros(N), np.zeros((N, 2)), np.zeros((N, 2, 2))
            rho, drho, ddrho = Tv, dT, ddT
        Gv = v @ gram
        th = np.einsum("na,na->n", v, Gv)

        g = np.zeros((N, n, n))
        g[:, 0, 2] = g[:, 2, 0] = g[:, 1, 3] = g[:, 3, 1] = 1.0
        g[:, 4:, 4:] = gram
        g[:, :2, :2] = (
            -2 * np.einsum("nk,nkij->nij", p, G)
            - 2 * E[:, None, None] * Tv
            - th[:, None, None] * rho
        )
        if order == 0:
            return (g,)

        dg = np.zeros((N, n, n, n))
        dg[:, :2, :2, :2] = (
            -2 * np.einsum("nk,nkijm->nijm", p, dG)
            - 2 * (dE[:, None, None, :] * Tv[..., None] + E[:, None, None, None] * dT)
            - th[:, None, None, None] * drho
        )
        dg[:, :2, :2, 2:4] = -2 * np.moveaxis(G, 1, 3)
        dg[:, :2, :2, 4:] = -2 * rho[..., None] * Gv[:, None, None, :]

        ddg = np.zeros((N, n, n, n, n))
        ddg[:, :2, :2, :2, :2] = (
            -2 * np.einsum("nk,nkijmr->nijmr", p, ddG)
            - 2 * (
                ddE[:, None, None] * Tv[..., None, None]
                + dE[:, None, None, :, None] * dT[:, :, :, None, :]
                + dE[:, None, None, None, :] * dT[:, :, :, :, None]
                + E[:, None, None, None, None] * ddT
            )
            - th[:, None, None, None, None] * ddrho
        )
        xp = -2 * np.moveaxis(dG, 1, 4)  # [N, i, j, m, k] = -2 d_m Gamma^k_ij
        ddg[:, :2, :2, :2, 2:4] = xp
        ddg[:, :2, :2, 2:4, :2] = xp.transpose(0, 1, 2, 4, 3)
        xv = -2 * drho[..., None] * Gv[:, None, None, None, :]
        ddg[:, :2, :2, :2, 4:] = xv
        ddg[:, :2, :2, 4:, :2] = xv.transpose(0, 1, 2, 4, 3)
        ddg[:, :2, :2, 4:, 4:] = -2 * rho[..., None, None] * gram
        return g, dg, ddg

    return MetricField(n, data.signature, metric, jet, name=name)


def default_grid(data, per_axis=3, p_width=1.0, v_width=1.0, margin=0.15):
    """Box grid: chart interior for x, [-p_width, p_width] for p, etc."""
    axes = []
    for lo, hi in data.conn.chart:
        w = hi - lo
        axes.append(np.linspace(lo + margin * w, hi - margin * w, per_axis))
    axes += [np.linspace(-p_width, p_width, per_axis)] * 2
    axes += [np.linspace(-v_width, v_width, per_axis)] * (data.n - 4)
    return np.array(list(itertools.product(*axes)))


def local_symmetry_dichotomy(data, prof, conn_prof=None):
    """'symmetric' or 'essentially-conformally-symmetric', cross-checked.

    The metric verdict |nabla R| < tol_second must agree with the surface
    verdict |nabla^D rho^D| < tol_second; disagreement raises
    ConsistencyError.
    """
    from .d1family import ConsistencyError

    field_ = build_d2_metric(data)
    res = chartcalc.local_symmetry_residual(field_, prof)
    base = ricci_parallel_residual(data.conn, conn_prof)
    sym_metric = res < prof.tol_second
    sym_base = base < prof.tol_second
    if sym_metric != sym_base:
        raise ConsistencyError(f"|nabla R| = {res:.3g} but |nabla^D rho^D| = {base:.3g}")
    return "symmetric" if sym_metric else "essentially-conformally-symmetric"


# ----------------------------------------------------------------------------
# fixtures

_COMPONENTS = [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 1)]
SEARCH_CHART = ((-0.5, 0.5), (-0.5, 0.5))


def flat_fixture(n=4, epsilon=1, gram=None):
    """Flat D on the unit square, zeta = dx^1 ^ dx^2, phi^11 = epsilon (x^1)^2 / 2."""
    m = n - 4
    if gram is None:
        gram = np.eye(m)
    phi = [[Poly2([[0.0], [0.0], [0.5 * epsilon]]), Poly2.zero()], [Poly2.zero(), Poly2.zero()]]
    return D2Data(SurfaceConnection.flat(), AreaForm(), n, epsilon, gram, phi, "flat")


def _unpack(theta, chart):
    G = [[[None] * 2 for _ in R2] for _ in R2]
    for c, (k, i, j) in enumerate(_COMPONENTS):
        p = from_monomials(1, theta[3 * c : 3 * c + 3])
        G[k][i][j] = G[k][j][i] = p
    q = from_monomials(2, np.r_[0.0, theta[18:23]])
    return SurfaceConnection(G, chart, "searched"), AreaForm(q)


def search_nonflat_connection(seed=2, chart=SEARCH_CHART, samples=4):
    """Projectively flat connection with degree-1 coefficients and a parallel zeta.

    Levenberg-Marquardt over the 18 coefficients of Gamma and the 5
    nonconstant coefficients of log zeta (degree 2).  Residuals: the Cotton
    tensor and the zeta-parallelism defect on a ``samples x samples`` grid of
    [-1, 1]^2, plus the normalization d_1 Gamma^1_11 = 1 that rules out the
    flat solution.  Returns (connection, zeta, optimizer result).
    """
    g1 = np.linspace(-1, 1, samples)
    grid = np.array(list(itertools.product(g1, g1)))
    wide = ((-2.0, 2.0), (-2.0, 2.0))

    def resid(theta):
        conn, zeta = _unpack(theta, wide)
        C = cotton_tensor(conn, grid)
        A = zeta.log_gradient(grid) - np.einsum("nkki->ni", conn(grid))
        return np.concatenate([C[:, 0, 1, :].ravel(), A.ravel(), [theta[1] - 1.0]])

    rng = np.random.default_rng(seed)
    theta0 = rng.normal(scale=0.5, size=23)
    res = least_squares(resid, theta0, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    conn, zeta = _unpack(res.x, chart)
    return conn, zeta, res


@functools.lru_cache(maxsize=4)
def _nonflat_parts(seed, epsilon, degree):
    conn, zeta, res = search_nonflat_connection(seed)
    phi = solve_phi(conn, epsilon, degree)
    return conn.to_dict(), zeta.to_dict(), [[phi[a][b].to_list() for b in R2] for a in R2], float(np.abs(res.fun).max())


def nonflat_fixture(n=4, epsilon=1, gram=None, seed=2, degree=12):
    """Validated non-locally-symmetric example found by search (cached)."""
    m = n - 4
    if gram is None:
        gram = np.diag([(-1.0) ** a for a in range(m)]) if m else None
    conn, zeta, phi, _ = _nonflat_parts(seed, epsilon, degree)
    return D2Data(
        SurfaceConnection.from_dict(conn), AreaForm.from_dict(zeta), n, epsilon, gram, phi, "nonflat"
    )


def non_projectively_flat_connection():
    """Gamma^1_11 = x^2, all other coefficients 0."""
    G = [[[Poly2.zero()] * 2 for _ in R2] for _ in R2]
    G[0][0][0] = Poly2.y()
    return SurfaceConnection(G, name="gamma111-x2")


def run_suite(data, prof, transported=2):
    """Surface residuals, metric invariants and the Olszak structure."""
    from . import olszak

    t1, t2 = prof.tol_first, prof.tol_second
    surface = {
        "projective_flatness": projective_flatness_residual(data.conn),
        "zeta_parallel": area_parallel_residual(data.conn, data.zeta),
        "phi_equation": phi_residual(data),
        "ricci_symmetry": ricci_symmetry_residual(data.conn),
    }
    field_ = build_d2_metric(data)
    summ = chartcalc.survey(field_, prof).summary()
    fibers = olszak.fibers_on_grid(field_, prof)
    dims = sorted({f.dim for f in fibers})
    par = olszak.nullity_parallel_check(field_, fibers[:transported], prof)
    witness = [
        olszak.rank_one_weyl_witness(pk, fiber=fb)
        for pk, fb in zip(chartcalc.curvature_packs(field_, prof.grid[:transported], prof), fibers)
    ]
    wres = max((w.residual for w in witness if w is not None), default=None)
    wang = max((w.image_angle for w in witness if w is not None), default=None)

    def chk(v, tol):
        return {"value": None if v is None else float(v), "tol": tol, "ok": v is not None and v < tol}

    checks = {f"surface_{k}": chk(v, DATA_TOL) for k, v in surface.items()}
    checks.update({
        "scalar": chk(summ["max_abs_scalar"], t1),
        "nabla_weyl": chk(summ["max_nabla_weyl"], t2),
        "weyl_nonzero": {"value": summ["min_weyl_norm"], "tol": t2, "ok": summ["min_weyl_norm"] > t2},
        "olszak_dimension": {"value": dims, "tol": [2], "ok": dims == [2]},
        "olszak_nullity": chk(par["nullity"], t1),
        "olszak_parallelism": chk(par["parallelism"], t2),
        "weyl_witness": {
            "value": wres, "tol": t2,
            "ok": all(w is not None for w in witness) and wres < t2 and wang < t2,
        },
        "signature": {"value": list(data.signature), "tol": None, "ok": chartcalc.check_signature(field_, prof)},
    })
    base = ricci_parallel_residual(data.conn)
    sym = summ["max_nabla_riem"] < t2
    if sym != (base < t2):
        from .d1family import ConsistencyError

        raise ConsistencyError(f"|nabla R| = {summ['max_nabla_riem']:.3g} but |nabla^D rho^D| = {base:.3g}")
    return {
        "n": data.n,
        "points": summ["points"],
        "checks": checks,
        "max_nabla_riem": summ["max_nabla_riem"],
        "ricci_parallel": base,
        "classification": "locally symmetric" if sym else "ECS, d=2",
        "passed": all(c["ok"] for c in checks.values()),
    }
