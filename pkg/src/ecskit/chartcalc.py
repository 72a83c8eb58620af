"""Numerical tensor calculus on a single coordinate chart.

Conventions (fixed throughout the package)::

    Gamma^k_ij = g^kl Gamma_lij,  Gamma_lij = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    R^k_lij    = d_i Gamma^k_jl - d_j Gamma^k_il
                 + Gamma^k_im Gamma^m_jl - Gamma^k_jm Gamma^m_il
    R_klij     = g_ka R^a_lij
    rho_lj     = R^i_lij                       (Ricci)
    s          = g^lj rho_lj                   (scalar curvature)
    W_klij     = R_klij - (rho (.) g)_klij / (n - 2)
                 + s (g (.) g)_klij / (2 (n - 1) (n - 2))

where ``(h (.) k)_klij = h_ki k_lj + h_lj k_ki - h_kj k_li - h_li k_kj`` is the
Kulkarni-Nomizu product.  With these conventions the round sphere has
positive Ricci curvature and ``R_klij = K (g_ki g_lj - g_kj g_li)`` for
constant sectional curvature K.

Covariant derivatives of curvature tensors are obtained by central
differencing of the tensor evaluated at neighbouring chart points (with one
Richardson step by default) followed by the usual connection corrections.
Point-level curvature uses the exact metric jet when the field supplies one
and finite differences of the metric otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels

COND_LIMIT = 1e12


class DegenerateMetricError(ValueError):
    """Metric matrix singular (or too ill-conditioned) at a queried point."""


class ChartDomainError(ValueError):
    """Non-finite metric evaluation or a point outside the chart."""


@dataclass(frozen=True)
class MetricField:
    """A metric on an open subset of R^n given in one chart.

    ``metric`` maps an ``(N, n)`` array of points to ``(N, n, n)`` matrices.
    ``jet``, when given, returns ``(g, dg, ddg)`` with ``dg[N, a, b, m] =
    d_m g_ab`` and ``ddg[N, a, b, m, r] = d_r d_m g_ab``.
    """

    dim: int
    signature: tuple[int, int]
    metric: Callable[[np.ndarray], np.ndarray]
    jet: Callable[[np.ndarray], tuple] | None = None
    derivative_order: int = 4
    name: str = ""

    def __post_init__(self):
        if self.dim < 4:
            raise ValueError(f"metric dimension must be >= 4, got {self.dim}")
        if sum(self.signature) != self.dim:
            raise ValueError(f"signature {self.signature} does not match dimension {self.dim}")
        if self.derivative_order < 4:
            raise ValueError("differencing requires smoothness class >= 4")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.metric(x[None, :])[0]
        return self.metric(x)

    def scaled(self, c):
        """The metric c * g for a constant c > 0."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        jet = None
        if self.jet is not None:
            base = self.jet

            def jet(X):
                return tuple(c * a for a in base(X))

        return MetricField(
            self.dim,
            self.signature,
            lambda X: c * self.metric(X),
            jet,
            self.derivative_order,
            f"{c}*{self.name}" if self.name else "",
        )


@dataclass(frozen=True)
class ToleranceProfile:
    """Sample grid, differencing steps and residual tolerances."""

    grid: np.ndarray
    fd_step: float | tuple = 1e-4
    tol_first: float = 1e-8
    tol_second: float = 1e-6
    richardson: bool = True
    derivatives: str = "auto"
    chunk: int = 96

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "grid", grid)
        if grid.size == 0:
            raise ValueError("grid must be nonempty")
        if not np.all(np.isfinite(grid)):
            raise ValueError("grid points must be finite")
        if np.any(np.asarray(self.fd_step) <= 0):
            raise ValueError("differencing steps must be positive")
        if self.tol_first <= 0 or self.tol_second <= 0:
            raise ValueError("tolerances must be positive")
        if self.derivatives not in ("auto", "exact", "fd"):
            raise ValueError(f"unknown derivative mode {self.derivatives!r}")

    def steps(self, n):
        h = np.broadcast_to(np.asarray(self.fd_step, dtype=float), (n,))
        return h.copy()

    def with_grid(self, grid):
        return ToleranceProfile(
            grid, self.fd_step, self.tol_first, self.tol_second,
            self.richardson, self.derivatives, self.chunk,
        )


@dataclass
class CurvaturePack:
    """Every curvature object of interest at one chart point."""

    point: np.ndarray
    metric: np.ndarray
    gamma: np.ndarray
    riem_down: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl_down: np.ndarray
    nabla_weyl: np.ndarray
    nabla_riem: np.ndarray
    nabla_ricci: np.ndarray
    riem_up: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self):
        return len(self.point)


def chart_point(coords, dim=None):
    x = np.asarray(coords, dtype=float).ravel()
    if dim is not None and len(x) != dim:
        raise ChartDomainError(f"point has {len(x)} coordinates, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ChartDomainError("chart point has non-finite coordinates")
    return x


def box_grid(center, half_width, per_axis):
    """Tensor-product grid of ``per_axis`` points per coordinate."""
    center = np.asarray(center, dtype=float)
    hw = np.broadcast_to(np.asarray(half_width, dtype=float), center.shape)
    if per_axis == 1:
        return center[None, :].copy()
    axes = [c + w * np.linspace(-1.0, 1.0, per_axis) for c, w in zip(center, hw)]
    return np.array(list(itertools.product(*axes)))


def random_grid(center, half_width, count, seed=0):
    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    return center + np.asarray(half_width) * rng.uniform(-1.0, 1.0, (count, len(center)))


def flat_metric(signature, dim=None):
    """Constant diagonal metric diag(+1,...,+1,-1,...,-1)."""
    plus, minus = signature
    n = plus + minus
    diag = np.diag([1.0] * plus + [-1.0] * minus)

    def metric(X):
        return np.broadcast_to(diag, (len(X), n, n)).copy()

    def jet(X):
        N = len(X)
        return metric(X), np.zeros((N, n, n, n)), np.zeros((N, n, n, n, n))

    return MetricField(n, (plus, minus), metric, jet, name="flat")


# ----------------------------------------------------------------------------
# point-level geometry


def _evaluate(field_, X):
    g = np.asarray(field_.metric(X), dtype=float)
    if not np.all(np.isfinite(g)):
        raise ChartDomainError("metric evaluation produced non-finite values")
    return g


def _fd_jet(field_, X, h, richardson):
    N, n = X.shape
    g = _evaluate(field_, X)
    dg = np.empty((N, n, n, n))
    ddg = np.empty((N, n, n, n, n))
    h2 = 10.0 * h
    E = np.eye(n)

    def at(*shift):
        return _evaluate(field_, X + np.sum(shift, axis=0))

    for m in range(n):
        e = h[m] * E[m]
        d1 = (at(e) - at(-e)) / (2 * h[m])
        if richardson:
            d2 = (at(2 * e) - at(-2 * e)) / (4 * h[m])
            d1 = (4 * d1 - d2) / 3
        dg[..., m] = d1
    for m in range(n):
        em = h2[m] * E[m]
        for r in range(m, n):
            er = h2[r] * E[r]
            if m == r:
                if richardson:
                    val = (-at(2 * em) + 16 * at(em) - 30 * g + 16 * at(-em) - at(-2 * em)) / (
                        12 * h2[m] ** 2
                    )
                else:
                    val = (at(em) - 2 * g + at(-em)) / h2[m] ** 2
            else:
                def mixed(s):
                    return (
                        at(s * em, s * er) - at(s * em, -s * er)
                        - at(-s * em, s * er) + at(-s * em, -s * er)
                    ) / (4 * s * s * h2[m] * h2[r])

                val = mixed(1.0)
                if richardson:
                    val = (4 * val - mixed(2.0)) / 3
            ddg[..., m, r] = val
            ddg[..., r, m] = val
    return g, dg, ddg


def metric_jet(field_, X, prof):
    """(g, dg, ddg) at the points X, exact when possible."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != field_.dim:
        raise ChartDomainError(f"points have {X.shape[1]} coordinates, expected {field_.dim}")
    if not np.all(np.isfinite(X)):
        raise ChartDomainError("non-finite chart coordinates")
    mode = prof.derivatives
    if mode == "exact" and field_.jet is None:
        raise ValueError("exact derivatives requested but the field has no jet")
    if field_.jet is not None and mode != "fd":
        g, dg, ddg = (np.asarray(a, dtype=float) for a in field_.jet(X))
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(dg)) and np.all(np.isfinite(ddg))):
            raise ChartDomainError("metric jet produced non-finite values")
        return g, dg, ddg
    return _fd_jet(field_, X, prof.steps(field_.dim), prof.richardson)


def _inverse(g):
    cond = np.linalg.cond(g)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if np.any(bad):
        raise DegenerateMetricError(
            f"metric degenerate at {int(bad.sum())} point(s); condition number "
            f"{float(np.max(np.where(np.isfinite(cond), cond, np.inf))):.3g} exceeds {COND_LIMIT:.0e}"
        )
    return np.linalg.inv(g)


def point_geometry(field_, X, prof):
    """Batched curvature at points X (no covariant derivatives)."""
    g, dg, ddg = metric_jet(field_, X, prof)
    ginv = _inverse(g)
    gamma = kernels.christoffel(ginv, dg)
    dgamma = kernels.christoffel_derivative(ginv, dg, ddg)
    rup = kernels.riemann(gamma, dgamma)
    rdown = kernels.lower_first(g, rup)
    ricci = np.einsum("nilij->nlj", rup)
    scalar = np.einsum("nlj,nlj->n", ginv, ricci)
    weyl = kernels.weyl(g, rdown, ricci, scalar)
    return {
        "g": g, "ginv": ginv, "dg": dg, "gamma": gamma, "rup": rup,
        "rdown": rdown, "ricci": ricci, "scalar": scalar, "weyl": weyl,
    }


_DIFFERENTIATED = ("weyl", "rdown", "ricci")


def geometry_with_derivatives(field_, X, prof):
    """Point geometry plus nabla W, nabla R and nabla rho, chunked over X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    parts = [
        _geometry_chunk(field_, X[i : i + prof.chunk], prof)
        for i in range(0, len(X), prof.chunk)
    ]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _geometry_chunk(field_, X, prof):
    N, n = X.shape
    h = prof.steps(n)
    mult = (1.0, -1.0, 2.0, -2.0) if prof.richardson else (1.0, -1.0)
    shifted = [X]
    for m in range(n):
        for k in mult:
            Y = X.copy()
            Y[:, m] += k * h[m]
            shifted.append(Y)
    geo = point_geometry(field_, np.concatenate(shifted), prof)
    S = len(mult)
    out = {k: v[:N] for k, v in geo.items()}
    for key in _DIFFERENTIATED:
        T = geo[key][N:].reshape((n, S, N) + geo[key].shape[1:])
        if prof.richardson:
            d = (8.0 * (T[:, 0] - T[:, 1]) - (T[:, 2] - T[:, 3])) / 12.0
        else:
            d = (T[:, 0] - T[:, 1]) / 2.0
        d = d / h.reshape((n,) + (1,) * (d.ndim - 1))
        out["d_" + key] = np.moveaxis(d, 0, 1)
    gamma = out["gamma"]
    out["nabla_weyl"] = kernels.covariant_derivative4(out["weyl"], out.pop("d_weyl"), gamma)
    out["nabla_riem"] = kernels.covariant_derivative4(out["rdown"], out.pop("d_rdown"), gamma)
    out["nabla_ricci"] = kernels.covariant_derivative2(out["ricci"], out.pop("d_ricci"), gamma)
    return out


def _pack_from(geo, i, X):
    return CurvaturePack(
        point=X[i].copy(),
        metric=geo["g"][i],
        gamma=geo["gamma"][i],
        riem_down=geo["rdown"][i],
        ricci=geo["ricci"][i],
        scalar=float(geo["scalar"][i]),
        weyl_down=geo["weyl"][i],
        nabla_weyl=geo["nabla_weyl"][i],
        nabla_riem=geo["nabla_riem"][i],
        nabla_ricci=geo["nabla_ricci"][i],
        riem_up=geo["rup"][i],
    )


def curvature_pack(field_, x, prof):
    x = chart_point(x, field_.dim)
    geo = geometry_with_derivatives(field_, x[None, :], prof)
    return _pack_from(geo, 0, x[None, :])


def curvature_packs(field_, X, prof):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    geo = geometry_with_derivatives(field_, X, prof)
    return [_pack_from(geo, i, X) for i in range(len(X))]


def christoffel(field_, x, prof):
    """Gamma^k_ij at one point, layout [k, i, j]."""
    x = chart_point(x, field_.dim)
    g, dg, _ = metric_jet(field_, x[None, :], prof)
    return kernels.christoffel(_inverse(g), dg)[0]


def metric_compatibility_residual(field_, x, prof):
    """max |nabla_m g_ab| with d_m g from an independent difference quotient."""
    x = chart_point(x, field_.dim)
    gamma = christoffel(field_, x, prof)
    n = field_.dim
    h = prof.steps(n)
    X = x[None, :]
    E = np.eye(n)
    g = field_(x)
    res = 0.0
    for m in range(n):
        e = h[m] * E[m]
        d1 = (field_(X + e)[0] - field_(X - e)[0]) / (2 * h[m])
        d2 = (field_(X + 2 * e)[0] - field_(X - 2 * e)[0]) / (4 * h[m])
        dmg = (4 * d1 - d2) / 3
        cov = dmg - gamma[:, m, :].T @ g - g @ gamma[:, m, :]
        res = max(res, float(np.abs(cov).max()))
    return res


# ----------------------------------------------------------------------------
# identity residuals


def first_bianchi_residual(pack):
    R = pack.riem_down
    return float(np.abs(R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)).max())


def weyl_trace_residual(pack):
    """Largest single metric trace of W_klij over every pair of slots."""
    ginv = np.linalg.inv(pack.metric)
    W = pack.weyl_down
    traces = [
        np.einsum("ab,abij->ij", ginv, W),
        np.einsum("ab,kaib->ki", ginv, W),
        np.einsum("ab,kabj->kj", ginv, W),
        np.einsum("ab,akbj->kj", ginv, W),
        np.einsum("ab,akib->ki", ginv, W),
        np.einsum("ab,klab->kl", ginv, W),
    ]
    return float(max(np.abs(t).max() for t in traces))


def ricci_rank(pack, tol=1e-8):
    sv = np.linalg.svd(pack.ricci, compute_uv=False)
    return int(np.sum(sv > tol))


def _sym_vec(T):
    n = T.shape[-1]
    iu = np.triu_indices(n)
    return T[..., iu[0], iu[1]]


def _recurrence(ricci, nabla_ricci):
    """Per point: max over directions of the 2nd singular value of [rho; nabla_i rho]."""
    N, n = ricci.shape[:2]
    r = _sym_vec(ricci)
    dr = _sym_vec(nabla_ricci)
    stack = np.stack([np.broadcast_to(r[:, None, :], dr.shape), dr], axis=2)
    sv = np.linalg.svd(stack, compute_uv=False)
    return sv[..., 1].max(axis=1)


def _codazzi(nabla_ricci):
    return np.abs(nabla_ricci - nabla_ricci.transpose(0, 2, 1, 3)).reshape(len(nabla_ricci), -1).max(axis=1)


@dataclass
class Survey:
    """Per-grid-point residuals of one metric field."""

    points: np.ndarray
    scalar: np.ndarray
    weyl_norm: np.ndarray
    nabla_weyl: np.ndarray
    nabla_riem: np.ndarray
    codazzi: np.ndarray
    ricci_recurrence: np.ndarray
    ricci_rank: np.ndarray
    first_bianchi: np.ndarray
    weyl_trace: np.ndarray
    semisymmetry: np.ndarray | None = None

    def summary(self):
        out = {
            "points": int(len(self.points)),
            "max_abs_scalar": float(np.abs(self.scalar).max()),
            "min_weyl_norm": float(self.weyl_norm.min()),
            "max_weyl_norm": float(self.weyl_norm.max()),
            "max_nabla_weyl": float(self.nabla_weyl.max()),
            "max_nabla_riem": float(self.nabla_riem.max()),
            "max_codazzi": float(self.codazzi.max()),
            "max_ricci_recurrence": float(self.ricci_recurrence.max()),
            "max_ricci_rank": int(self.ricci_rank.max()),
            "max_first_bianchi": float(self.first_bianchi.max()),
            "max_weyl_trace": float(self.weyl_trace.max()),
        }
        if self.semisymmetry is not None:
            out["max_semisymmetry"] = float(self.semisymmetry.max())
        return out


def survey(field_, prof, *, semisymmetry=True, rank_tol=1e-8):
    """Evaluate every identity residual at every grid point in one sweep."""
    X = prof.grid
    if X.shape[1] != field_.dim:
        raise ChartDomainError(f"grid has {X.shape[1]} coordinates, metric has {field_.dim}")
    geo = geometry_with_derivatives(field_, X, prof)
    N = len(X)
    R, W = geo["rdown"], geo["weyl"]
    ginv = geo["ginv"]
    bianchi = np.abs(R + R.transpose(0, 1, 3, 4, 2) + R.transpose(0, 1, 4, 2, 3)).reshape(N, -1).max(1)
    traces = np.stack([
        np.abs(np.einsum("nab,nabij->nij", ginv, W)).reshape(N, -1).max(1),
        np.abs(np.einsum("nab,nkaib->nki", ginv, W)).reshape(N, -1).max(1),
        np.abs(np.einsum("nab,nkabj->nkj", ginv, W)).reshape(N, -1).max(1),
    ]).max(0)
    ranks = np.sum(np.linalg.svd(geo["ricci"], compute_uv=False) > rank_tol, axis=1)
    semi = kernels.semisymmetry_max(geo["rup"], R) if semisymmetry else None
    return Survey(
        points=X,
        scalar=geo["scalar"],
        weyl_norm=np.abs(W).reshape(N, -1).max(1),
        nabla_weyl=np.abs(geo["nabla_weyl"]).reshape(N, -1).max(1),
        nabla_riem=np.abs(geo["nabla_riem"]).reshape(N, -1).max(1),
        codazzi=_codazzi(geo["nabla_ricci"]),
        ricci_recurrence=_recurrence(geo["ricci"], geo["nabla_ricci"]),
        ricci_rank=ranks,
        first_bianchi=bianchi,
        weyl_trace=traces,
        semisymmetry=semi,
    )


def check_harmonic_curvature(field_, prof):
    """max over the grid of |nabla_i rho_jk - nabla_j rho_ik|."""
    geo = geometry_with_derivatives(field_, prof.grid, prof)
    return float(_codazzi(geo["nabla_ricci"]).max())


def check_semisymmetry(field_, prof):
    """max over the grid of |R(X, Y) . R|.

    R(X, Y) acts on the (0,4)-tensor R as a derivation:
    ``(R(e_a, e_b) . T)_klij = -R^m_kab T_mlij - R^m_lab T_kmij
    - R^m_iab T_klmj - R^m_jab T_klim``.
    """
    geo = point_geometry(field_, prof.grid, prof)
    return float(kernels.semisymmetry_max(geo["rup"], geo["rdown"]).max())


def ricci_recurrence_residual(field_, prof):
    geo = geometry_with_derivatives(field_, prof.grid, prof)
    return float(_recurrence(geo["ricci"], geo["nabla_ricci"]).max())


def local_symmetry_residual(field_, prof):
    """max over the grid of |nabla R|."""
    geo = geometry_with_derivatives(field_, prof.grid, prof)
    return float(np.abs(geo["nabla_riem"]).max())


def parallel_weyl_residual(field_, prof):
    geo = geometry_with_derivatives(field_, prof.grid, prof)
    return float(np.abs(geo["nabla_weyl"]).max())


def scalar_residual(field_, prof):
    geo = point_geometry(field_, prof.grid, prof)
    return float(np.abs(geo["scalar"]).max())


def signature_of(g, tol=1e-12):
    ev = np.linalg.eigvalsh(g)
    scale = max(1.0, float(np.abs(ev).max()))
    return int(np.sum(ev > tol * scale)), int(np.sum(ev < -tol * scale))


def check_signature(field_, prof):
    """True when the metric has the declared signature at every grid point."""
    g = _evaluate(field_, prof.grid)
    return all(signature_of(gi) == tuple(field_.signature) for gi in g)


def christoffel_convergence_factor(field_, x, h=1e-2):
    """Error ratio of plain central-difference Christoffel symbols at h and h/2.

    The reference is the exact jet when the field has one, otherwise a
    Richardson-extrapolated value at h/8.  Second-order differencing gives a
    factor close to 4.
    """
    x = chart_point(x, field_.dim)
    X = x[None, :]
    n = field_.dim

    def fd(step, richardson=False):
        g, dg, _ = _fd_jet(field_, X, np.full(n, step), richardson)
        return kernels.christoffel(_inverse(g), dg)[0]

    if field_.jet is not None:
        g, dg, _ = field_.jet(X)
        ref = kernels.christoffel(_inverse(g), dg)[0]
    else:
        ref = fd(h / 8, richardson=True)
    e1 = np.abs(fd(h) - ref).max()
    e2 = np.abs(fd(h / 2) - ref).max()
    if e2 == 0.0:
        return float("nan")
    return float(e1 / e2)
