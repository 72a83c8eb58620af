"""The Olszak distribution and the rank-one Weyl structure.

At a point, the Olszak fiber is the kernel of the linear map

    u  ->  ( g(u, .) ^ W(e_a, e_b, ., .) )_{a<b}

with values in 3-forms.  Two-forms are expressed in the lexicographic basis
e_i ^ e_j (i < j) and 3-forms in e_i ^ e_j ^ e_k (i < j < k).

Rank decisions use a relative singular-value threshold: values below
``rel_tol * sigma_max`` count as zero, and the split between kept and dropped
values must show a gap of at least ``gap`` (ratio), otherwise the dimension
is reported as ambiguous.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from . import chartcalc

REL_TOL = 1e-7
GAP = 1e3
# W below this fraction of the curvature scale counts as zero (fiber = T_xM)
WEYL_FLOOR = 1e-9


class AmbiguousDimensionError(ValueError):
    def __init__(self, candidates, singular_values):
        self.candidates = tuple(candidates)
        self.singular_values = np.asarray(singular_values)
        super().__init__(
            f"numerical rank is ambiguous: dimension {candidates[0]} or {candidates[1]} "
            f"(singular values {np.array2string(self.singular_values, precision=3)})"
        )


@dataclass
class DistributionFiber:
    basis: np.ndarray
    dim: int
    point: np.ndarray
    nullity_residual: float | None

    def __post_init__(self):
        if self.dim not in (0, 1, 2, len(self.point)):
            raise ValueError(f"Olszak dimension {self.dim} is not in {{0, 1, 2, n}}")


@dataclass
class RankOneWeylWitness:
    omega: np.ndarray
    sign: int
    residual: float
    image_angle: float


def _pairs(n):
    return list(itertools.combinations(range(n), 2))


def _triples(n):
    return list(itertools.combinations(range(n), 3))


def wedge_matrix(weyl, g):
    """Matrix of u -> (g(u,.) ^ W(e_a, e_b, ., .))_{a<b}, rows (ab, ijk)."""
    n = g.shape[0]
    pairs, triples = _pairs(n), _triples(n)
    rows = []
    for a, b in pairs:
        w = weyl[a, b]
        for i, j, k in triples:
            rows.append(g[i] * w[j, k] - g[j] * w[i, k] + g[k] * w[i, j])
    return np.array(rows)


def numerical_kernel(M, rel_tol=REL_TOL, gap=GAP):
    """Orthonormal kernel basis (rows) of M with the rank rules above."""
    n = M.shape[1]
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    s = np.concatenate([s, np.zeros(n - len(s))]) if len(s) < n else s[:n]
    if s[0] == 0.0:
        return np.eye(n), s
    rank = int(np.sum(s > rel_tol * s[0]))
    if 0 < rank < n:
        kept, dropped = s[rank - 1], s[rank]
        if dropped > 0 and kept / dropped < gap:
            raise AmbiguousDimensionError((n - rank, n - rank + 1), s)
    return vt[rank:], s


def _kernel_of(weyl, riem, g, tol):
    n = g.shape[0]
    if np.abs(weyl).max() <= WEYL_FLOOR * max(1.0, np.abs(riem).max()):
        return np.eye(n)
    return numerical_kernel(wedge_matrix(weyl, g), tol)[0]


def olszak_fiber(pack, g=None, tol=REL_TOL):
    g = pack.metric if g is None else g
    basis = _kernel_of(pack.weyl_down, pack.riem_down, g, tol)
    dim = len(basis)
    n = g.shape[0]
    null = None if dim == n or dim == 0 else float(np.abs(basis @ g @ basis.T).max())
    return DistributionFiber(basis, dim, np.asarray(pack.point), null)


def fibers_on_grid(field_, prof, tol=REL_TOL, points=None):
    X = prof.grid if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    geo = chartcalc.point_geometry(field_, X, prof)
    out = []
    for i, x in enumerate(X):
        g = geo["g"][i]
        basis = _kernel_of(geo["weyl"][i], geo["rdown"][i], g, tol)
        dim = len(basis)
        null = None if dim in (0, len(x)) else float(np.abs(basis @ g @ basis.T).max())
        out.append(DistributionFiber(basis, dim, x.copy(), null))
    return out


def parallel_transport(field_, basis, x0, x1, prof, steps=16):
    """Transport the rows of ``basis`` along the segment x0 -> x1 (RK4)."""
    x0, x1 = np.asarray(x0, float), np.asarray(x1, float)
    dx = x1 - x0

    def gamma_at(tau):
        return chartcalc.christoffel(field_, x0 + tau * dx, prof)

    def rhs(tau, U):
        G = gamma_at(tau)
        # du^k/dtau = -Gamma^k_ij dx^i u^j
        return -np.einsum("kij,i,aj->ak", G, dx, U)

    U = np.array(basis, dtype=float)
    h = 1.0 / steps
    for s in range(steps):
        tau = s * h
        k1 = rhs(tau, U)
        k2 = rhs(tau + h / 2, U + h / 2 * k1)
        k3 = rhs(tau + h / 2, U + h / 2 * k2)
        k4 = rhs(tau + h, U + h * k3)
        U = U + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return U


def nullity_parallel_check(field_, fibers, prof, step=0.05):
    """Nullity of every fiber and parallelism between neighbouring points.

    Each fiber is transported a distance ``step`` along every coordinate axis
    and compared, by largest principal angle, with the fiber computed there.
    Fibers of full dimension are skipped for both checks.
    """
    dims = sorted({f.dim for f in fibers})
    nullity = [f.nullity_residual for f in fibers if f.nullity_residual is not None]
    angles = []
    n = field_.dim
    for f in fibers:
        if f.dim in (0, n):
            continue
        for m in range(n):
            x1 = f.point.copy()
            x1[m] += step
            moved = parallel_transport(field_, f.basis, f.point, x1, prof)
            there = fibers_on_grid(field_, prof, points=x1)[0]
            if there.dim != f.dim:
                angles.append(np.pi / 2)
                continue
            angles.append(float(np.max(subspace_angles(moved.T, there.basis.T))))
    return {
        "dimensions": dims,
        "nullity": max(nullity) if nullity else None,
        "parallelism": max(angles) if angles else None,
        "skipped": all(f.dim in (0, n) for f in fibers),
    }


def two_form_matrix(weyl):
    pairs = _pairs(weyl.shape[0])
    idx = np.array(pairs)
    return weyl[idx[:, 0], idx[:, 1]][:, idx[:, 0], idx[:, 1]]


def rank_one_weyl_witness(pack, g=None, tol=REL_TOL, fiber=None):
    """W = sign * omega (x) omega when W has rank one on 2-forms, else None."""
    g = pack.metric if g is None else g
    W = pack.weyl_down
    n = g.shape[0]
    M = two_form_matrix(W)
    M = 0.5 * (M + M.T)
    evals, evecs = np.linalg.eigh(M)
    order = np.argsort(-np.abs(evals))
    evals, evecs = evals[order], evecs[:, order]
    top = abs(evals[0])
    if top <= WEYL_FLOOR * max(1.0, np.abs(pack.riem_down).max()) or np.sum(np.abs(evals) > tol * top) != 1:
        return None
    v = evecs[:, 0]
    sign = 1 if v @ M @ v > 0 else -1
    omega = np.zeros((n, n))
    for coeff, (i, j) in zip(np.sqrt(top) * v, _pairs(n)):
        omega[i, j], omega[j, i] = coeff, -coeff
    residual = float(np.abs(W - sign * np.einsum("kl,ij->klij", omega, omega)).max())
    endo = np.linalg.solve(g, omega)
    u, s, _ = np.linalg.svd(endo)
    image = u[:, : int(np.sum(s > tol * s[0]))]
    if fiber is None:
        fiber = olszak_fiber(pack, g, tol)
    if fiber.dim != image.shape[1]:
        angle = np.pi / 2
    else:
        angle = float(np.max(subspace_angles(image, fiber.basis.T)))
    return RankOneWeylWitness(omega, sign, residual, angle)
