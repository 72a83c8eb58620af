"""Pure numpy implementations of the batched tensor kernels.

Every array carries a leading batch axis of length N (one entry per chart
point).  Index layouts:

* ``dg[N, a, b, m]``        = d_m g_ab
* ``ddg[N, a, b, m, r]``    = d_r d_m g_ab
* ``gamma[N, k, i, j]``     = Gamma^k_ij
* ``dgamma[N, k, i, j, m]`` = d_m Gamma^k_ij
* ``rup[N, k, l, i, j]``    = R^k_lij
* ``dT[N, m, ...]``         = d_m T_...
"""

from __future__ import annotations

import numpy as np


def _lowered(dg):
    return 0.5 * (
        np.einsum("nlji->nlij", dg)
        + dg
        - np.einsum("nijl->nlij", dg)
    )


def christoffel(ginv, dg):
    return np.einsum("nkl,nlij->nkij", ginv, _lowered(dg))


def christoffel_derivative(ginv, dg, ddg):
    # d_m of the lowered symbol Gamma_lij
    dlow = 0.5 * (
        np.einsum("nljim->nlijm", ddg)
        + ddg
        - np.einsum("nijlm->nlijm", ddg)
    )
    dginv = -np.einsum("nka,nabm,nbl->nklm", ginv, dg, ginv)
    return np.einsum("nklm,nlij->nkijm", dginv, _lowered(dg)) + np.einsum(
        "nkl,nlijm->nkijm", ginv, dlow
    )


def riemann(gamma, dgamma):
    # R^k_lij = d_i G^k_jl - d_j G^k_il + G^k_im G^m_jl - G^k_jm G^m_il
    d_i = np.einsum("nkjli->nklij", dgamma)
    quad = np.einsum("nkim,nmjl->nklij", gamma, gamma)
    return d_i - np.swapaxes(d_i, 3, 4) + quad - np.swapaxes(quad, 3, 4)


def lower_first(g, rup):
    return np.einsum("nka,nalij->nklij", g, rup)


def weyl(g, rdown, ricci, scalar):
    n = g.shape[-1]
    kn_rg = (
        np.einsum("nki,nlj->nklij", ricci, g)
        + np.einsum("nlj,nki->nklij", ricci, g)
        - np.einsum("nkj,nli->nklij", ricci, g)
        - np.einsum("nli,nkj->nklij", ricci, g)
    )
    gg = np.einsum("nki,nlj->nklij", g, g) - np.einsum("nkj,nli->nklij", g, g)
    s = scalar[:, None, None, None, None]
    return rdown - kn_rg / (n - 2) + s * gg / ((n - 1) * (n - 2))


def covariant_derivative4(t, dt, gamma):
    """nabla_m T_abcd from partials dt[N, m, a, b, c, d]."""
    return (
        dt
        - np.einsum("nema,nebcd->nmabcd", gamma, t)
        - np.einsum("nemb,naecd->nmabcd", gamma, t)
        - np.einsum("nemc,nabed->nmabcd", gamma, t)
        - np.einsum("nemd,nabce->nmabcd", gamma, t)
    )


def covariant_derivative2(t, dt, gamma):
    return (
        dt
        - np.einsum("nema,neb->nmab", gamma, t)
        - np.einsum("nemb,nae->nmab", gamma, t)
    )


def semisymmetry_max(rup, rdown):
    """Per-point max over (a, b, k, l, i, j) of |(R(e_a, e_b) . R)_klij|."""
    out = np.empty(rup.shape[0])
    for p in range(rup.shape[0]):
        ru, rd = rup[p], rdown[p]
        t = (
            -np.einsum("mkab,mlij->abklij", ru, rd)
            - np.einsum("mlab,kmij->abklij", ru, rd)
            - np.einsum("miab,klmj->abklij", ru, rd)
            - np.einsum("mjab,klim->abklij", ru, rd)
        )
        out[p] = np.abs(t).max()
    return out
