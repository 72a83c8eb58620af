"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary (measured value against its
tolerance); the lines are printed in a block at the end of the module run.
Run directly with ``python3 tests/test_acceptance.py`` for the summary only.
"""

from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from ecskit import chartcalc as C
from ecskit import d1family as D1
from ecskit import d2family as D2
from ecskit import lattice as L
from ecskit import olszak as O
from ecskit import riccati as R

LINES: dict[int, str] = {}


def _record(num, title, ok, detail):
    LINES[num] = f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}"
    return ok


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    write = reporter.write_line if reporter is not None else print
    write("")
    write("acceptance summary")
    for num in sorted(LINES):
        write(LINES[num])


def criterion_1():
    """20 random D1 data, n in {4, 5, 6}: every local invariant at every grid point."""
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = {"scalar": 0.0, "nabla_weyl": 0.0, "harmonic_curvature": 0.0, "semisymmetry": 0.0, "ricci_recurrence": 0.0}
    ranks, dims, failures = [], set(), []
    for i in range(20):
        n = (4, 5, 6)[i % 3]
        data = D1.random_d1data(rng, n)
        prof = C.ToleranceProfile(D1.default_grid(data, per_axis=3))
        rep = D1.run_suite(data, prof, transported=2)
        for key in worst:
            worst[key] = max(worst[key], rep["checks"][key]["value"])
        ranks.append(rep["checks"]["ricci_rank"]["value"])
        dims.update(rep["checks"]["olszak_dimension"]["value"])
        if not rep["passed"]:
            failures.append((i, n, [k for k, c in rep["checks"].items() if not c["ok"]]))
    elapsed = time.perf_counter() - t0
    ok = (
        not failures
        and worst["scalar"] < 1e-8
        and max(v for k, v in worst.items() if k != "scalar") < 1e-6
        and max(ranks) <= 2
        and dims == {1}
        and elapsed < 300
    )
    detail = (
        f"|s| {worst['scalar']:.1e} < 1e-8, |nabla W| {worst['nabla_weyl']:.1e}, codazzi {worst['harmonic_curvature']:.1e}, "
        f"semisym {worst['semisymmetry']:.1e}, recurrence {worst['ricci_recurrence']:.1e} < 1e-6, "
        f"rank rho <= {max(ranks)}, Olszak d {sorted(dims)}, {elapsed:.0f} s < 300 s"
    )
    if failures:
        detail += f", failing {failures}"
    return _record(1, "D1 suite (20 random data)", ok, detail)


def criterion_2():
    """f constant gives nabla R = 0; f = sin t does not (same A, gram)."""
    sym, ecs = D1.sine_example(4, constant=0.7), D1.sine_example(4)
    assert np.array_equal(sym.A, ecs.A) and np.array_equal(sym.gram, ecs.gram)
    prof = C.ToleranceProfile(D1.default_grid(ecs, per_axis=3))
    r_sym = C.local_symmetry_residual(D1.build_metric(sym), prof)
    r_ecs = C.local_symmetry_residual(D1.build_metric(ecs), prof)
    verdicts = (D1.local_symmetry_dichotomy(sym, prof), D1.local_symmetry_dichotomy(ecs, prof))
    ok = r_sym < 1e-6 and r_ecs > 1e-3 and verdicts == ("symmetric", "essentially-conformally-symmetric")
    return _record(2, "local-symmetry dichotomy", ok, f"f const |nabla R| {r_sym:.1e} < 1e-6, f = sin t max |nabla R| {r_ecs:.2f} > 1e-3")


def criterion_3():
    """(5, 6), j = 1, p = 1: roots, septuple, Floquet agreement, gate, verdict, runtime."""
    t0 = time.perf_counter()
    oracle = np.sort(np.roots([-1.0, 5.0, -6.0, 1.0]).real)
    roots = R.roots_of_P(5, 6).as_array()
    root_err = float(np.abs(roots - oracle).max())
    cert = L.certify_compact(5, 6, 1, 1.0)
    elapsed = time.perf_counter() - t0
    ok = (
        root_err < 1e-12
        and max(cert.riccati_residuals) < 1e-8
        and cert.floquet_agreement < 1e-8
        and cert.charpoly["residual"] < 1e-6
        and cert.charpoly["nearest_integer"] == [1, -5, 6, -1]
        and abs(cert.detT - 1) < 1e-8
        and cert.verdict == "pass"
        and elapsed < 120
    )
    detail = (
        f"roots {root_err:.1e} < 1e-12, Riccati {max(cert.riccati_residuals):.1e} < 1e-8, "
        f"Floquet {cert.floquet_agreement:.1e} < 1e-8, charpoly {cert.charpoly['nearest_integer']} "
        f"dev {cert.charpoly['residual']:.1e} < 1e-6, |det T - 1| {abs(cert.detT - 1):.1e} < 1e-8, "
        f"verdict {cert.verdict}, {elapsed:.1f} s < 120 s"
    )
    return _record(3, "pipeline (5,6) j=1", ok, detail)


def criterion_4():
    """(5, 6), j = 2: charpoly is the square of the j = 1 charpoly; certificate passes."""
    s = R.solve_septuple(R.roots_of_P(5, 6), 1.0)
    T1 = L.translation_operator(L.build_blocks(s, 1))
    T2 = L.translation_operator(L.build_blocks(s, 2))
    dev = float(np.abs(T2.charpoly - np.polymul(T1.charpoly, T1.charpoly)).max())
    cert = L.certify_compact(5, 6, 2, 1.0)
    ok = dev < 1e-6 and cert.verdict == "pass" and cert.n == 8
    return _record(4, "pipeline (5,6) j=2", ok, f"charpoly vs square {dev:.1e} < 1e-6, n {cert.n}, verdict {cert.verdict}")


def criterion_5():
    """Group law on 100 random triples, isometries, corrupted-action control."""
    s = R.solve_septuple(R.roots_of_P(5, 6), 1.0)
    data = L.d1data_from_blocks(L.build_blocks(s, 1))
    space = L.SolutionSpace(data)
    field_ = D1.build_metric(data)
    rng = np.random.default_rng(11)
    e = L.GroupElement.identity(space.m)

    def gap(a, b):
        return float(np.abs(a.state() - b.state()).max() + abs(a.q - b.q) + abs(a.k - b.k))

    law = 0.0
    for _ in range(100):
        g1, g2, g3 = (L.random_element(rng, space) for _ in range(3))
        lhs = L.group_compose(L.group_compose(g1, g2, space), g3, space)
        rhs = L.group_compose(g1, L.group_compose(g2, g3, space), space)
        law = max(law, gap(lhs, rhs), gap(L.group_compose(g1, e, space), g1), gap(L.group_compose(e, g1, space), g1))
        law = max(law, gap(L.group_compose(g1, L.group_inverse(g1, space), space), e))
    pts = C.random_grid(np.array([0.3, 0.0, 0.2, 0.2, 0.2]), 0.5, 3, seed=5)
    iso, bad = 0.0, np.inf
    for _ in range(10):
        g = L.random_element(rng, space)
        iso = max(iso, L.isometry_residual(g, space, field_, pts))
        bad = min(bad, L.isometry_residual(g, space, field_, pts, velocity_term=False))
    ok = law < 1e-10 and iso < 1e-6 and bad > 1e-3
    detail = f"associativity/identity/inverse {law:.1e} < 1e-10, isometry {iso:.1e} < 1e-6, corrupted action min {bad:.2e} > 1e-3"
    return _record(5, "group action", ok, detail)


def criterion_6():
    """D2: flat fixture locally symmetric; nonflat fixture ECS with d = 2 and a rank-one witness."""
    flat = D2.flat_fixture()
    phi_flat = D2.phi_residual(flat)
    prof_flat = C.ToleranceProfile(D2.default_grid(flat, per_axis=3))
    r_flat = C.local_symmetry_residual(D2.build_d2_metric(flat), prof_flat)

    data = D2.nonflat_fixture()
    field_ = D2.build_d2_metric(data)
    prof = C.ToleranceProfile(D2.default_grid(data, per_axis=3))
    summ = C.survey(field_, prof, semisymmetry=False).summary()
    dims = sorted({f.dim for f in O.fibers_on_grid(field_, prof)})
    witness = 0.0
    for pack in C.curvature_packs(field_, prof.grid[::9], prof):
        w = O.rank_one_weyl_witness(pack)
        witness = max(witness, np.inf if w is None else w.residual)
    ok = (
        phi_flat < 1e-10
        and r_flat < 1e-6
        and summ["max_nabla_weyl"] < 1e-6
        and summ["max_nabla_riem"] > 1e-3
        and dims == [2]
        and witness < 1e-6
        and summ["min_weyl_norm"] > 1e-6
    )
    detail = (
        f"flat: phi equation {phi_flat:.1e} < 1e-10, |nabla R| {r_flat:.1e} < 1e-6; "
        f"nonflat: |nabla W| {summ['max_nabla_weyl']:.1e} < 1e-6, max |nabla R| {summ['max_nabla_riem']:.2f} > 1e-3, "
        f"Olszak d {dims}, witness {witness:.1e} < 1e-6, min |W| {summ['min_weyl_norm']:.2e} > 0"
    )
    return _record(6, "D2 suite", ok, detail)


def criterion_7():
    """Engine self-checks: flat metrics, differencing convergence, Olszak dimension of flat."""
    curv, dims = 0.0, []
    for sig in ((4, 0), (2, 2), (3, 1), (3, 3)):
        field_ = C.flat_metric(sig)
        n = sum(sig)
        prof = C.ToleranceProfile(C.random_grid(np.zeros(n), 1.0, 4, seed=1))
        geo = C.point_geometry(field_, prof.grid, prof)
        curv = max(curv, float(np.abs(geo["rup"]).max()), float(np.abs(geo["weyl"]).max()))
        dims.append(({f.dim for f in O.fibers_on_grid(field_, prof)}, n))
    data = D1.sine_example(4)
    factor = C.christoffel_convergence_factor(D1.build_metric(data), np.array([0.4, 0.1, 0.3, -0.2]))
    dim_ok = all(d == {n} for d, n in dims)
    ok = curv < 1e-10 and 3.5 <= factor <= 4.5 and dim_ok
    detail = f"flat |R|, |W| {curv:.1e} < 1e-10, convergence factor {factor:.3f} in [3.5, 4.5], flat Olszak dimension = n: {dim_ok}"
    return _record(7, "engine self-checks", ok, detail)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 8)])
def test_acceptance(criterion):
    assert criterion(), LINES.get(CRITERIA.index(criterion) + 1)


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for num in sorted(LINES):
        print(LINES[num])
    sys.exit(0 if all(results) else 1)
