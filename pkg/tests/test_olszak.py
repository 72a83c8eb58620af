from __future__ import annotations

import numpy as np
import pytest

from ecskit import chartcalc as C
from ecskit import d1family as D1
from ecskit import d2family as D2
from ecskit import olszak as O

from conftest import sphere_metric


def _prof(X):
    return C.ToleranceProfile(np.atleast_2d(X))


def test_flat_gives_full_dimension():
    field_ = C.flat_metric((2, 2))
    X = C.box_grid(np.zeros(4), 0.5, 2)
    fibers = O.fibers_on_grid(field_, _prof(X))
    assert {f.dim for f in fibers} == {4}
    check = O.nullity_parallel_check(field_, fibers, _prof(X))
    assert check["skipped"]


def test_conformally_flat_gives_full_dimension():
    field_ = sphere_metric(4)
    X = np.array([[0.1, 0.2, -0.1, 0.3]])
    assert O.fibers_on_grid(field_, _prof(X))[0].dim == 4


@pytest.mark.parametrize("n", [4, 5])
def test_d1_fiber_is_null_line_along_s(n):
    data = D1.sine_example(n)
    field_ = D1.build_metric(data)
    X = D1.default_grid(data, per_axis=2)
    prof = _prof(X)
    fibers = O.fibers_on_grid(field_, prof)
    for f in fibers:
        assert f.dim == 1
        e_s = np.zeros(n)
        e_s[1] = 1.0
        assert abs(abs(f.basis[0] @ e_s) - 1.0) < 1e-10
        assert f.nullity_residual < 1e-10
    check = O.nullity_parallel_check(field_, fibers[:2], prof)
    assert check["parallelism"] < 1e-6


def test_d2_fiber_is_two_dimensional_null_and_parallel(nonflat4):
    field_ = D2.build_d2_metric(nonflat4)
    X = D2.default_grid(nonflat4, per_axis=2)
    prof = _prof(X)
    fibers = O.fibers_on_grid(field_, prof)
    assert {f.dim for f in fibers} == {2}
    check = O.nullity_parallel_check(field_, fibers[:2], prof)
    assert check["nullity"] < 1e-10
    assert check["parallelism"] < 1e-6
    # fibers are spanned by the fibre directions dp_1, dp_2
    for f in fibers:
        assert np.abs(f.basis[:, :2]).max() < 1e-10


def test_rank_one_witness_iff_dimension_two(nonflat4):
    field_ = D2.build_d2_metric(nonflat4)
    X = D2.default_grid(nonflat4, per_axis=2)[:3]
    prof = _prof(X)
    signs, omegas = [], []
    for pack in C.curvature_packs(field_, X, prof):
        w = O.rank_one_weyl_witness(pack)
        assert w is not None
        assert w.residual < 1e-10 * max(1.0, np.abs(pack.weyl_down).max())
        assert w.image_angle < 1e-8
        signs.append(w.sign)
        omegas.append(w.omega)
    assert len(set(signs)) == 1
    # omega is determined up to sign and varies continuously
    a, b = omegas[0] / np.linalg.norm(omegas[0]), omegas[1] / np.linalg.norm(omegas[1])
    assert min(np.linalg.norm(a - b), np.linalg.norm(a + b)) < 0.5


def test_no_witness_for_d1_or_flat():
    data = D1.sine_example(4)
    field_ = D1.build_metric(data)
    X = D1.default_grid(data, per_axis=2)[:1]
    pack = C.curvature_pack(field_, X[0], _prof(X))
    assert O.rank_one_weyl_witness(pack) is None
    flat = C.flat_metric((2, 2))
    pack = C.curvature_pack(flat, np.zeros(4), _prof(np.zeros((1, 4))))
    assert O.rank_one_weyl_witness(pack) is None


def test_ambiguous_rank_raises():
    M = np.diag([1.0, 1e-6, 1e-8])
    with pytest.raises(O.AmbiguousDimensionError) as exc:
        O.numerical_kernel(M)
    assert exc.value.candidates == (1, 2)


def test_clear_gap_accepted():
    M = np.diag([1.0, 0.5, 1e-13])
    basis, s = O.numerical_kernel(M)
    assert basis.shape == (1, 3)
    assert abs(abs(basis[0, 2]) - 1) < 1e-12


def test_zero_matrix_kernel_is_everything():
    basis, _ = O.numerical_kernel(np.zeros((4, 4)))
    np.testing.assert_array_equal(basis, np.eye(4))


def test_wedge_rows_are_lexicographic():
    n = 4
    W = np.zeros((n, n, n, n))
    W[0, 1, 2, 3] = W[1, 0, 3, 2] = W[2, 3, 0, 1] = W[3, 2, 1, 0] = 1
    W[1, 0, 2, 3] = W[0, 1, 3, 2] = W[3, 2, 0, 1] = W[2, 3, 1, 0] = -1
    M = O.wedge_matrix(W, np.eye(n))
    assert M.shape == (6 * 4, n)
    # row (ab=01, ijk=123): g_ic W_01,23 with i=1
    np.testing.assert_array_equal(M[3], [0, 1, 0, 0])


def test_invalid_dimension_rejected():
    with pytest.raises(ValueError):
        O.DistributionFiber(np.zeros((3, 5)), 3, np.zeros(5), None)


def test_no_witness_for_conformally_flat():
    field_ = sphere_metric(4)
    X = np.array([[0.1, 0.2, -0.1, 0.3]])
    assert O.rank_one_weyl_witness(C.curvature_pack(field_, X[0], _prof(X))) is None
