"""Operator zoo: apply/adjoint correctness against dense and loop oracles."""

import numpy as np
import pytest
import scipy.sparse as sp

import regu.linop as linop
from regu.linop import (
    AdjointUnavailableError,
    ConvolutionOperator,
    DenseOperator,
    DimensionMismatchError,
    FunctionalOperator,
    IdentityOperator,
    KroneckerOperator,
    SparseOperator,
    StackedOperator,
    adjoint_consistency_test,
    as_dense,
    size_of,
    stack_vertical,
)

from _oracles import conv_matrix_loop


def test_identity_apply():
    op = IdentityOperator(3)
    assert np.array_equal(op.apply(np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])


def test_dense_apply_2x2():
    op = DenseOperator(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert np.array_equal(op.apply(np.array([1.0, 1.0])), [3.0, 7.0])


def test_kronecker_apply_matches_dense_kron():
    F = np.array([[1.0, 1.0], [0.0, 1.0]])
    op = KroneckerOperator(F, F)
    x = np.eye(2).ravel(order="F")  # vec of the 2x2 identity
    dense = np.kron(F, F)
    assert np.allclose(op.apply(x), dense @ x, atol=0, rtol=0)


def test_identity_adjoint():
    op = IdentityOperator(2)
    assert np.array_equal(op.apply_adjoint(np.array([5.0, 6.0])), [5.0, 6.0])


def test_dense_adjoint_first_unit_vector():
    op = DenseOperator(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert np.array_equal(op.apply_adjoint(np.array([1.0, 0.0])), [1.0, 2.0])


def test_convolution_adjoint_is_dense_transpose():
    rng = np.random.default_rng(3)
    psf = rng.uniform(size=(5, 5))
    psf /= psf.sum()
    op = ConvolutionOperator(psf, 8, boundary="reflective")
    dense = as_dense(op)
    for _ in range(5):
        y = rng.standard_normal(64)
        assert np.allclose(op.apply_adjoint(y), dense.T @ y, atol=1e-12)


def test_adjoint_consistency_identity_is_zero():
    assert adjoint_consistency_test(IdentityOperator(6), trials=5, seed=1) == 0.0


def test_adjoint_consistency_random_dense():
    rng = np.random.default_rng(7)
    op = DenseOperator(rng.standard_normal((10, 7)))
    assert adjoint_consistency_test(op, trials=20, seed=0) <= 1e-12


def test_adjoint_consistency_sparse_vs_explicit_transpose():
    from regu.problems import gen_tomo

    op = gen_tomo(n=16, angles=np.arange(0.0, 180.0, 15.0)).A
    assert adjoint_consistency_test(op, trials=20, seed=0) <= 1e-10
    # the adjoint must be the explicitly transposed sparse matrix
    mt = op.matrix.T.tocsr()
    rng = np.random.default_rng(5)
    y = rng.standard_normal(op.shape[0])
    assert np.allclose(op.apply_adjoint(y), mt @ y, atol=1e-12)


def test_adjoint_consistency_deterministic_for_fixed_seed():
    rng = np.random.default_rng(11)
    op = DenseOperator(rng.standard_normal((9, 4)))
    a = adjoint_consistency_test(op, trials=7, seed=42)
    b = adjoint_consistency_test(op, trials=7, seed=42)
    assert a == b


def test_stack_scale_zero_top_slice():
    rng = np.random.default_rng(0)
    A = DenseOperator(rng.standard_normal((4, 3)))
    L = DenseOperator(rng.standard_normal((3, 3)))
    stk = stack_vertical(A, L, 0.0)
    x = rng.standard_normal(3)
    out = stk.apply(x)
    assert np.allclose(out[:4], A.apply(x), atol=0, rtol=0)
    assert np.all(out[4:] == 0.0)


def test_stack_identity_pair():
    stk = stack_vertical(IdentityOperator(2), IdentityOperator(2), 1.0)
    assert np.array_equal(stk.apply(np.array([1.0, 2.0])), [1.0, 2.0, 1.0, 2.0])


def test_stack_matches_dense_concatenation():
    rng = np.random.default_rng(1)
    Am = rng.standard_normal((5, 3))
    Lm = rng.standard_normal((3, 3))
    lam = 0.7
    stk = stack_vertical(DenseOperator(Am), DenseOperator(Lm), lam)
    dense = np.vstack([Am, lam * Lm])
    x = rng.standard_normal(3)
    y = rng.standard_normal(8)
    assert np.allclose(stk.apply(x), dense @ x, atol=1e-12)
    assert np.allclose(stk.apply_adjoint(y), dense.T @ y, atol=1e-12)


def test_stack_column_mismatch_rejected():
    with pytest.raises(DimensionMismatchError):
        stack_vertical(IdentityOperator(2), IdentityOperator(3))


def test_size_query_blur_default_scale():
    from regu.problems import gen_blur

    prob = gen_blur(n=256)
    assert size_of(prob.A) == (65536, 65536)


def test_size_query_relaxometry_default_scale():
    from regu.problems import gen_nmr

    prob = gen_nmr()
    assert size_of(prob.A) == (65536, 16384)


def test_size_query_identity():
    assert size_of(IdentityOperator(4)) == (4, 4)


def test_apply_dimension_mismatch_names_lengths():
    op = DenseOperator(np.ones((3, 2)))
    with pytest.raises(DimensionMismatchError, match="2"):
        op.apply(np.ones(5))
    with pytest.raises(DimensionMismatchError, match="3"):
        op.apply_adjoint(np.ones(4))


def test_functional_without_adjoint_fails_fast():
    op = FunctionalOperator(3, 3, lambda x: 2.0 * x)
    assert not op.has_adjoint
    with pytest.raises(AdjointUnavailableError, match="transpose-free"):
        op.apply_adjoint(np.ones(3))


def test_kronecker_dense_equivalence_small_instances():
    rng = np.random.default_rng(9)
    for m1, n1, m2, n2 in [(2, 2, 2, 2), (3, 2, 4, 3), (5, 5, 3, 3), (4, 6, 4, 2)]:
        A1 = rng.standard_normal((m1, n1))
        A2 = rng.standard_normal((m2, n2))
        op = KroneckerOperator(A2, A1)
        dense = np.kron(A2, A1)
        assert op.shape == dense.shape
        x = rng.standard_normal(n1 * n2)
        y = rng.standard_normal(m1 * m2)
        assert np.allclose(op.apply(x), dense @ x, atol=1e-12)
        assert np.allclose(op.apply_adjoint(y), dense.T @ y, atol=1e-12)


def test_apply_is_linear():
    rng = np.random.default_rng(21)
    psf = rng.uniform(size=(3, 3))
    psf /= psf.sum()
    ops = [
        DenseOperator(rng.standard_normal((6, 4))),
        SparseOperator(sp.random(7, 5, density=0.4, random_state=2, format="csr")),
        KroneckerOperator(rng.standard_normal((3, 2)), rng.standard_normal((2, 3))),
        ConvolutionOperator(psf, 5, boundary="periodic"),
    ]
    for op in ops:
        n = op.shape[1]
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        a, b = 0.3, -1.7
        lhs = op.apply(a * x + b * y)
        rhs = a * op.apply(x) + b * op.apply(y)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_sparse_csr_structure_invariants():
    m = sp.random(8, 6, density=0.3, random_state=4, format="csr")
    op = SparseOperator(m)
    offs = op.row_offsets
    assert offs[0] == 0 and offs[-1] == m.nnz
    assert np.all(np.diff(offs) >= 0)
    for i in range(8):
        cols = op.column_indices[offs[i] : offs[i + 1]]
        assert np.all(np.diff(cols) > 0)


@pytest.mark.parametrize("boundary", ["zero", "periodic", "reflective"])
def test_convolution_matches_loop_assembled_matrix(boundary):
    rng = np.random.default_rng(13)
    psf = rng.uniform(size=(5, 5))
    psf /= psf.sum()
    n = 8
    op = ConvolutionOperator(psf, n, boundary=boundary)
    dense = conv_matrix_loop(n, psf, (2, 2), boundary)
    assert np.max(np.abs(as_dense(op) - dense)) <= 1e-10
    y = rng.standard_normal(n * n)
    assert np.allclose(op.apply_adjoint(y), dense.T @ y, atol=1e-10)


def test_convolution_direct_and_fft_paths_agree(monkeypatch):
    rng = np.random.default_rng(17)
    psf = rng.uniform(size=(7, 7))
    psf /= psf.sum()
    direct = as_dense(ConvolutionOperator(psf, 12, boundary="reflective"))
    monkeypatch.setattr(linop, "_DIRECT_CONV_BUDGET", 0)
    fft = as_dense(ConvolutionOperator(psf, 12, boundary="reflective"))
    assert np.max(np.abs(direct - fft)) <= 1e-10


def test_stacked_operator_kind_and_shape():
    stk = StackedOperator(IdentityOperator(3), IdentityOperator(3), 2.0)
    assert stk.kind == "stacked"
    assert stk.shape == (6, 3)


def test_operators_do_not_mutate_inputs():
    rng = np.random.default_rng(23)
    op = DenseOperator(rng.standard_normal((4, 4)))
    x = rng.standard_normal(4)
    x0 = x.copy()
    op.apply(x)
    op.apply_adjoint(x)
    assert np.array_equal(x, x0)
