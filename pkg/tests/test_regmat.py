"""Regularization matrices: stencils, difference pairs, reweighting, solves."""

import numpy as np
import pytest
import scipy.sparse as sp

from regu.linop import IdentityOperator, SparseOperator
from regu.regmat import (
    Priorconditioner,
    build_laplacian,
    build_tv_pair,
    htv_weights,
    irn_weights,
    resolve_regularizer,
    tv_value,
)

from _oracles import tv_loop


def test_laplacian_1d_stencil_on_constant():
    L = build_laplacian(3, dim=1)
    assert np.allclose(L.apply(np.ones(3)), [-1.0, 0.0, -1.0], atol=0)


def test_laplacian_2d_constant_vector():
    L = build_laplacian(2, dim=2)
    assert np.allclose(L.apply(np.ones(4)), [-2.0, -2.0, -2.0, -2.0], atol=0)


def test_laplacian_1d_nonsingular_by_dense_svd():
    L = build_laplacian(6, dim=1).matrix.toarray()
    assert np.linalg.svd(L, compute_uv=False).min() > 0.0


def test_laplacian_symmetry_and_2d_kronecker_sum():
    n = 5
    L1 = build_laplacian(n, dim=1).matrix.toarray()
    L2 = build_laplacian(n, dim=2).matrix.toarray()
    assert np.array_equal(L1, L1.T)
    assert np.array_equal(L2, L2.T)
    expected = np.kron(np.eye(n), L1) + np.kron(L1, np.eye(n))
    assert np.array_equal(L2, expected)


def test_laplacian_rejects_tiny_grid():
    with pytest.raises(ValueError):
        build_laplacian(1, dim=1)


def test_difference_pair_2x2_definition():
    dh, dv = build_tv_pair(2)
    a, b, c, d = 1.0, 2.0, 3.0, 4.0
    x = np.array([a, c, b, d])  # column-major [a b; c d]
    assert np.allclose(dh.apply(x), [b - a, d - c], atol=0)
    assert np.allclose(dv.apply(x), [c - a, d - b], atol=0)


def test_difference_pair_rows_have_two_unit_nonzeros():
    dh, dv = build_tv_pair(4)
    for op in (dh, dv):
        m = op.matrix
        assert m.shape == (12, 16)
        for i in range(m.shape[0]):
            row = m.getrow(i)
            assert sorted(row.data.tolist()) == [-1.0, 1.0]


def test_tv_of_constant_image_is_zero():
    assert tv_value(np.full(25, 3.7)) == 0.0


def test_tv_matches_pixel_pair_loop():
    rng = np.random.default_rng(6)
    img = rng.uniform(size=(4, 4))
    assert abs(tv_value(img.ravel(order="F")) - tv_loop(img)) <= 1e-12


def test_irn_weights_ones_give_identity():
    L = irn_weights(np.ones(3), floor=1.0)
    assert np.allclose(L.matrix.toarray(), np.eye(3), atol=0)


def test_irn_weights_floor_value():
    L = irn_weights(np.array([4.0, 0.0]), floor=1e-4)
    assert np.allclose(L.matrix.diagonal(), [0.5, 100.0], atol=0)


def test_irn_penalty_reproduces_one_norm():
    rng = np.random.default_rng(8)
    x = rng.uniform(0.5, 2.0, size=40) * rng.choice([-1.0, 1.0], size=40)
    L = irn_weights(x)
    assert abs(np.linalg.norm(L.apply(x)) ** 2 - np.abs(x).sum()) <= 1e-12


def test_htv_weights_flat_image_floored():
    tau = 1e-3
    L = htv_weights(np.full(16, 2.0), floor=tau)
    mags = np.abs(L.matrix.data)
    assert np.allclose(mags[mags > 0], tau ** -0.5, atol=0)


def test_htv_single_pixel_gradient_weight():
    # column-major [0 3; 4 7]: pixel (0,0) has gradients (gh, gv) = (3, 4)
    x = np.array([0.0, 4.0, 3.0, 7.0])
    L = htv_weights(x)
    first = L.matrix.getrow(0)
    assert np.allclose(np.abs(first.data), 5.0 ** -0.5, atol=1e-15)


def test_htv_penalty_reproduces_total_variation():
    rng = np.random.default_rng(12)
    n = 6
    t = np.arange(n) / (n - 1)
    img = np.outer(np.sin(1.0 + 2.0 * t), np.cos(0.5 + t)) + 0.1 * rng.uniform(
        size=(n, n)
    )
    x = img.ravel(order="F")
    L = htv_weights(x)
    assert abs(np.linalg.norm(L.apply(x)) ** 2 - tv_loop(img)) <= 1e-10


def test_priorconditioner_identity_passthrough():
    v = np.array([1.0, -2.0, 0.5])
    prior = Priorconditioner(IdentityOperator(3))
    assert np.array_equal(prior.solve(v), v)


def test_priorconditioner_roundtrip_small():
    L = build_laplacian(4, dim=1)
    prior = Priorconditioner(L)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(4)
    back = L.apply(prior.solve(v))
    assert np.linalg.norm(back - v) <= 1e-10 * np.linalg.norm(v)


def test_priorconditioner_matches_dense_solve():
    L = build_laplacian(6, dim=1)
    prior = Priorconditioner(L)
    rng = np.random.default_rng(4)
    v = rng.standard_normal(6)
    dense = np.linalg.solve(L.matrix.toarray(), v)
    assert np.allclose(prior.solve(v), dense, atol=1e-12)
    dense_t = np.linalg.solve(L.matrix.toarray().T, v)
    assert np.allclose(prior.solve(v, transposed=True), dense_t, atol=1e-12)


@pytest.mark.parametrize("dim,n", [(1, 64), (2, 8)])
def test_priorconditioner_roundtrip_larger_grids(dim, n):
    L = build_laplacian(n, dim=dim)
    prior = Priorconditioner(L)
    rng = np.random.default_rng(5)
    v = rng.standard_normal(L.shape[1])
    back = L.apply(prior.solve(v))
    assert np.linalg.norm(back - v) <= 1e-10 * np.linalg.norm(v)


def test_priorconditioner_rejects_singular_matrix():
    singular = SparseOperator(sp.csr_matrix(np.ones((3, 3))))
    with pytest.raises(ValueError, match="full rank"):
        Priorconditioner(singular)


def test_priorconditioner_rejects_wide_matrix():
    wide = SparseOperator(sp.csr_matrix(np.ones((2, 3))))
    with pytest.raises(ValueError, match="full rank"):
        Priorconditioner(wide)


def test_priorconditioner_rectangular_norm_preserving():
    # tall full-column-rank L reduces to a square factor R with
    # ||L x|| = ||R x||, so x = solve(v) satisfies ||L x|| = ||v||
    Lm = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    L = SparseOperator(sp.csr_matrix(Lm))
    prior = Priorconditioner(L)
    rng = np.random.default_rng(9)
    for _ in range(5):
        v = rng.standard_normal(2)
        x = prior.solve(v)
        assert abs(np.linalg.norm(Lm @ x) - np.linalg.norm(v)) <= 1e-10
    # composing the transposed and plain solves inverts L^T L
    v = rng.standard_normal(2)
    w = prior.solve(prior.solve(v, transposed=True))
    assert np.allclose(Lm.T @ (Lm @ w), v, atol=1e-8)


def test_resolve_regularizer_strings():
    assert resolve_regularizer(None, 10) is None
    assert resolve_regularizer("identity", 10) is None
    L1 = resolve_regularizer("laplacian1d", 7)
    assert L1.shape == (7, 7)
    L2 = resolve_regularizer("laplacian2d", 9)
    assert L2.shape == (9, 9)
    with pytest.raises(ValueError, match="square"):
        resolve_regularizer("laplacian2d", 10)
    with pytest.raises(ValueError, match="unknown"):
        resolve_regularizer("ridge", 4)
