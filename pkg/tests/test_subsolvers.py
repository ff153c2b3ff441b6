import warnings

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from fracschur import (
    DenseSolver,
    DimensionMismatchError,
    SingularBlockError,
    ZeroPivotError,
    amg_setup,
    amg_vcycle,
    block_ilu0_apply,
    block_ilu0_factor,
    dense_solve,
    ensure_canonical,
    ilu0_apply,
    ilu0_factor,
    sor_sweep,
    SorSmoother,
)
from fracschur.amg import C_POINT, F_POINT, cf_split, strength_graph


def lap1d(n):
    return sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)).tocsr()


def lap2d(m):
    one = lap1d(m)
    eye = sp.identity(m, format="csr")
    return (sp.kron(one, eye) + sp.kron(eye, one)).tocsr()


def random_spd_sparse(n, seed, density=0.05):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng, format="csr")
    A = A + A.T + sp.diags(np.full(n, 4.0))
    return ensure_canonical(A.tocsr())


class TestIlu0:
    def test_diagonal_matrix_exact(self):
        d = np.array([2.0, 4.0, 8.0])
        f = ilu0_factor(sp.diags(d).tocsr())
        np.testing.assert_allclose(ilu0_apply(f, [2.0, 4.0, 8.0]), [1, 1, 1], rtol=1e-15)

    def test_tridiagonal_exact(self):
        A = lap1d(40)
        f = ilu0_factor(A)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(40)
        np.testing.assert_allclose(ilu0_apply(f, A @ x), x, atol=1e-12)

    def test_pattern_preserved(self):
        A = lap2d(16)
        f = ilu0_factor(A)
        np.testing.assert_array_equal(f.indptr, A.indptr)
        np.testing.assert_array_equal(f.indices, A.indices)
        assert f.nnz == A.nnz

    def test_product_matches_on_pattern(self):
        # the defining property: (L U)_ij = A_ij wherever A_ij is stored
        A = lap2d(12)
        f = ilu0_factor(A)
        n = A.shape[0]
        L = np.eye(n)
        U = np.zeros((n, n))
        for i in range(n):
            for k in range(f.indptr[i], f.indptr[i + 1]):
                j = f.indices[k]
                if j < i:
                    L[i, j] = f.data[k]
                else:
                    U[i, j] = f.data[k]
        product = L @ U
        rows, cols = A.nonzero()
        np.testing.assert_allclose(
            product[rows, cols], A.toarray()[rows, cols], atol=1e-13
        )

    def test_laplacian_preconditioning_quality(self):
        A = lap2d(16)
        f = ilu0_factor(A)
        rng = np.random.default_rng(1)
        r = rng.standard_normal(A.shape[0])
        err = np.linalg.norm(r - A @ ilu0_apply(f, r)) / np.linalg.norm(r)
        assert err < 0.6

    def test_zero_pivot_mid_factorization(self):
        # u11 = 1 - 1*1 = 0 after eliminating the first row
        A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(ZeroPivotError) as err:
            ilu0_factor(A)
        assert err.value.row == 1

    def test_linearity(self):
        A = random_spd_sparse(60, seed=2)
        f = ilu0_factor(A)
        rng = np.random.default_rng(3)
        r1, r2 = rng.standard_normal((2, 60))
        lhs = ilu0_apply(f, 2.0 * r1 - 3.0 * r2)
        rhs = 2.0 * ilu0_apply(f, r1) - 3.0 * ilu0_apply(f, r2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_shape_and_length_validation(self):
        with pytest.raises(DimensionMismatchError):
            ilu0_factor(sp.csr_matrix(np.ones((2, 3))))
        f = ilu0_factor(sp.identity(4, format="csr"))
        with pytest.raises(DimensionMismatchError):
            ilu0_apply(f, np.zeros(5))


class TestBlockIlu0:
    def test_cell_size_one_matches_scalar(self):
        A = random_spd_sparse(50, seed=4)
        fs = ilu0_factor(A)
        fb = block_ilu0_factor(A, cell_size=1)
        rng = np.random.default_rng(5)
        r = rng.standard_normal(50)
        np.testing.assert_allclose(
            block_ilu0_apply(fb, r), ilu0_apply(fs, r), atol=1e-13
        )

    def test_block_diagonal_exact(self):
        rng = np.random.default_rng(6)
        cells = [rng.uniform(-1, 1, (3, 3)) + 4 * np.eye(3) for _ in range(5)]
        A = sp.block_diag(cells, format="csr")
        f = block_ilu0_factor(A, cell_size=3)
        x = rng.standard_normal(15)
        np.testing.assert_allclose(block_ilu0_apply(f, A @ x), x, atol=1e-12)

    def test_block_tridiagonal_exact(self):
        # fill stays inside the block pattern, so the factorization is exact
        rng = np.random.default_rng(7)
        k, d = 8, 2
        n = k * d
        A = np.zeros((n, n))
        for i in range(k):
            A[i * d:(i + 1) * d, i * d:(i + 1) * d] = rng.uniform(-1, 1, (d, d)) + 5 * np.eye(d)
            if i + 1 < k:
                A[i * d:(i + 1) * d, (i + 1) * d:(i + 2) * d] = rng.uniform(-1, 1, (d, d))
                A[(i + 1) * d:(i + 2) * d, i * d:(i + 1) * d] = rng.uniform(-1, 1, (d, d))
        As = sp.csr_matrix(A)
        f = block_ilu0_factor(As, cell_size=d)
        x = rng.standard_normal(n)
        np.testing.assert_allclose(block_ilu0_apply(f, As @ x), x, atol=1e-11)

    def test_singular_pivot_cell(self):
        A = sp.block_diag([np.eye(2), np.zeros((2, 2))], format="csr")
        with pytest.raises(ZeroPivotError):
            block_ilu0_factor(A, cell_size=2)

    def test_divisibility_validation(self):
        with pytest.raises(DimensionMismatchError):
            block_ilu0_factor(sp.identity(5, format="csr"), cell_size=2)

    def test_linearity(self):
        A = random_spd_sparse(48, seed=8)
        f = block_ilu0_factor(A, cell_size=2)
        rng = np.random.default_rng(9)
        r1, r2 = rng.standard_normal((2, 48))
        lhs = block_ilu0_apply(f, 0.5 * r1 + 4.0 * r2)
        rhs = 0.5 * block_ilu0_apply(f, r1) + 4.0 * block_ilu0_apply(f, r2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestSor:
    def test_identity_solved_in_one_sweep(self):
        A = sp.identity(6, format="csr")
        r = np.arange(6.0)
        np.testing.assert_array_equal(sor_sweep(A, np.zeros(6), r), r)

    def test_matches_hand_gauss_seidel(self):
        A = sp.csr_matrix(np.array([[4.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 4.0]]))
        b = np.array([1.0, 2.0, 3.0])
        x0 = np.array([0.1, 0.2, 0.3])
        dense = A.toarray()
        x = x0.copy()
        for i in range(3):
            x[i] = (b[i] - dense[i, :i] @ x[:i] - dense[i, i + 1:] @ x[i + 1:]) / dense[i, i]
        got = sor_sweep(A, x0, b, omega=1.0)
        np.testing.assert_allclose(got, x, rtol=1e-15)

    def test_initial_guess_not_mutated(self):
        A = lap1d(5) + sp.identity(5)
        x0 = np.ones(5)
        sor_sweep(A.tocsr(), x0, np.zeros(5))
        np.testing.assert_array_equal(x0, np.ones(5))

    def test_residual_reduction(self):
        A = lap1d(20)
        b = np.ones(20)
        x = np.zeros(20)
        norms = [np.linalg.norm(b)]
        for _ in range(10):
            x = sor_sweep(A, x, b)
            norms.append(np.linalg.norm(b - A @ x))
        assert all(n1 <= n0 * (1 + 1e-14) for n0, n1 in zip(norms, norms[1:]))
        assert norms[-1] < 0.8 * norms[0]

    def test_ssor_energy_norm_contraction(self):
        A = (lap1d(30) + sp.identity(30)).tocsr()
        dense = A.toarray()
        x_star = np.linalg.solve(dense, np.ones(30))
        x = np.zeros(30)
        def energy(v):
            e = v - x_star
            return e @ (dense @ e)
        last = energy(x)
        for _ in range(5):
            x = sor_sweep(A, x, np.ones(30), symmetric=True)
            cur = energy(x)
            assert cur < last
            last = cur

    def test_zero_diagonal_rejected(self):
        A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
        A.setdiag([1.0, 0.0])
        A = sp.csr_matrix(A.toarray() + np.array([[0.0, 0.0], [0.0, 0.0]]))
        A = sp.csr_matrix((np.array([1.0, 1.0, 1.0, 0.0]),
                           (np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]))),
                          shape=(2, 2))
        with pytest.raises(ZeroPivotError) as err:
            sor_sweep(A, np.zeros(2), np.ones(2))
        assert err.value.row == 1

    def test_smoother_matches_sweep(self):
        A = random_spd_sparse(30, seed=10)
        rng = np.random.default_rng(11)
        x0 = rng.standard_normal(30)
        b = rng.standard_normal(30)
        sm = SorSmoother(A, omega=1.3)
        np.testing.assert_array_equal(
            sm.smooth(x0, b, sweeps=2), sor_sweep(A, x0, b, omega=1.3, sweeps=2)
        )


class TestAmg:
    def test_one_dim_hierarchy_shape(self):
        A = lap1d(64)
        h = amg_setup(A, strong_threshold=0.25, coarse_cap=16)
        sizes = h.level_sizes
        assert len(sizes) >= 2
        assert all(a > b for a, b in zip(sizes, sizes[1:]))
        assert sizes[-1] <= 16
        assert 1.0 <= h.operator_complexity <= 5.0

    def test_every_fine_point_sees_coarse(self):
        A = lap1d(64)
        S = strength_graph(A, 0.25)
        marks = cf_split(S)
        assert set(np.unique(marks)) <= {C_POINT, F_POINT}
        for i in np.flatnonzero(marks == F_POINT):
            nbrs = S.indices[S.indptr[i]:S.indptr[i + 1]]
            assert np.any(marks[nbrs] == C_POINT)

    def test_small_matrix_is_direct(self):
        A = random_spd_sparse(20, seed=12)
        h = amg_setup(A, coarse_cap=64)
        assert h.n_levels == 1
        r = np.random.default_rng(13).standard_normal(20)
        np.testing.assert_allclose(
            amg_vcycle(h, r), np.linalg.solve(A.toarray(), r), atol=1e-11
        )

    def test_galerkin_coarse_operators(self):
        A = lap1d(80)
        h = amg_setup(A, strong_threshold=0.25, coarse_cap=10)
        for i, lvl in enumerate(h.levels):
            coarse = h.levels[i + 1].A if i + 1 < len(h.levels) else h.coarse_A
            want = (lvl.R @ lvl.A @ lvl.P).toarray()
            np.testing.assert_allclose(coarse.toarray(), want, atol=1e-12)

    def test_vcycle_contraction_2d(self):
        A = lap2d(32)
        h = amg_setup(A, strong_threshold=0.25, coarse_cap=40)
        rng = np.random.default_rng(14)
        b = rng.standard_normal(A.shape[0])
        x = np.zeros_like(b)
        r0 = np.linalg.norm(b)
        for _ in range(10):
            x += amg_vcycle(h, b - A @ x)
        r10 = np.linalg.norm(b - A @ x)
        assert (r10 / r0) ** 0.1 < 0.6

    def test_zero_rhs(self):
        A = lap1d(64)
        h = amg_setup(A, strong_threshold=0.25, coarse_cap=16)
        np.testing.assert_array_equal(amg_vcycle(h, np.zeros(64)), np.zeros(64))

    def test_stagnation_falls_back_to_direct(self):
        A = sp.identity(100, format="csr")
        with pytest.warns(RuntimeWarning):
            h = amg_setup(A, coarse_cap=16)
        assert h.stagnated
        r = np.arange(100.0)
        np.testing.assert_allclose(amg_vcycle(h, r), r, atol=1e-13)

    def test_unknown_based_mode_keeps_cells(self):
        A = sp.kron(lap2d(12), np.eye(2)).tocsr() + 0.01 * sp.identity(288, format="csr")
        A = ensure_canonical(A)
        h = amg_setup(A, strong_threshold=0.25, block_size=2, coarse_cap=32)
        assert all(s % 2 == 0 for s in h.level_sizes)
        rng = np.random.default_rng(15)
        b = rng.standard_normal(288)
        x = np.zeros_like(b)
        for _ in range(10):
            x += amg_vcycle(h, b - A @ x)
        assert np.linalg.norm(b - A @ x) < 1e-3 * np.linalg.norm(b)

    def test_linearity(self):
        A = lap2d(10)
        h = amg_setup(A, strong_threshold=0.25, coarse_cap=20)
        rng = np.random.default_rng(16)
        r1, r2 = rng.standard_normal((2, 100))
        lhs = amg_vcycle(h, 1.5 * r1 - 2.0 * r2)
        rhs = 1.5 * amg_vcycle(h, r1) - 2.0 * amg_vcycle(h, r2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(rhs).max())

    def test_stats_and_validation(self):
        A = lap1d(64)
        h = amg_setup(A, strong_threshold=0.25, coarse_cap=16)
        stats = h.stats()
        assert stats["levels"] == h.n_levels
        assert stats["sizes"] == h.level_sizes
        with pytest.raises(ValueError):
            amg_setup(A, strong_threshold=0.0)
        with pytest.raises(DimensionMismatchError):
            amg_setup(sp.csr_matrix(np.ones((2, 3))))
        with pytest.raises(DimensionMismatchError):
            amg_setup(lap1d(5), block_size=2)
        with pytest.raises(DimensionMismatchError):
            amg_vcycle(h, np.zeros(65))


class TestDense:
    def test_identity(self):
        s = DenseSolver(np.eye(4))
        np.testing.assert_array_equal(s.solve([1.0, 2.0, 3.0, 4.0]), [1, 2, 3, 4])

    def test_hilbert_against_exact_inverse(self):
        H = scipy.linalg.hilbert(4)
        r = np.array([1.0, -1.0, 2.0, 0.5])
        want = scipy.linalg.invhilbert(4) @ r
        np.testing.assert_allclose(dense_solve(H, r), want, rtol=1e-9)

    def test_random_residual(self):
        rng = np.random.default_rng(17)
        A = rng.standard_normal((100, 100)) + 10 * np.eye(100)
        r = rng.standard_normal(100)
        x = dense_solve(A, r)
        assert np.linalg.norm(r - A @ x) < 1e-11 * np.linalg.norm(r)

    def test_sparse_input_accepted(self):
        A = lap1d(10) + sp.identity(10)
        x = dense_solve(A.tocsr(), np.ones(10))
        np.testing.assert_allclose((A @ x), np.ones(10), atol=1e-12)

    def test_singular_rejected(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(SingularBlockError):
                DenseSolver(np.zeros((3, 3)))

    def test_cap_enforced(self):
        with pytest.raises(DimensionMismatchError):
            DenseSolver(np.eye(10), cap=5)

    def test_empty_system(self):
        s = DenseSolver(np.zeros((0, 0)))
        assert s.solve(np.zeros(0)).shape == (0,)

    def test_vector_length_checked(self):
        s = DenseSolver(np.eye(3))
        with pytest.raises(DimensionMismatchError):
            s.solve(np.zeros(4))
