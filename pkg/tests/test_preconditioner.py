import numpy as np
import pytest
import scipy.sparse as sp

from fracschur import (
    DimensionMismatchError,
    KrylovConfig,
    MaterialParams,
    PreconditionerConfig,
    ProblemSpec,
    SetupStageError,
    generate,
    precond_apply,
    precond_setup,
    run_solve,
    states_from_fractions,
)

MIXED = {"stick": 1, "slide": 1, "open": 1}


def problem(m=4, dim=2, seed=0, states=None, peclet=1.0):
    states = states or states_from_fractions(m, MIXED, seed=seed)
    spec = ProblemSpec(refinement=m, states=states,
                       material=MaterialParams(dim=dim),
                       peclet_scale=peclet, seed=seed)
    return generate(spec)


def zero_block(J, layout, i, j):
    r = layout.block_range(i)
    c = layout.block_range(j)
    A = J.tolil(copy=True)
    A[r[0]:r[1], c[0]:c[1]] = 0.0
    return A.tocsr()


class TestConfig:
    def test_defaults(self):
        cfg = PreconditionerConfig()
        assert cfg.pt_variant == "CPR"
        assert not cfg.exact_mode
        assert cfg.mech_smoother is None
        assert cfg.amg_threshold == 0.7

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"pt_variant": "Jacobi"},
            {"mech_smoother": "jacobi"},
            {"amg_threshold": 0.0},
            {"amg_threshold": 1.5},
            {"n_smooth": 0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            PreconditionerConfig(**kwargs)

    def test_json_keys(self):
        doc = PreconditionerConfig().to_json_dict()
        assert set(doc) == {
            "pt_variant", "exact_mode", "mech_smoother", "amg_threshold",
            "thermal_stab", "n_smooth", "coarse_cap", "dense_cap",
        }


class TestSetup:
    def test_timings_and_stats_recorded(self):
        p = problem()
        pc = precond_setup(p.matrix, p.layout, p.spec.material)
        for key in ("setup_transform_ms", "setup_form_s1_ms",
                    "setup_build_chain_ms", "setup_mech_amg_ms", "setup_pt_setup_ms"):
            assert key in pc.timings
        stats = pc.stats()
        assert stats["contact_condition_max"] >= 1.0
        assert stats["pt"]["variant"] == "CPR"
        assert "mech_amg" in stats

    def test_shape_and_dim_validation(self):
        p = problem()
        with pytest.raises(DimensionMismatchError):
            precond_setup(p.matrix[:-1, :-1], p.layout, p.spec.material)
        with pytest.raises(ValueError):
            precond_setup(p.matrix, p.layout, MaterialParams(dim=3))

    def test_exact_mode_size_cap(self):
        p = problem()
        cfg = PreconditionerConfig(exact_mode=True, dense_cap=p.layout.n - 1)
        with pytest.raises(ValueError):
            precond_setup(p.matrix, p.layout, p.spec.material, cfg)

    def test_interface_diagonal_failure_names_stage(self):
        p = problem()
        J = zero_block(p.matrix, p.layout, 2, 2)
        with pytest.raises(SetupStageError) as err:
            precond_setup(J, p.layout, p.spec.material)
        assert err.value.stage == "build_qr"

    def test_contact_regularization_failure_names_stage(self):
        p = problem(states=("stick",) * 4)
        J = zero_block(p.matrix, p.layout, 1, 2)
        with pytest.raises(SetupStageError) as err:
            precond_setup(J, p.layout, p.spec.material)
        assert err.value.stage == "invert_contact_block"

    def test_inner_acceleration_requires_chain(self):
        p = problem()
        cfg = PreconditionerConfig(exact_mode=True)
        pc = precond_setup(p.matrix, p.layout, p.spec.material, cfg)
        with pytest.raises(SetupStageError):
            pc.inner_accelerated(1e-5)


class TestApply:
    def test_zero_maps_to_zero(self):
        p = problem()
        pc = precond_setup(p.matrix, p.layout, p.spec.material)
        np.testing.assert_array_equal(pc.apply(np.zeros(p.layout.n)), 0.0)

    def test_linearity(self):
        p = problem()
        pc = precond_setup(p.matrix, p.layout, p.spec.material)
        rng = np.random.default_rng(0)
        r1, r2 = rng.standard_normal((2, p.layout.n))
        lhs = pc.apply(2.0 * r1 - 0.25 * r2)
        rhs = 2.0 * pc.apply(r1) - 0.25 * pc.apply(r2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(rhs).max())

    def test_module_level_apply_matches_method(self):
        p = problem()
        pc = precond_setup(p.matrix, p.layout, p.spec.material)
        r = np.sin(np.arange(p.layout.n))
        np.testing.assert_array_equal(precond_apply(pc, r), pc.apply(r))

    def test_back_substitution_ordering(self):
        # residual confined to the leading blocks must not leak downstream
        p = problem()
        pc = precond_setup(p.matrix, p.layout, p.spec.material)
        o2 = p.layout.block_range(2)[0]
        o4 = p.layout.block_range(4)[0]
        o5 = p.layout.block_range(5)[0]
        r = np.zeros(p.layout.n)
        r[:o2] = 1.0
        v = pc.apply(r)
        np.testing.assert_array_equal(v[o2:], 0.0)
        np.testing.assert_allclose(
            v[:o2], pc.transformed.solve_contact(r[:o2]), atol=1e-15
        )
        r2 = np.zeros(p.layout.n)
        r2[o4:o5] = 1.0
        v2 = pc.apply(r2)
        np.testing.assert_array_equal(v2[o5:], 0.0)
        assert np.abs(v2[o4:o5]).max() > 0.0

    def test_length_validation(self):
        p = problem()
        pc = precond_setup(p.matrix, p.layout, p.spec.material)
        with pytest.raises(DimensionMismatchError):
            pc.apply(np.zeros(p.layout.n + 2))


class TestExactMode:
    def test_preconditioned_spectrum_collapses_to_one(self):
        p = problem(m=3)
        cfg = PreconditionerConfig(exact_mode=True)
        pc = precond_setup(p.matrix, p.layout, p.spec.material, cfg)
        n = p.layout.n
        assert n <= 200
        Pinv = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            Pinv[:, j] = pc.apply(e)
        M = pc.transformed.J_tilde.toarray() @ Pinv
        # the preconditioned operator is the unit block lower-triangular
        # factor: ones on the diagonal, nothing above it
        np.testing.assert_allclose(np.diag(M), 1.0, atol=1e-9)
        upper = np.triu(M, k=1)
        assert np.abs(upper).max() <= 1e-9 * np.abs(M).max()
        # eigenvalues of the non-normal product amplify stage round-off,
        # so the cluster radius is far looser than the entrywise check
        eigs = np.linalg.eigvals(M)
        np.testing.assert_allclose(eigs, 1.0, atol=1e-4)

    @pytest.mark.parametrize("states", [
        ("stick",) * 4, ("slide",) * 4, ("open",) * 4, None,
    ])
    def test_exact_mode_converges_in_three_iterations(self, states):
        p = problem(m=4, states=states)
        cfg = PreconditionerConfig(exact_mode=True)
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material, cfg,
            KrylovConfig(rtol=1e-12), rhs=p.rhs,
        )
        assert report.converged
        assert report.iterations <= 3
        assert report.extra["original_system_relative_residual"] <= 1e-11

    def test_exact_schur_complements_match_dense_oracle(self):
        p = problem(m=3)
        cfg = PreconditionerConfig(exact_mode=True)
        pc = precond_setup(p.matrix, p.layout, p.spec.material, cfg)
        layout = p.layout
        lo = layout.block_range(2)[0]
        Jt = pc.transformed.J_tilde.toarray()
        S1 = Jt[lo:, lo:] - Jt[lo:, :lo] @ np.linalg.solve(Jt[:lo, :lo], Jt[:lo, lo:])
        n23 = layout.block_length(2) + layout.block_length(3)
        S2 = (S1[n23:, n23:]
              - S1[n23:, :n23] @ np.linalg.solve(S1[:n23, :n23], S1[:n23, n23:]))
        np.testing.assert_allclose(
            pc.exact_S2, S2, atol=1e-10 * np.abs(S2).max()
        )
        n4 = layout.block_length(4)
        S3 = (S2[n4:, n4:]
              - S2[n4:, :n4] @ np.linalg.solve(S2[:n4, :n4], S2[:n4, n4:]))
        np.testing.assert_allclose(
            pc.exact_S3, S3, atol=1e-10 * np.abs(S3).max()
        )


class TestSolve:
    def test_manufactured_solution_recovered(self):
        p = problem(m=6)
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material,
            PreconditionerConfig(), KrylovConfig(rtol=1e-12), rhs=p.rhs,
        )
        assert report.converged
        err = np.linalg.norm(x - p.x_true) / np.linalg.norm(p.x_true)
        assert err < 1e-8

    def test_report_contents(self):
        p = problem()
        spec_echo = p.spec.to_json_dict()
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material,
            PreconditionerConfig(), KrylovConfig(rtol=1e-12), rhs=p.rhs,
            spec_echo=spec_echo,
        )
        assert report.config["preconditioner"]["pt_variant"] == "CPR"
        assert report.coefficients["L_pm"] > 0
        assert report.extra["problem"] == spec_echo
        assert "setup_transform_ms" in report.timings
        assert "solve_ms" in report.timings
        assert report.extra["original_system_relative_residual"] <= 1e-11

    def test_both_variants_agree(self):
        p = problem(m=6)
        xs = {}
        for variant in ("CPR", "SystemAMG"):
            x, report = run_solve(
                p.matrix, p.layout, p.spec.material,
                PreconditionerConfig(pt_variant=variant),
                KrylovConfig(rtol=1e-14, max_iters=300), rhs=p.rhs,
            )
            assert report.converged
            xs[variant] = x
        diff = np.linalg.norm(xs["CPR"] - xs["SystemAMG"])
        assert diff <= 1e-9 * np.linalg.norm(xs["CPR"])

    def test_flexible_inner_acceleration(self):
        p = problem(m=6)
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material,
            PreconditionerConfig(),
            KrylovConfig(rtol=1e-12, flexible=True, inner_rtol=1e-4),
            rhs=p.rhs,
        )
        assert report.converged
        err = np.linalg.norm(x - p.x_true) / np.linalg.norm(p.x_true)
        assert err < 1e-8

    def test_nonconvergence_reported_not_raised(self):
        p = problem(m=6)
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material,
            PreconditionerConfig(), KrylovConfig(rtol=1e-13, max_iters=2),
            rhs=p.rhs,
        )
        assert not report.converged
        assert report.iterations == 2

    def test_rhs_length_validated(self):
        p = problem()
        with pytest.raises(DimensionMismatchError):
            run_solve(
                p.matrix, p.layout, p.spec.material,
                PreconditionerConfig(), KrylovConfig(), rhs=p.rhs[:-1],
            )

    def test_thermal_stabilization_smoke(self):
        p = problem(m=6)
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material,
            PreconditionerConfig(thermal_stab=True),
            KrylovConfig(rtol=1e-12), rhs=p.rhs,
        )
        assert report.converged

    @pytest.mark.parametrize("dim,m", [(2, 8), (3, 4)])
    def test_production_iteration_counts_stay_low(self, dim, m):
        p = problem(m=m, dim=dim)
        x, report = run_solve(
            p.matrix, p.layout, p.spec.material,
            PreconditionerConfig(), KrylovConfig(rtol=1e-12), rhs=p.rhs,
        )
        assert report.converged
        assert report.iterations <= 40
