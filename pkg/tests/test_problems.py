import numpy as np
import pytest

from fracschur import (
    ContactState,
    DimensionMismatchError,
    MaterialParams,
    ProblemSpec,
    extract_block,
    generate,
    reference_rhs,
    states_from_fractions,
)

# block pairs (row, col) that the assembly must leave empty
WHITE = {(1, 3), (1, 4), (1, 5), (1, 6), (2, 4), (3, 4), (4, 1), (4, 2), (4, 3)}

MIXED = {"stick": 1, "slide": 1, "open": 1}


def build(m=4, dim=2, states=None, peclet=1.0, seed=0, **mat):
    states = states or states_from_fractions(m, MIXED, seed=seed)
    spec = ProblemSpec(
        refinement=m,
        states=states,
        material=MaterialParams(dim=dim, **mat),
        peclet_scale=peclet,
        seed=seed,
    )
    return generate(spec)


class TestSpec:
    def test_rejects_small_grid(self):
        with pytest.raises(ValueError):
            ProblemSpec(refinement=1, states=("stick",))

    def test_rejects_state_count_mismatch(self):
        with pytest.raises(ValueError):
            ProblemSpec(refinement=4, states=("stick", "slide"))

    def test_rejects_nonpositive_peclet(self):
        states = ("stick",) * 4
        with pytest.raises(ValueError):
            ProblemSpec(refinement=4, states=states, peclet_scale=0.0)

    def test_string_states_coerced(self):
        spec = ProblemSpec(refinement=2, states=("stick", "OPEN"))
        assert spec.states == (ContactState.STICK, ContactState.OPEN)

    def test_json_dict(self):
        spec = ProblemSpec(refinement=3, states=("stick", "slide", "open"),
                           peclet_scale=2.0, seed=9)
        doc = spec.to_json_dict()
        assert doc["refinement"] == 3
        assert doc["states"] == ["stick", "slide", "open"]
        assert doc["peclet_scale"] == 2.0
        assert doc["seed"] == 9
        assert doc["dim"] == 2
        choice = doc["contact_coupling_choice"]
        assert choice["contact_to_interface"] > 0
        assert choice["interface_to_contact"] > 0


class TestStatesFromFractions:
    def test_exact_quotas(self):
        states = states_from_fractions(10, {"stick": 0.5, "slide": 0.3, "open": 0.2})
        counts = {s: sum(1 for t in states if t is s) for s in ContactState}
        assert counts[ContactState.STICK] == 5
        assert counts[ContactState.SLIDE] == 3
        assert counts[ContactState.OPEN] == 2

    def test_largest_remainder(self):
        states = states_from_fractions(4, {"stick": 1, "slide": 1, "open": 1})
        counts = {s: sum(1 for t in states if t is s) for s in ContactState}
        assert sorted(counts.values()) == [1, 1, 2]

    def test_weights_are_relative(self):
        a = states_from_fractions(9, {"stick": 1, "slide": 1, "open": 1}, seed=3)
        b = states_from_fractions(9, {"stick": 7, "slide": 7, "open": 7}, seed=3)
        assert a == b

    def test_deterministic_and_seed_sensitive(self):
        a = states_from_fractions(30, MIXED, seed=1)
        b = states_from_fractions(30, MIXED, seed=1)
        c = states_from_fractions(30, MIXED, seed=2)
        assert a == b
        assert a != c
        assert sorted(s.tag for s in a) == sorted(s.tag for s in c)

    def test_validation(self):
        with pytest.raises(ValueError):
            states_from_fractions(0, MIXED)
        with pytest.raises(ValueError):
            states_from_fractions(5, {"stick": -0.5, "open": 1.0})
        with pytest.raises(ValueError):
            states_from_fractions(5, {"stick": 0.0})
        with pytest.raises(ValueError):
            states_from_fractions(5, {"wobble": 1.0})


class TestBlockPattern:
    @pytest.mark.parametrize("dim,m", [(2, 6), (3, 4)])
    def test_mixed_states_pattern(self, dim, m):
        p = build(m=m, dim=dim)
        for i in range(1, 7):
            for j in range(1, 7):
                nnz = extract_block(p.matrix, p.layout, i, j).nnz
                if (i, j) in WHITE:
                    assert nnz == 0, f"block ({i},{j}) should be empty"
                else:
                    assert nnz > 0, f"block ({i},{j}) should carry entries"

    @pytest.mark.parametrize("state", ["stick", "slide", "open"])
    def test_uniform_states_pattern(self, state):
        p = build(m=4, states=(state,) * 4)
        for i, j in WHITE:
            assert extract_block(p.matrix, p.layout, i, j).nnz == 0
        # the couplings that depend on the contact state must survive
        assert extract_block(p.matrix, p.layout, 1, 2).nnz > 0
        assert extract_block(p.matrix, p.layout, 1, 1).nnz > 0

    def test_layout_sizes(self):
        p = build(m=4, dim=2)
        sizes = [hi - lo for lo, hi in p.layout.block_ranges]
        d, m, n_f = 2, 4, 4
        assert sizes == [d * n_f, 2 * d * n_f, d * m**d, 6 * n_f,
                         m**d + n_f, m**d + n_f]
        assert p.layout.n == p.matrix.shape[0] == p.matrix.shape[1]


class TestContactCells:
    def test_singular_cells_match_states(self):
        states = states_from_fractions(8, MIXED, seed=5)
        p = build(m=8, states=states)
        d = p.layout.dim
        J11 = extract_block(p.matrix, p.layout, 1, 1).toarray()
        for k, state in enumerate(states):
            cell = J11[d * k:d * (k + 1), d * k:d * (k + 1)]
            smin = np.linalg.svd(cell, compute_uv=False)[-1]
            if state is ContactState.OPEN:
                assert smin > 0.5
            else:
                assert smin < 1e-12

    def test_open_cell_is_identity(self):
        p = build(m=2, states=("open", "open"))
        d = p.layout.dim
        J11 = extract_block(p.matrix, p.layout, 1, 1).toarray()
        np.testing.assert_array_equal(J11[:d, :d], np.eye(d))


class TestDeterminism:
    def test_bit_identical_regeneration(self):
        a = build(m=5, dim=2, seed=11)
        b = build(m=5, dim=2, seed=11)
        np.testing.assert_array_equal(a.matrix.indptr, b.matrix.indptr)
        np.testing.assert_array_equal(a.matrix.indices, b.matrix.indices)
        np.testing.assert_array_equal(a.matrix.data, b.matrix.data)
        np.testing.assert_array_equal(a.rhs, b.rhs)
        np.testing.assert_array_equal(a.x_true, b.x_true)
        assert a.layout.states == b.layout.states

    def test_seed_changes_values(self):
        a = build(m=5, seed=1)
        b = build(m=5, seed=2)
        assert not np.array_equal(a.x_true, b.x_true)


class TestAdvectionKnob:
    def test_only_energy_rows_respond(self):
        a = build(m=5, peclet=1.0)
        b = build(m=5, peclet=8.0)
        diff = (b.matrix - a.matrix).tocsr()
        o6 = a.layout.block_range(6)[0]
        head = diff[:o6]
        assert head.nnz == 0 or np.abs(head.data).max() == 0.0

    def test_skew_part_linear_in_scale(self):
        def skew(pe):
            p = build(m=5, peclet=pe)
            J66 = extract_block(p.matrix, p.layout, 6, 6)
            return (J66 - J66.T).toarray()

        s1 = skew(1.0)
        s10 = skew(10.0)
        np.testing.assert_allclose(s10, 10.0 * s1, rtol=1e-12, atol=0)
        assert np.abs(s1).max() > 0

    def test_vanishing_scale_symmetrizes(self):
        p = build(m=5, peclet=1e-13)
        J66 = extract_block(p.matrix, p.layout, 6, 6)
        asym = np.abs((J66 - J66.T).toarray()).max()
        assert asym <= 1e-11 * np.abs(J66.toarray()).max()


class TestScaling:
    def test_row_scale_recorded(self):
        p = build(m=4)
        mat = p.spec.material
        a_pm = mat.accumulation_scale * (
            mat.porosity_ref * mat.compressibility + mat.derived_inverse_M
        )
        o5 = p.layout.block_range(5)[0]
        np.testing.assert_array_equal(p.layout.row_scale[:o5], 1.0)
        np.testing.assert_allclose(p.layout.row_scale[o5:], 1.0 / a_pm, rtol=1e-15)

    def test_fs_scale_matches_storativity(self):
        p = build(m=4)
        mat = p.spec.material
        stor = mat.porosity_ref * mat.compressibility + mat.derived_inverse_M
        assert p.layout.fs_scale == pytest.approx(1.0 / stor, rel=1e-15)

    def test_equilibrated_rows_have_unit_scale(self):
        p = build(m=6)
        o5 = p.layout.block_range(5)[0]
        J = p.matrix
        tail = np.abs(J[o5:].toarray())
        row_max = tail.max(axis=1)
        assert row_max.min() > 1e-2
        assert row_max.max() < 1e4


class TestManufacturedSolution:
    def test_rhs_is_consistent(self):
        p = build(m=4)
        np.testing.assert_array_equal(p.rhs, p.matrix @ p.x_true)

    def test_reference_rhs_matches(self):
        p = build(m=4)
        x = np.arange(p.layout.n, dtype=float)
        np.testing.assert_array_equal(reference_rhs(p, x), p.matrix @ x)
        with pytest.raises(DimensionMismatchError):
            reference_rhs(p, x[:-1])

    @pytest.mark.parametrize("dim,m", [(2, 6), (3, 4)])
    def test_direct_solve_recovers_x_true(self, dim, m):
        p = build(m=m, dim=dim)
        x = np.linalg.solve(p.matrix.toarray(), p.rhs)
        err = np.linalg.norm(x - p.x_true) / np.linalg.norm(p.x_true)
        assert err < 1e-8
