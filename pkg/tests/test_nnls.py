import numpy as np
import pytest

from arknls.nnls import (
    RankDeficiencyError,
    _accepted_candidates,
    nnls_oracle,
    nnls_rank1,
    nnls_rank2,
    nnls_rank3,
    nnls_recursive,
)


def well_conditioned(rng, m, k, boost=0.1):
    """Random nonnegative-ish matrix with a diagonal bump bounding the
    condition number away from blowup."""
    g = rng.random((m, k))
    g[:k, :k] += boost * np.eye(k)
    return g


class TestRank1:
    def test_unit_aligned(self):
        sol = nnls_rank1([1.0, 0.0], [2.0, 3.0])
        np.testing.assert_allclose(sol.y, [2.0])

    def test_negative_projection_clamps(self):
        sol = nnls_rank1([1.0, 1.0], [-1.0, -1.0])
        np.testing.assert_array_equal(sol.y, [0.0])

    def test_projection_value(self):
        sol = nnls_rank1([2.0, 1.0], [1.0, 3.0])
        np.testing.assert_allclose(sol.y, [1.0])
        oracle = nnls_oracle(np.array([[2.0], [1.0]]), np.array([1.0, 3.0]))
        np.testing.assert_allclose(sol.y, oracle.y)

    def test_zero_column_rejected(self):
        with pytest.raises(RankDeficiencyError):
            nnls_rank1([0.0, 0.0], [1.0, 1.0])


class TestRank2:
    def test_orthonormal_clamp(self):
        sol = nnls_rank2(np.eye(2), [3.0, -1.0])
        np.testing.assert_allclose(sol.y, [3.0, 0.0])

    def test_zero_rhs(self):
        sol = nnls_rank2(np.eye(2), [0.0, 0.0])
        np.testing.assert_array_equal(sol.y, [0.0, 0.0])

    def test_against_oracle_fixed(self):
        g = np.array([[1.0, 1.0], [0.0, 1.0]])
        b = np.array([1.0, 2.0])
        got = nnls_rank2(g, b).y
        want = nnls_oracle(g, b).y
        assert np.max(np.abs(got - want)) <= 1e-12

    def test_rank_deficient_rejected(self):
        g = np.column_stack([np.ones(4), 2.0 * np.ones(4)])
        with pytest.raises(RankDeficiencyError):
            nnls_rank2(g, np.ones(4))


class TestRank3:
    def test_orthonormal_clamp(self):
        sol = nnls_rank3(np.eye(3), [1.0, -2.0, 3.0])
        np.testing.assert_allclose(sol.y, [1.0, 0.0, 3.0])

    def test_decoupled_scalar_problems(self):
        g = np.diag([2.0, 1.0, 1.0])
        b = np.array([4.0, 1.0, 1.0])
        sol = nnls_rank3(g, b)
        np.testing.assert_allclose(sol.y, [2.0, 1.0, 1.0])
        np.testing.assert_allclose(sol.y, nnls_oracle(g, b).y)

    def test_against_oracle_bulk(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            g = well_conditioned(rng, 10, 3)
            b = rng.uniform(-1.0, 1.0, 10)
            got = nnls_rank3(g, b).y
            want = nnls_oracle(g, b).y
            assert np.max(np.abs(got - want)) <= 1e-10

    def test_rank_deficient_rejected(self):
        g = np.column_stack([np.ones(5), np.arange(5.0), np.arange(5.0) + 1.0])
        with pytest.raises(RankDeficiencyError):
            nnls_rank3(g, np.ones(5))


class TestRecursive:
    def test_matches_rank2_identity(self):
        got = nnls_recursive(np.eye(2), [3.0, -1.0], nnls_rank1).y
        np.testing.assert_allclose(got, [3.0, 0.0])

    def test_rank2_base_agrees_with_rank3(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            g = well_conditioned(rng, 12, 3)
            b = rng.uniform(-1.0, 1.0, 12)
            via_recursion = nnls_recursive(g, b, nnls_rank2).y
            direct = nnls_rank3(g, b).y
            assert np.max(np.abs(via_recursion - direct)) <= 1e-10

    def test_rank3_base_vs_subset_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            g = well_conditioned(rng, 15, 4)
            b = rng.uniform(-1.0, 1.0, 15)
            got = nnls_recursive(g, b, nnls_rank3).y
            want = nnls_oracle(g, b).y
            assert np.max(np.abs(got - want)) <= 1e-8

    def test_rank5_by_nesting(self):
        rng = np.random.default_rng(5)
        rank4 = lambda g, b: nnls_recursive(g, b, nnls_rank3)
        for _ in range(25):
            g = well_conditioned(rng, 18, 5)
            b = rng.uniform(-1.0, 1.0, 18)
            got = nnls_recursive(g, b, rank4).y
            want = nnls_oracle(g, b).y
            assert np.max(np.abs(got - want)) <= 1e-8

    def test_rank_deficient_rejected(self):
        g = np.column_stack([np.ones(6), np.ones(6)])
        with pytest.raises(RankDeficiencyError):
            nnls_recursive(g, np.ones(6), nnls_rank1)


class TestOracle:
    def test_empty_active_set(self):
        sol = nnls_oracle(np.eye(2), np.array([-1.0, -1.0]))
        np.testing.assert_array_equal(sol.y, [0.0, 0.0])

    def test_unique_active_set_statistics(self):
        # The accepted KKT subset should almost always be unique.
        rng = np.random.default_rng(123)
        unique = 0
        trials = 1000
        for _ in range(trials):
            g = well_conditioned(rng, 10, 3)
            b = rng.uniform(-1.0, 1.0, 10)
            if sum(1 for _ in _accepted_candidates(g, b)) == 1:
                unique += 1
        assert unique >= 0.99 * trials

    def test_k_limit(self):
        with pytest.raises(ValueError):
            nnls_oracle(np.ones((20, 13)), np.ones(20))


class TestSharedProperties:
    """Invariants every kernel must satisfy on full-rank input."""

    def solvers(self):
        return [
            (1, lambda g, b: nnls_rank1(g[:, 0], b)),
            (2, nnls_rank2),
            (3, nnls_rank3),
            (2, lambda g, b: nnls_recursive(g, b, nnls_rank1)),
            (3, lambda g, b: nnls_recursive(g, b, nnls_rank2)),
            (3, nnls_oracle),
        ]

    def test_nonnegativity_and_kkt(self):
        rng = np.random.default_rng(31)
        for k, solver in self.solvers():
            for _ in range(100):
                g = well_conditioned(rng, 9, k)
                b = rng.uniform(-2.0, 2.0, 9)
                sol = solver(g, b)
                assert np.all(sol.y >= 0.0)
                bound = 1e-8 * (1.0 + np.max(np.abs(g.T @ b)))
                assert sol.kkt_residual <= bound

    def test_permutation_uniqueness(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            g = well_conditioned(rng, 10, 3)
            b = rng.uniform(-1.0, 1.0, 10)
            base = nnls_rank3(g, b).y
            perm = rng.permutation(3)
            permuted = nnls_rank3(g[:, perm], b).y
            unpermuted = np.empty(3)
            unpermuted[perm] = permuted
            assert np.max(np.abs(base - unpermuted)) <= 1e-10

    def test_objective_optimality(self):
        rng = np.random.default_rng(17)
        for k, solver in [(2, nnls_rank2), (3, nnls_rank3)]:
            for _ in range(20):
                g = well_conditioned(rng, 10, k)
                b = rng.uniform(-1.0, 1.0, 10)
                y = solver(g, b).y
                best = np.linalg.norm(g @ y - b)
                for _ in range(100):
                    other = rng.random(k) * 2.0
                    assert best <= np.linalg.norm(g @ other - b) + 1e-9
