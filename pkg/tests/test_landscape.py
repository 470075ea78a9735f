import numpy as np
import pytest

from nkconsensus.landscape import (
    CompetenceMatrix,
    Landscape,
    bit_weight_matrix,
    code_from_decisions,
    competence_from_dict,
    competence_to_dict,
    decisions_from_code,
    fitness,
    generate_competence,
    generate_landscape,
    global_max,
    landscape_from_dict,
    landscape_to_dict,
    load_landscape,
    perceived_fitness,
    save_landscape,
)


def make_two_decision_landscape():
    """N=2, K=0 with hand-set tables: W_1(-1)=0.1, W_1(+1)=0.4, W_2(-1)=0.6, W_2(+1)=0.8."""
    return Landscape(
        N=2,
        K=0,
        deps=np.empty((2, 0), dtype=np.int32),
        tables=np.array([[0.1, 0.4], [0.6, 0.8]]),
        seed=0,
    )


def fitness_reference(L, d):
    """Independent re-implementation: explicit per-decision substring lookup."""
    total = 0.0
    for j in range(L.N):
        bits = [1 if d[j] > 0 else 0]
        for dep in L.deps[j]:
            bits.append(1 if d[dep] > 0 else 0)
        index = 0
        for b in bits:
            index = (index << 1) | b
        total += L.tables[j][index]
    return total / L.N


class TestGeneration:
    def test_minimal_landscape_shape(self):
        L = generate_landscape(1, 0, 3)
        assert L.deps.shape == (1, 0)
        assert L.tables.shape == (1, 2)
        assert np.all((L.tables >= 0) & (L.tables <= 1))

    def test_full_coupling_uses_all_other_decisions(self):
        L = generate_landscape(12, 11, 5)
        assert L.tables.shape == (12, 4096)
        for j in range(12):
            assert sorted(L.deps[j]) == [i for i in range(12) if i != j]

    def test_regeneration_is_bit_identical(self):
        a = generate_landscape(12, 5, 42)
        b = generate_landscape(12, 5, 42)
        assert np.array_equal(a.deps, b.deps)
        assert np.array_equal(a.tables, b.tables)

    @pytest.mark.parametrize("seed", range(20))
    def test_dependencies_distinct_and_never_self(self, seed):
        L = generate_landscape(10, 4, seed)
        for j in range(10):
            assert len(set(L.deps[j])) == 4
            assert j not in L.deps[j]
        assert np.all((L.tables >= 0) & (L.tables <= 1))

    @pytest.mark.parametrize("K", [-1, 12, 100])
    def test_coupling_out_of_range_rejected(self, K):
        with pytest.raises(ValueError):
            generate_landscape(12, K, 0)

    def test_nonpositive_size_rejected(self):
        with pytest.raises(ValueError):
            generate_landscape(0, 0, 0)


class TestFitness:
    def test_constant_tables_give_constant_fitness(self):
        L = generate_landscape(8, 3, 1)
        flat = Landscape(N=8, K=3, deps=L.deps, tables=np.full_like(L.tables, 0.5), seed=1)
        rng = np.random.default_rng(0)
        for _ in range(10):
            d = 2 * rng.integers(0, 2, size=8) - 1
            assert fitness(flat, d) == 0.5

    def test_hand_evaluated_example(self):
        L = make_two_decision_landscape()
        assert fitness(L, np.array([1, 1])) == pytest.approx(0.6, abs=1e-15)
        assert fitness(L, np.array([-1, -1])) == pytest.approx(0.35, abs=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_independent_reimplementation(self, seed):
        rng = np.random.default_rng(seed)
        L = generate_landscape(9, 4, seed)
        for _ in range(20):
            d = 2 * rng.integers(0, 2, size=9) - 1
            assert fitness(L, d) == pytest.approx(fitness_reference(L, d), abs=1e-14)

    def test_bounds(self):
        rng = np.random.default_rng(4)
        for seed in range(5):
            L = generate_landscape(7, 2, seed)
            for _ in range(10):
                d = 2 * rng.integers(0, 2, size=7) - 1
                assert 0.0 <= fitness(L, d) <= 1.0

    def test_wrong_length_rejected(self):
        L = generate_landscape(5, 1, 0)
        with pytest.raises(ValueError):
            fitness(L, np.ones(4, dtype=int))
        with pytest.raises(ValueError):
            fitness(L, np.zeros(5, dtype=int))


class TestCompetence:
    def test_extreme_densities(self):
        assert np.all(generate_competence(6, 12, 1.0, 3).D == 1)
        assert np.all(generate_competence(6, 12, 0.0, 3).D == 0)

    def test_density_converges_over_regenerations(self):
        means = [generate_competence(6, 12, 0.5, seed).D.mean() for seed in range(10_000)]
        assert abs(np.mean(means) - 0.5) < 0.01

    def test_determinism(self):
        a = generate_competence(6, 12, 0.3, 9)
        b = generate_competence(6, 12, 0.3, 9)
        assert np.array_equal(a.D, b.D)

    @pytest.mark.parametrize("p", [-0.1, 1.1])
    def test_density_out_of_range_rejected(self, p):
        with pytest.raises(ValueError):
            generate_competence(6, 12, p, 0)


class TestPerceivedFitness:
    def test_full_knowledge_row_equals_group_fitness(self):
        L = generate_landscape(10, 3, 2)
        C = CompetenceMatrix(M=3, N=10, D=np.ones((3, 10), dtype=np.int8), p=1.0, seed=0)
        rng = np.random.default_rng(1)
        for _ in range(20):
            d = 2 * rng.integers(0, 2, size=10) - 1
            assert perceived_fitness(L, C, 1, d) == fitness(L, d)

    def test_zero_knowledge_row_perceives_nothing(self):
        L = generate_landscape(6, 2, 2)
        C = CompetenceMatrix(M=2, N=6, D=np.zeros((2, 6), dtype=np.int8), p=0.0, seed=0)
        assert perceived_fitness(L, C, 0, np.ones(6, dtype=int)) == 0.0

    def test_single_known_contribution(self):
        L = make_two_decision_landscape()
        C = CompetenceMatrix(M=1, N=2, D=np.array([[1, 0]], dtype=np.int8), p=0.5, seed=0)
        assert perceived_fitness(L, C, 0, np.array([1, 1])) == pytest.approx(0.4, abs=1e-15)
        assert perceived_fitness(L, C, 0, np.array([-1, 1])) == pytest.approx(0.1, abs=1e-15)

    def test_bounds_and_bad_member(self):
        L = generate_landscape(8, 3, 7)
        C = generate_competence(4, 8, 0.4, 8)
        rng = np.random.default_rng(2)
        for _ in range(20):
            d = 2 * rng.integers(0, 2, size=8) - 1
            k = int(rng.integers(0, 4))
            assert 0.0 <= perceived_fitness(L, C, k, d) <= 1.0
        with pytest.raises(IndexError):
            perceived_fitness(L, C, 4, np.ones(8, dtype=int))


class TestGlobalMax:
    def test_constant_tables(self):
        L = generate_landscape(6, 2, 1)
        flat = Landscape(N=6, K=2, deps=L.deps, tables=np.full_like(L.tables, 0.5), seed=1)
        _, v = global_max(flat)
        assert v == 0.5

    def test_hand_example(self):
        L = make_two_decision_landscape()
        d, v = global_max(L)
        assert np.array_equal(d, [1, 1])
        assert v == pytest.approx(0.6, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_beats_random_sampling(self, seed):
        L = generate_landscape(10, 4, seed)
        d, v = global_max(L)
        assert fitness(L, d) == v
        rng = np.random.default_rng(seed)
        for _ in range(100):
            r = 2 * rng.integers(0, 2, size=10) - 1
            assert fitness(L, r) <= v + 1e-15

    def test_enumeration_guard(self):
        L = generate_landscape(12, 2, 0)
        too_big = Landscape(N=25, K=0, deps=np.empty((25, 0), np.int32),
                            tables=np.random.default_rng(0).random((25, 2)), seed=0)
        with pytest.raises(ValueError):
            global_max(too_big)
        global_max(L)  # within the guard

    def test_tie_break_lowest_encoding(self):
        # both decisions irrelevant: all vectors tie, so the argmax is code 0
        flat = Landscape(N=3, K=0, deps=np.empty((3, 0), np.int32),
                         tables=np.full((3, 2), 0.25), seed=0)
        d, v = global_max(flat)
        assert code_from_decisions(d) == 0
        assert v == 0.25


class TestSeparableCase:
    @pytest.mark.parametrize("seed", range(20))
    def test_greedy_per_decision_attains_the_optimum(self, seed):
        L = generate_landscape(10, 0, seed)
        greedy = np.where(L.tables[:, 1] >= L.tables[:, 0], 1, -1)
        _, v = global_max(L)
        assert fitness(L, greedy) == v


class TestCodecsAndSerialization:
    def test_code_round_trip(self):
        for code in range(16):
            assert code_from_decisions(decisions_from_code(code, 4)) == code

    def test_landscape_json_round_trip(self, tmp_path):
        L = generate_landscape(8, 3, 77)
        back = landscape_from_dict(landscape_to_dict(L))
        assert back.N == L.N and back.K == L.K and back.seed == L.seed
        assert np.array_equal(back.deps, L.deps)
        assert np.array_equal(back.tables, L.tables)
        path = tmp_path / "landscape.json"
        save_landscape(L, path)
        again = load_landscape(path)
        assert np.array_equal(again.tables, L.tables)

    def test_competence_json_round_trip(self):
        C = generate_competence(5, 9, 0.4, 13)
        back = competence_from_dict(competence_to_dict(C))
        assert back.M == C.M and back.N == C.N and back.p == C.p and back.seed == C.seed
        assert np.array_equal(back.D, C.D)

    def test_weight_matrix_layout(self):
        # own decision is the most significant bit, stored deps follow in order
        L = generate_landscape(5, 2, 3)
        W = bit_weight_matrix(L)
        for q in range(5):
            assert W[q, q] == 4
            assert W[q, L.deps[q, 0]] == 2
            assert W[q, L.deps[q, 1]] == 1
