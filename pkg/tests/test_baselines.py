import math

import numpy as np
import pytest

from querylab.baselines import classical_wildcards, cgt_classical, info_bounds
from querylab.cgt_quantum import cgt_solve
from querylab.combinatorics import BitString
from querylab.exceptions import ParameterError
from querylab.oracles import CgtOracle, WildcardOracle, wildcards_via_cgt


@pytest.fixture
def rng():
    return np.random.default_rng(5)


class TestCgtClassical:
    def test_zero_input(self):
        oracle = CgtOracle(BitString.zeros(64))
        assert cgt_classical(oracle, 64, 3) == BitString.zeros(64)
        assert oracle.ledger.total == 1

    def test_single_one(self):
        for position in (0, 1, 511, 1023):
            x = BitString.from_indices(1024, [position])
            oracle = CgtOracle(x)
            assert cgt_classical(oracle, 1024, 1) == x
            assert oracle.ledger.total <= 11

    def test_bound_holds(self, rng):
        bound = 16 * (math.ceil(math.log2(1024)) + 1) + 1
        for _ in range(100):
            x = BitString.random_with_weight(1024, 16, rng)
            oracle = CgtOracle(x)
            assert cgt_classical(oracle, 1024, 16) == x
            assert oracle.ledger.total <= bound

    def test_weight_below_bound(self, rng):
        x = BitString.random_with_weight(300, 4, rng)
        assert cgt_classical(CgtOracle(x), 300, 10) == x

    def test_ones_at_the_end(self):
        x = BitString.from_indices(10, [8, 9])
        assert cgt_classical(CgtOracle(x), 10, 2) == x


class TestClassicalWildcards:
    def test_single_position(self):
        oracle = WildcardOracle(BitString.from_str("0"))
        assert classical_wildcards(oracle, 1) == BitString.from_str("0")
        assert oracle.ledger.total == 1

    def test_all_ones(self):
        x = BitString.ones(20)
        oracle = WildcardOracle(x)
        assert classical_wildcards(oracle, 20) == x
        assert oracle.ledger.total == 20

    def test_random_input(self, rng):
        x = BitString.random(64, rng)
        oracle = WildcardOracle(x)
        assert classical_wildcards(oracle, 64) == x
        assert oracle.ledger.wildcard_queries == 64


class TestInfoBounds:
    def test_zero_weight(self):
        assert info_bounds(50, 0).classical_cgt_lb == 0.0

    def test_exact_binomial(self):
        report = info_bounds(1024, 16)
        assert report.classical_cgt_lb == pytest.approx(math.log2(math.comb(1024, 16)))
        assert report.classical_wildcards_lb == 1024
        assert report.quantum_sww_lb == 32

    def test_information_inequality(self):
        for n in (8, 50, 333, 1000):
            for k in range(1, n // 2 + 1, max(1, n // 40)):
                report = info_bounds(n, k)
                assert report.classical_cgt_lb >= k * math.log2(n / k) - 1e-9
                assert 0 <= report.classical_cgt_lb <= n

    def test_to_dict(self):
        assert set(info_bounds(10, 2).to_dict()) == {
            "n",
            "k",
            "classical_cgt_lb",
            "classical_wildcards_lb",
            "quantum_sww_lb",
        }

    def test_invalid(self):
        with pytest.raises(ParameterError):
            info_bounds(4, 5)


class TestReductionEndToEnd:
    def test_all_small_instances(self, rng):
        """Every z with k <= 8 comes back through both group-testing solvers."""
        for k in range(1, 9):
            for value in range(1 << k):
                z = BitString(k, value)

                classical = wildcards_via_cgt(z)
                h = cgt_classical(classical.oracle, 2 * k, k)
                assert classical.decode(h) == z

                quantum = wildcards_via_cgt(z, padding=3)
                h = cgt_solve(quantum.oracle, 2 * k + 3, k, rng)
                assert quantum.decode(h) == z

    def test_wildcard_search_through_reduction(self):
        """A wildcard algorithm on the reduction learns the complement of z."""
        z = BitString.from_str("100110")
        reduction = wildcards_via_cgt(z)
        assert ~classical_wildcards(reduction, 6) == z
        assert reduction.ledger.cgt_queries == 6
