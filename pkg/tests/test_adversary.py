import math

import numpy as np
import pytest

from querylab.adversary import (
    ADVERSARY_MAX_N,
    adversary_bound,
    adversary_report,
    query_weights,
    weight_scheme_violations,
)
from querylab.combinatorics import BitString
from querylab.exceptions import ParameterError
from querylab.oracles import WildcardOracle, WildcardQuery


class TestAdversaryBound:
    def test_single_bit(self):
        assert adversary_bound(1) == 1.0

    def test_four_bits_exact(self):
        assert adversary_bound(4) == 2.0

    def test_square_root_law(self):
        for n in range(1, 10):
            assert adversary_bound(n) == pytest.approx(math.sqrt(n), abs=1e-12)

    def test_budget(self):
        with pytest.raises(ParameterError):
            adversary_bound(ADVERSARY_MAX_N + 1)
        with pytest.raises(ParameterError):
            adversary_bound(0)


class TestWitness:
    def test_minimizer_uses_full_subset(self):
        for n in (2, 3, 5):
            witness = adversary_report(n).witness
            assert witness.query.subset == BitString.ones(n)
            assert {witness.v_x, witness.v_y} == {n, 1}
            assert witness.x.distance(witness.y) == 1

    def test_responses_differ(self):
        witness = adversary_report(4).witness
        answers = {
            WildcardOracle(side).query(witness.query) for side in (witness.x, witness.y)
        }
        assert answers == {0, 1}

    def test_to_dict(self):
        record = adversary_report(3).to_dict()
        assert record["n"] == 3
        assert record["bound"] == pytest.approx(math.sqrt(3))
        assert record["argmin_witness"]["subset_size"] == 3
        assert len(record["argmin_witness"]["pattern"]) == 3
        assert record["weight_scheme_violations"] == 0

    def test_workers_agree(self):
        serial = adversary_report(5)
        parallel = adversary_report(5, jobs=2)
        assert parallel.bound == serial.bound
        assert parallel.witness == serial.witness
        assert parallel.violations == serial.violations


class TestWeightScheme:
    def test_no_violations(self):
        for n in range(1, 8):
            assert weight_scheme_violations(n) == 0

    def test_closed_form_against_oracle(self):
        """The case split agrees with counting neighbours through real queries."""
        n, subset = 3, 0b101
        patterns = np.array([0b000, 0b001, 0b100, 0b101])
        closed, _ = query_weights(n, subset, patterns)
        for row, pattern in enumerate(patterns):
            query = WildcardQuery(BitString(n, subset), BitString(n, int(pattern)))
            for x in range(1 << n):
                here = WildcardOracle(BitString(n, x)).query(query)
                differing = sum(
                    WildcardOracle(BitString(n, x ^ (1 << p))).query(query) != here
                    for p in range(n)
                )
                assert closed[row, x] == differing
