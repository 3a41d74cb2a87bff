import json
from unittest.mock import MagicMock

import numpy as np
import pytest

from querylab.combinatorics import BitString
from querylab.exceptions import ParameterError
from querylab.oracles import (
    CgtOracle,
    QueryKind,
    QueryLedger,
    WildcardOracle,
    WildcardQuery,
    wildcards_via_cgt,
)


def wildcard(n, positions, values):
    return WildcardQuery.from_assignment(n, positions, values)


class TestWildcardQuery:
    def test_pattern_outside_subset_rejected(self):
        with pytest.raises(ParameterError):
            WildcardQuery(BitString.from_str("1100"), BitString.from_str("0010"))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            WildcardQuery(BitString.zeros(3), BitString.zeros(4))

    def test_from_assignment(self):
        q = wildcard(4, [0, 2], [1, 0])
        assert str(q.subset) == "1010"
        assert str(q.pattern) == "1000"


class TestWildcardOracle:
    def test_empty_subset_answers_one(self):
        oracle = WildcardOracle(BitString.from_str("1010"))
        assert oracle.query(wildcard(4, [], [])) == 1
        assert oracle.ledger.wildcard_queries == 1

    def test_examples(self):
        """x = 1010 with 1-indexed S = {1,3} and S = {1,2}."""
        oracle = WildcardOracle(BitString.from_str("1010"))
        assert oracle.query(wildcard(4, [0, 2], [1, 1])) == 1
        assert oracle.query(wildcard(4, [0, 1], [1, 1])) == 0
        assert oracle.ledger.total == 2

    def test_malformed_query_leaves_ledger(self):
        oracle = WildcardOracle(BitString.from_str("1010"))
        with pytest.raises(ParameterError):
            oracle.query(wildcard(5, [0], [1]))
        with pytest.raises(ParameterError):
            oracle.query(wildcard(4, [0], [1]), kind=QueryKind.CGT)
        assert oracle.ledger.total == 0

    def test_verification_counter(self):
        oracle = WildcardOracle(BitString.from_str("01"))
        oracle.query(wildcard(2, [1], [1]), kind=QueryKind.VERIFICATION)
        assert oracle.ledger.as_dict() == {"wildcard": 0, "cgt": 0, "verification": 1}

    def test_measure_window(self):
        x = BitString.from_str("1100110011")
        oracle = WildcardOracle(x)
        rng = np.random.default_rng(3)
        positions = [0, 3, 4, 9]
        truth = [x[i] for i in positions]
        assert oracle.measure_window(positions, 0, rng) == truth
        claim = oracle.measure_window(positions, 2, rng)
        assert sum(a != b for a, b in zip(claim, truth)) == 2
        assert oracle.ledger.total == 0
        with pytest.raises(ParameterError):
            oracle.measure_window(positions, 5, rng)


class TestCgtOracle:
    def test_empty_set(self):
        oracle = CgtOracle(BitString.from_str("00100"))
        assert oracle.query(BitString.zeros(5)) == 0

    def test_zero_input(self):
        oracle = CgtOracle(BitString.zeros(6))
        assert oracle.query(BitString.ones(6)) == 0

    def test_example(self):
        """x = 00100 with 1-indexed S = {3, 5}."""
        oracle = CgtOracle(BitString.from_str("00100"))
        assert oracle.query(BitString.from_indices(5, [2, 4])) == 1
        assert oracle.ledger.cgt_queries == 1

    def test_coherent_query_charges_once(self):
        oracle = CgtOracle(BitString.from_str("01101"))
        sampler = MagicMock(return_value=[1])
        rng = np.random.default_rng(0)
        revealed = oracle.coherent_query(BitString.from_str("11100"), sampler, rng)
        assert revealed == [1]
        sampler.assert_called_once_with([1, 2], rng)
        assert oracle.ledger.as_dict() == {"wildcard": 0, "cgt": 1, "verification": 0}


class TestQueryLedger:
    def test_every_call_counts_once(self):
        ledger = QueryLedger()
        wildcard_oracle = WildcardOracle(BitString.from_str("0110"), ledger)
        cgt_oracle = CgtOracle(BitString.from_str("0110"), ledger)
        totals = []
        for i in range(4):
            wildcard_oracle.query(wildcard(4, [i], [0]))
            totals.append(ledger.total)
            cgt_oracle.query(BitString.from_indices(4, [i]))
            totals.append(ledger.total)
        assert totals == list(range(1, 9))
        assert ledger.wildcard_queries == 4 and ledger.cgt_queries == 4

    def test_trace_lines(self):
        handler = MagicMock()
        ledger = QueryLedger.traced(handler)
        oracle = WildcardOracle(BitString.from_str("1010"), ledger)
        oracle.query(wildcard(4, [0, 2], [1, 1]))
        CgtOracle(BitString.from_str("1010"), ledger).query(BitString.from_str("0101"))

        assert ledger.trace == [
            {
                "kind": "wildcard",
                "subset": [0, 2],
                "pattern": [1, 1],
                "response": 1,
                "running_count": 1,
            },
            {"kind": "cgt", "subset": [1, 3], "response": 0, "running_count": 2},
        ]
        assert handler.call_count == 2
        assert json.loads(handler.call_args_list[1].args[0])["kind"] == "cgt"

    def test_negative_charge(self):
        with pytest.raises(ParameterError):
            QueryLedger().charge(QueryKind.WILDCARD, -1)


class TestReduction:
    def test_encoding(self):
        assert str(wildcards_via_cgt(BitString.zeros(3)).oracle._x) == "101010"
        assert str(wildcards_via_cgt(BitString.from_str("1")).oracle._x) == "01"

    def test_padding(self):
        reduction = wildcards_via_cgt(BitString.from_str("10"), padding=3)
        assert str(reduction.oracle._x) == "0110000"

    def test_block_map(self):
        """Wildcard query (S={1}, y=(1)) maps to the 1-indexed CGT set {2}."""
        reduction = wildcards_via_cgt(BitString.from_str("1"))
        assert reduction.cgt_set(wildcard(1, [0], [1])).support() == [1]

    def test_wildcard_answers_complement(self):
        z = BitString.from_str("0110")
        reduction = wildcards_via_cgt(z)
        complement = ~z
        for subset in range(16):
            positions = [i for i in range(4) if subset >> i & 1]
            for pattern in range(1 << len(positions)):
                values = [(pattern >> j) & 1 for j in range(len(positions))]
                pairs = zip(positions, values)
                expected = int(all(complement[i] == v for i, v in pairs))
                assert reduction.query(wildcard(4, positions, values)) == expected
        assert reduction.ledger.cgt_queries == reduction.ledger.total == 81

    def test_decode(self):
        z = BitString.from_str("1101")
        reduction = wildcards_via_cgt(z, padding=2)
        assert reduction.decode(reduction.oracle._x) == z
        with pytest.raises(ParameterError):
            reduction.decode(BitString.zeros(10))
