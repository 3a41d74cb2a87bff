import math

import numpy as np
import pytest

from querylab.combinatorics import (
    BitString,
    LogReal,
    binom,
    binom_exact,
    binom_log,
    hamming_weights,
    krawtchouk,
    krawtchouk_direct,
    krawtchouk_row,
    krawtchouk_table,
    wht,
)
from querylab.exceptions import ParameterError


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class TestBitString:
    def test_string_round_trip(self):
        """Position 0 is the first character."""
        x = BitString.from_str("1010")
        assert x.length == 4
        assert x[0] == 1 and x[1] == 0 and x[2] == 1 and x[3] == 0
        assert str(x) == "1010"
        assert x.support() == [0, 2]

    def test_bits_beyond_length_rejected(self):
        with pytest.raises(ParameterError):
            BitString(3, 0b1000)

    def test_from_indices_matches_from_str(self):
        assert BitString.from_indices(5, [2]) == BitString.from_str("00100")
        assert BitString.from_indices(5, []) == BitString.zeros(5)

    def test_from_indices_out_of_range(self):
        with pytest.raises(ParameterError):
            BitString.from_indices(4, [4])

    def test_large_word_packing(self):
        """Packing works past a single machine word."""
        x = BitString.from_indices(1000, [0, 517, 999])
        assert x.weight == 3
        assert x.support() == [0, 517, 999]
        assert x.to_array().shape == (1000,)

    def test_distance_properties(self, rng):
        for _ in range(50):
            x, y, z = (BitString.random(40, rng) for _ in range(3))
            assert x.distance(x) == 0
            assert x.distance(y) == y.distance(x)
            assert x.distance(z) <= x.distance(y) + y.distance(z)
            assert 0 <= x.weight <= 40

    def test_distance_length_mismatch(self):
        with pytest.raises(ParameterError):
            BitString.zeros(3).distance(BitString.zeros(4))

    def test_random_with_weight(self, rng):
        for w in (0, 1, 7, 20):
            assert BitString.random_with_weight(20, w, rng).weight == w

    def test_restrict_and_flip(self):
        x = BitString.from_str("1010")
        assert str(x.restrict([2, 0, 1])) == "110"
        assert str(x.flip([0, 1])) == "0110"
        assert str(~x) == "0101"


class TestLogReal:
    def test_zero_invariant(self):
        assert LogReal.zero().value == 0.0
        with pytest.raises(ParameterError):
            LogReal(0, 1.0)

    def test_float_round_trip(self):
        for v in (1.0, -3.5, 1e-200, 7.25e150):
            assert LogReal.from_float(v).value == pytest.approx(v, rel=1e-12)

    def test_arithmetic(self):
        a, b = LogReal.from_float(-6.0), LogReal.from_float(3.0)
        assert (a * b).value == pytest.approx(-18.0)
        assert (a / b).value == pytest.approx(-2.0)
        assert b.sqrt().value == pytest.approx(math.sqrt(3.0))

    def test_huge_integer(self):
        big = LogReal.from_int(math.comb(4096, 2048))
        assert big.value == math.inf
        assert big.log_abs == pytest.approx(math.log(math.comb(4096, 2048)), rel=1e-15)


class TestBinom:
    def test_small_values(self):
        assert binom(4, 2).value == pytest.approx(6.0)
        for n in (0, 5, 100, 5000):
            assert binom(n, 0).value == pytest.approx(1.0)

    def test_out_of_range_is_zero(self):
        assert binom(4, 5).sign == 0
        assert binom(4, -1).sign == 0
        assert binom_exact(4, 5) == 0

    def test_against_product_formula(self):
        """C(62, 31) against an independent product/divide evaluation."""
        value = 1
        for i in range(1, 32):
            value = value * (62 - 31 + i) // i
        assert value == binom_exact(62, 31)
        assert binom(62, 31).value == pytest.approx(value, rel=1e-12)

    def test_log_path_agrees_with_exact_path(self):
        for n in range(65):
            for k in range(n + 1):
                exact = math.log(math.comb(n, k))
                assert binom_log(n, k).log_abs == pytest.approx(
                    exact, rel=1e-12, abs=1e-12
                )
                assert binom_log(n, k).value == pytest.approx(
                    math.comb(n, k), rel=1e-12
                )


class TestKrawtchouk:
    def test_examples(self):
        assert krawtchouk(5, 0, 3) == 1
        assert krawtchouk(5, 3, 0) == 10
        assert krawtchouk(4, 2, 2) == -2

    def test_recurrence_matches_direct_sum(self):
        for n in range(21):
            for x in range(n + 1):
                row = krawtchouk_row(n, x, n)
                for k in range(n + 1):
                    assert row[k] == krawtchouk_direct(n, k, x)

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            krawtchouk(4, 5, 0)
        with pytest.raises(ParameterError):
            krawtchouk(4, 1, -1)

    def test_exact_for_large_n(self):
        """Values exceed 2^53 and stay exact integers."""
        value = krawtchouk(200, 100, 37)
        assert isinstance(value, int)
        assert value == krawtchouk_direct(200, 100, 37)

    def test_generating_function(self):
        """Coefficients of (1 - z)^x (1 + z)^(n - x)."""
        for n in (3, 6, 9):
            table = krawtchouk_table(n)
            for x in range(n + 1):
                poly = [1]
                for factor in [(1, -1)] * x + [(1, 1)] * (n - x):
                    nxt = [0] * (len(poly) + 1)
                    for i, c in enumerate(poly):
                        nxt[i] += c * factor[0]
                        nxt[i + 1] += c * factor[1]
                    poly = nxt
                assert [table(k, x) for k in range(n + 1)] == poly

    def test_table_edges(self):
        table = krawtchouk_table(7)
        assert all(table(0, x) == 1 for x in range(8))
        assert [table(k, 0) for k in range(8)] == [math.comb(7, k) for k in range(8)]


class TestWht:
    def test_delta(self):
        delta = np.zeros(8)
        delta[0] = 1.0
        assert np.array_equal(wht(delta), np.ones(8))

    def test_involution(self, rng):
        v = rng.normal(size=64)
        assert np.allclose(wht(wht(v)), 64 * v)

    def test_against_direct_sum(self, rng):
        n = 8
        v = rng.normal(size=1 << n)
        signs = np.array(
            [
                [(-1) ** bin(s & x).count("1") for x in range(1 << n)]
                for s in range(1 << n)
            ]
        )
        assert np.allclose(wht(v), signs @ v, atol=1e-10, rtol=0)

    def test_parseval(self, rng):
        for n in range(1, 13):
            v = rng.normal(size=1 << n)
            lhs = np.sum(wht(v) ** 2)
            rhs = (1 << n) * np.sum(v**2)
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_input_untouched(self, rng):
        v = rng.normal(size=16)
        copy = v.copy()
        wht(v)
        assert np.array_equal(v, copy)

    def test_non_power_of_two(self):
        with pytest.raises(ParameterError):
            wht(np.ones(6))
        with pytest.raises(ParameterError):
            wht([])


def test_hamming_weights():
    weights = hamming_weights(4)
    assert weights.tolist() == [bin(i).count("1") for i in range(16)]
