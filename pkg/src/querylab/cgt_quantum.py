"""
Quantum combinatorial group testing, simulated through exact outcome laws.

A coherent CGT query over ``S`` followed by a Hadamard measurement yields a
pattern ``y`` over ``S`` whose law depends only on ``m = |x_S|``: ``y`` is
zero outside the one-positions of ``x_S``, the all-zero outcome has
probability ``(1 - 2^(1-m))^2`` and every nonzero pattern on the
one-positions has probability ``2^(2-2m)``. Sampling that law is exact, so no
amplitudes are ever built.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set

import numpy as np

from .combinatorics import BitString, wht
from .exceptions import ParameterError, TrialCapExceeded
from .oracles import CgtOracle, QueryKind

DEFAULT_MAX_CYCLES = 100_000


def zero_outcome_probability(m: int) -> float:
    """Probability that the measurement reveals nothing when ``|x_S| = m``."""
    if m < 0:
        raise ParameterError("m", m, "must be nonnegative")
    return (1.0 - 2.0 ** (1 - m)) ** 2


def measurement_sample(support: Sequence[int], rng: np.random.Generator) -> List[int]:
    """Samples the positions revealed by one coherent query.

    Args:
        support (Sequence[int]): The one-positions of ``x`` inside the queried
            set, so ``m = len(support)``.
        rng (np.random.Generator): Source of randomness.

    Returns:
        List[int]: The positions where the outcome ``y`` is 1; always a subset
        of ``support`` and empty with probability ``(1 - 2^(1-m))^2``.
    """
    m = len(support)
    if m == 0 or rng.random() < zero_outcome_probability(m):
        return []
    # Nonzero patterns are uniform: reject the all-zero draw.
    while True:
        bits = rng.integers(0, 2, size=m)
        if bits.any():
            return [support[j] for j in np.flatnonzero(bits)]


def analytic_outcome_law(x_s: BitString) -> np.ndarray:
    """Closed-form law of ``y`` over all ``2^|S|`` patterns, indexed by ``y``'s bits."""
    size = 1 << x_s.length
    m = x_s.weight
    law = np.zeros(size)
    inside = (np.arange(size) & ~x_s.bits) == 0
    law[inside] = 2.0 ** (2 - 2 * m)
    law[0] = zero_outcome_probability(m)
    return law


def brute_force_outcome_law(x_s: BitString) -> np.ndarray:
    """Law of ``y`` from the Hadamard transform of ``(-1)^OR(x_S and s)``."""
    size = 1 << x_s.length
    phases = np.where((np.arange(size) & x_s.bits) != 0, -1.0, 1.0)
    amplitudes = wht(phases) / size
    return amplitudes**2


@dataclass
class CgtState:
    """Progress of one solver run.

    Attributes:
        n (int): Length of the hidden string.
        k_bound (int): Promised upper bound on ``|x|``.
        found (set): Confirmed one-positions ``I``.
        cycles (int): Guess cycles started.
        productive_cycles (int): Cycles that found at least one new position.
    """

    n: int
    k_bound: int
    found: Set[int] = field(default_factory=set)
    cycles: int = 0
    productive_cycles: int = 0

    @property
    def k_remaining(self) -> int:
        return max(self.k_bound - len(self.found), 0)

    def result(self) -> BitString:
        return BitString.from_indices(self.n, sorted(self.found))

    def diagnostic(self) -> dict:
        return {
            "n": self.n,
            "k_bound": self.k_bound,
            "found": len(self.found),
            "cycles": self.cycles,
        }


def cgt_k1(oracle: CgtOracle, rng: np.random.Generator) -> BitString:
    """Recovers ``x`` with a single coherent query when ``|x| <= 1``.

    The promise is not checked; with ``|x| > 1`` the output is some subset
    of the true ones.
    """
    revealed = oracle.coherent_query(BitString.ones(oracle.n), measurement_sample, rng)
    return BitString.from_indices(oracle.n, revealed)


def cgt_subroutine(
    oracle: CgtOracle, state: CgtState, k_guess: int, rng: np.random.Generator
) -> Set[int]:
    """One coherent query on a random subset of the unresolved positions.

    Each position outside ``state.found`` joins ``S`` independently with
    probability ``1/k_guess``; the revealed positions are added to the state.

    Returns:
        Set[int]: The newly found one-positions (possibly empty).
    """
    if k_guess < 1:
        raise ParameterError("k_guess", k_guess, "must be at least 1")
    chosen = np.ones(state.n, dtype=bool)
    if state.found:
        chosen[list(state.found)] = False
    if k_guess > 1:
        chosen &= rng.random(state.n) < 1.0 / k_guess
    revealed = oracle.coherent_query(
        BitString.from_array(chosen), measurement_sample, rng
    )
    new = set(revealed) - state.found
    state.found |= new
    return new


def cgt_solve(
    oracle: CgtOracle,
    n: int,
    k: int,
    rng: np.random.Generator,
    *,
    state: Optional[CgtState] = None,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> BitString:
    """Las Vegas group testing with ``O(k log k)`` expected queries.

    The loop first checks the complement of the known ones with a
    verification query and stops when it answers 0. Otherwise it runs a
    cycle of guesses ``k' = 1, 2, 4, ..., 2^ceil(log2 k_remaining)``, each a
    :func:`cgt_subroutine` call, and returns to the check after the first
    guess that finds something or after the whole cycle.

    Args:
        oracle (CgtOracle): Oracle over the hidden ``x`` with ``|x| <= k``.
        n (int): Length of ``x``.
        k (int): Promised bound on ``|x|``.
        rng (np.random.Generator): Source of randomness.
        state (CgtState, optional): State to resume or inspect afterwards.
        max_cycles (int): Cap on guess cycles.

    Returns:
        BitString: Exactly ``x``.

    Raises:
        TrialCapExceeded: If more than ``max_cycles`` cycles are needed.
    """
    if n != oracle.n:
        raise ParameterError("n", n, f"does not match the oracle length {oracle.n}")
    if k < 0:
        raise ParameterError("k", k, "must be nonnegative")
    state = state if state is not None else CgtState(n, k)

    while True:
        unresolved = ~state.result()
        if oracle.query(unresolved, kind=QueryKind.VERIFICATION) == 0:
            return state.result()
        if state.cycles >= max_cycles:
            raise TrialCapExceeded("cgt_solve", max_cycles, state.diagnostic())

        state.cycles += 1
        top = math.ceil(math.log2(max(state.k_remaining, 1)))
        for i in range(top + 1):
            if cgt_subroutine(oracle, state, 2**i, rng):
                state.productive_cycles += 1
                break
