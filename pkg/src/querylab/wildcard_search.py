"""
Staged search with wildcards.

Stage 0 learns ``n_0 = O(sqrt(n))`` bits one at a time. Every later stage
grows the known window from ``n_{s-1}`` to ``n_s`` positions: the
distinguishing measurement yields a claim on the window whose Hamming
distance to the truth follows the Gram-module law ``P(d)`` for
``(n_s, n_{s-1})``, and the claim is then repaired against the real oracle
by a verification query plus one binary search and re-verification per
error.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .combinatorics import BitString
from .exceptions import ContractViolation, ParameterError
from .gram import DEFAULT_PRECISION_BUDGET, GramSpectrum, gram_spectrum
from .oracles import QueryKind, WildcardOracle


class AccountingMode(str, Enum):
    TRACE = "trace"
    LEDGER = "ledger"


@dataclass(frozen=True)
class StageSchedule:
    """Window sizes ``n_0 < n_1 < ... < n_l = n``."""

    sizes: Tuple[int, ...]

    @property
    def n(self) -> int:
        return self.sizes[-1]

    @property
    def n0(self) -> int:
        return self.sizes[0]

    @property
    def stages(self) -> int:
        """Number of stages after Stage 0."""
        return len(self.sizes) - 1

    def pairs(self) -> List[Tuple[int, int]]:
        """``(n_prev, n_s)`` for every stage after Stage 0."""
        return list(zip(self.sizes, self.sizes[1:]))

    def __len__(self) -> int:
        return len(self.sizes)


def stage_schedule(n: int) -> StageSchedule:
    """Iterates ``n_{i-1} = ceil(n_i - sqrt(n_i))`` down from ``n``.

    Stops once the size is at most ``ceil(sqrt(n))``.

    Raises:
        ParameterError: If ``n < 1``.
    """
    if n < 1:
        raise ParameterError("n", n, "must be at least 1")
    stop = math.isqrt(n - 1) + 1
    sizes = [n]
    while sizes[-1] > stop:
        current = sizes[-1]
        sizes.append(current - math.isqrt(current))
    return StageSchedule(tuple(reversed(sizes)))


@dataclass(frozen=True)
class StageOutcome:
    """Accounting for one stage.

    Attributes:
        stage_index (int): 0 for the singleton stage, then 1..l.
        window (int): Window size ``n_s`` after the stage.
        errors_sampled (int): Distance ``e`` of the measured claim from the truth.
        queries_charged (int): Queries this stage added to the ledger.
        corrected (bool): Whether any correction round ran.
    """

    stage_index: int
    window: int
    errors_sampled: int
    queries_charged: int
    corrected: bool

    def to_dict(self) -> dict:
        return {
            "stage_index": self.stage_index,
            "window": self.window,
            "errors_sampled": self.errors_sampled,
            "queries_charged": self.queries_charged,
            "corrected": self.corrected,
        }


def stage_cost(n_s: int, errors: int) -> int:
    """``1 + e (ceil(log2 n_s) + 1)``: the query cost of a stage with ``e`` errors."""
    return 1 + errors * (search_depth(n_s) + 1)


def search_depth(size: int) -> int:
    """Number of queries :func:`find_mismatch` spends on ``size`` positions."""
    return (size - 1).bit_length() if size > 0 else 0


class WindowState:
    """A random visiting order and the bits learned so far."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.order: List[int] = rng.permutation(n).tolist()
        self.values: List[int] = []

    @property
    def size(self) -> int:
        return len(self.values)

    def positions(self, size: Optional[int] = None) -> List[int]:
        return self.order[: self.size if size is None else size]

    def to_bitstring(self) -> BitString:
        bits = 0
        for i, v in zip(self.order, self.values):
            bits |= v << i
        return BitString(self.n, bits)


def _locate_mismatch(
    oracle: WildcardOracle, positions: Sequence[int], claim: Sequence[int]
) -> int:
    lo, hi = 0, len(positions)
    if hi == 0:
        raise ContractViolation("find_mismatch", "the claimed window is empty")
    span = 1 << search_depth(hi)
    while span > 1:
        span //= 2
        mid = min(lo + span, hi)
        if oracle.query_positions(positions[lo:mid], claim[lo:mid]) == 1:
            lo = mid
        else:
            hi = mid
        if lo >= hi:
            raise ContractViolation(
                "find_mismatch", "the claim agrees with the oracle on every position"
            )
    return lo


def find_mismatch(
    oracle: WildcardOracle, positions: Sequence[int], claim: Sequence[int]
) -> int:
    """Binary search for one position where ``claim`` disagrees with the hidden string.

    Queries the first half of the live interval with the claimed values:
    a 1 moves the search to the other half, a 0 keeps the first half. The
    halves are cut on power-of-two boundaries, so exactly
    ``ceil(log2 len(positions))`` wildcard queries are made.

    Args:
        oracle (WildcardOracle): Oracle over the hidden string.
        positions (Sequence[int]): The window ``S``.
        claim (Sequence[int]): Claimed bits, aligned with ``positions``.

    Returns:
        int: A position in ``positions`` holding a wrong claimed bit.

    Raises:
        ContractViolation: If the claim turns out to be correct everywhere.
    """
    if len(positions) != len(claim):
        raise ParameterError("claim", len(claim), "must align with positions")
    return positions[_locate_mismatch(oracle, positions, claim)]


def simulate_stage(
    oracle: WildcardOracle,
    window: WindowState,
    n_s: int,
    n_prev: int,
    spectrum: GramSpectrum,
    rng: np.random.Generator,
    *,
    stage_index: int = 1,
    mode: AccountingMode = AccountingMode.TRACE,
) -> StageOutcome:
    """Grows the known window from ``n_prev`` to ``n_s`` positions.

    Draws the error count ``e`` from the spectrum's distance law. In trace
    mode the claim (the truth with ``e`` random positions flipped) is
    verified and repaired with real oracle calls; in ledger mode the same
    cost ``1 + e (ceil(log2 n_s) + 1)`` is charged without calling the oracle.
    Either way the window ends equal to the truth.

    Raises:
        ParameterError: If the spectrum or window does not match the stage.
    """
    if (spectrum.n, spectrum.k) != (n_s, n_prev):
        raise ParameterError(
            "spectrum",
            (spectrum.n, spectrum.k),
            f"must be computed for ({n_s}, {n_prev})",
        )
    if window.size != n_prev:
        raise ParameterError("window", window.size, f"must hold {n_prev} known bits")

    ledger = oracle.ledger
    before = ledger.total
    errors = spectrum.distribution.sample(rng)
    positions = window.positions(n_s)

    if AccountingMode(mode) is AccountingMode.LEDGER:
        ledger.charge(QueryKind.VERIFICATION, 1 + errors)
        ledger.charge(QueryKind.WILDCARD, errors * search_depth(n_s))
        claim = oracle.measure_window(positions, 0, rng)
    else:
        claim = oracle.measure_window(positions, errors, rng)
        while oracle.query_positions(positions, claim, QueryKind.VERIFICATION) == 0:
            slot = _locate_mismatch(oracle, positions, claim)
            claim[slot] ^= 1

    window.values = claim
    return StageOutcome(stage_index, n_s, errors, ledger.total - before, errors > 0)


def schedule_spectra(
    schedule: StageSchedule, precision_budget: float = DEFAULT_PRECISION_BUDGET
) -> Dict[Tuple[int, int], GramSpectrum]:
    """Spectra for every ``(n_s, n_prev)`` pair of a schedule, keyed by that pair."""
    return {
        (n_s, n_prev): gram_spectrum(n_s, n_prev, precision_budget)
        for n_prev, n_s in schedule.pairs()
    }


def simulate_search(
    oracle: WildcardOracle,
    n: int,
    rng: np.random.Generator,
    *,
    mode: AccountingMode = AccountingMode.TRACE,
    spectra: Optional[Mapping[Tuple[int, int], GramSpectrum]] = None,
    on_stage: Optional[Callable[[StageOutcome], None]] = None,
) -> BitString:
    """Recovers the hidden string with ``O(sqrt(n) log n)`` expected queries.

    Args:
        oracle (WildcardOracle): Oracle over the hidden ``x``.
        n (int): Length of ``x``.
        rng (np.random.Generator): Source of randomness.
        mode (AccountingMode): ``trace`` for real oracle calls, ``ledger`` for
            charged formula costs.
        spectra (Mapping, optional): Precomputed spectra keyed by ``(n_s, n_prev)``.
        on_stage (callable, optional): Receives every :class:`StageOutcome`,
            Stage 0 included.

    Returns:
        BitString: Exactly ``x``.
    """
    if n != oracle.n:
        raise ParameterError("n", n, f"does not match the oracle length {oracle.n}")
    schedule = stage_schedule(n)
    spectra = spectra if spectra is not None else schedule_spectra(schedule)
    notify = on_stage or (lambda outcome: None)

    window = WindowState(n, rng)
    before = oracle.ledger.total
    window.values = [
        1 - oracle.query_positions([i], [0]) for i in window.positions(schedule.n0)
    ]
    notify(StageOutcome(0, schedule.n0, 0, oracle.ledger.total - before, False))

    for index, (n_prev, n_s) in enumerate(schedule.pairs(), start=1):
        outcome = simulate_stage(
            oracle,
            window,
            n_s,
            n_prev,
            spectra[(n_s, n_prev)],
            rng,
            stage_index=index,
            mode=mode,
        )
        notify(outcome)

    return window.to_bitstring()
