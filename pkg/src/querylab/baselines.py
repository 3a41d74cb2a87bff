"""
Classical reference algorithms and information-theoretic query bounds.
"""

import math
from dataclasses import asdict, dataclass

from .combinatorics import BitString
from .exceptions import ParameterError
from .oracles import CgtOracle, QueryKind, WildcardOracle


@dataclass(frozen=True)
class BoundReport:
    """Lower bounds on the number of queries for one ``(n, k)``.

    Attributes:
        n (int): Length of the hidden string.
        k (int): Bound on its weight.
        classical_cgt_lb (float): ``log2 C(n, k)``, one bit per query.
        classical_wildcards_lb (float): ``n``.
        quantum_sww_lb (float): ``sqrt(n)``.
    """

    n: int
    k: int
    classical_cgt_lb: float
    classical_wildcards_lb: float
    quantum_sww_lb: float

    def to_dict(self) -> dict:
        return asdict(self)


def info_bounds(n: int, k: int) -> BoundReport:
    if n < 0:
        raise ParameterError("n", n, "must be nonnegative")
    if not 0 <= k <= n:
        raise ParameterError("k", k, f"must lie in [0, {n}]")
    return BoundReport(
        n=n,
        k=k,
        classical_cgt_lb=math.log2(math.comb(n, k)),
        classical_wildcards_lb=float(n),
        quantum_sww_lb=math.sqrt(n),
    )


def _interval(n: int, lo: int, hi: int) -> BitString:
    return BitString(n, ((1 << hi) - 1) ^ ((1 << lo) - 1))


def cgt_classical(oracle: CgtOracle, n: int, k: int) -> BitString:
    """Adaptive group testing by repeated leftmost-one binary search.

    Probes the unresolved suffix; on a positive answer, halves prefix
    intervals until the leftmost one is isolated, then continues after it.
    Stops after ``k`` ones or a negative probe, so at most
    ``k (ceil(log2 n) + 1) + 1`` queries are made.

    Args:
        oracle (CgtOracle): Oracle over the hidden ``x`` with ``|x| <= k``.
        n (int): Length of ``x``.
        k (int): Promised bound on ``|x|``.

    Returns:
        BitString: Exactly ``x`` when the promise holds.
    """
    if n != oracle.n:
        raise ParameterError("n", n, f"does not match the oracle length {oracle.n}")
    found = []
    start = 0
    while len(found) < k and start < n:
        if oracle.query(_interval(n, start, n), QueryKind.CGT) == 0:
            break
        lo, hi = start, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if oracle.query(_interval(n, lo, mid), QueryKind.CGT) == 1:
                hi = mid
            else:
                lo = mid
        found.append(lo)
        start = lo + 1
    return BitString.from_indices(n, found)


def classical_wildcards(oracle: WildcardOracle, n: int) -> BitString:
    """Reads ``x`` with ``n`` singleton queries ``({i}, 0)``."""
    if n != oracle.n:
        raise ParameterError("n", n, f"does not match the oracle length {oracle.n}")
    return BitString.from_bits(1 - oracle.query_positions([i], [0]) for i in range(n))
