"""
Hidden-input oracles with query accounting.

An oracle seals its hidden string: algorithms only see the query methods and
the :class:`QueryLedger` that counts every call. The simulator-only helpers
(:meth:`CgtOracle.coherent_query`, :meth:`WildcardOracle.measure_window`)
stand in for measurements of coherent queries and are documented as such.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .combinatorics import BitString
from .exceptions import ParameterError


class QueryKind(str, Enum):
    WILDCARD = "wildcard"
    CGT = "cgt"
    VERIFICATION = "verification"


@dataclass
class QueryLedger:
    """Authoritative count of oracle calls for one trial.

    Attributes:
        wildcard_queries (int): Wildcard queries (binary search, Stage 0).
        cgt_queries (int): Group-testing queries, coherent ones included.
        verification_queries (int): Queries that confirm a candidate answer.
        trace (list, optional): Ordered query records when tracing is on.
        trace_handler (callable, optional): Receives each record as a JSON line.
    """

    wildcard_queries: int = 0
    cgt_queries: int = 0
    verification_queries: int = 0
    trace: Optional[List[dict]] = None
    trace_handler: Optional[Callable[[str], None]] = field(default=None, repr=False)

    @classmethod
    def traced(cls, handler: Optional[Callable[[str], None]] = None) -> "QueryLedger":
        return cls(trace=[], trace_handler=handler)

    @property
    def tracing(self) -> bool:
        return self.trace is not None

    @property
    def total(self) -> int:
        return self.wildcard_queries + self.cgt_queries + self.verification_queries

    def count(self, kind: QueryKind) -> int:
        return getattr(self, f"{QueryKind(kind).value}_queries")

    def charge(self, kind: QueryKind, count: int = 1):
        """Adds ``count`` queries of ``kind`` without a trace record."""
        if count < 0:
            raise ParameterError("count", count, "must be nonnegative")
        attribute = f"{QueryKind(kind).value}_queries"
        setattr(self, attribute, getattr(self, attribute) + count)

    def record(
        self,
        kind: QueryKind,
        response,
        subset: Optional[BitString] = None,
        pattern: Optional[BitString] = None,
    ):
        """Counts one oracle call and, when tracing, appends its record."""
        self.charge(kind, 1)
        if not self.tracing:
            return
        entry = {"kind": QueryKind(kind).value}
        positions = subset.support() if subset is not None else []
        entry["subset"] = positions
        if pattern is not None:
            entry["pattern"] = [pattern[i] for i in positions]
        entry["response"] = response
        entry["running_count"] = self.total
        self.trace.append(entry)
        if self.trace_handler is not None:
            self.trace_handler(json.dumps(entry))

    def as_dict(self) -> Dict[str, int]:
        return {
            QueryKind.WILDCARD.value: self.wildcard_queries,
            QueryKind.CGT.value: self.cgt_queries,
            QueryKind.VERIFICATION.value: self.verification_queries,
        }


@dataclass(frozen=True)
class WildcardQuery:
    """A probe ``(S, y)``: does the hidden string agree with ``y`` on ``S``?

    Both fields are words over ``[n]``; ``pattern`` may only have ones inside
    ``subset``.
    """

    subset: BitString
    pattern: BitString

    def __post_init__(self):
        if self.subset.length != self.pattern.length:
            raise ParameterError(
                "pattern", str(self.pattern), "must have the same length as the subset"
            )
        if self.pattern.bits & ~self.subset.bits:
            raise ParameterError(
                "pattern", str(self.pattern), "has bits set outside the subset"
            )

    @classmethod
    def from_assignment(
        cls, n: int, positions: Sequence[int], values: Sequence[int]
    ) -> "WildcardQuery":
        """Query asserting ``x[positions[j]] == values[j]`` for every ``j``."""
        if len(positions) != len(values):
            raise ParameterError("values", list(values), "must align with positions")
        subset = 0
        pattern = 0
        for i, v in zip(positions, values):
            if not 0 <= i < n:
                raise ParameterError("positions", i, f"must lie in [0, {n})")
            subset |= 1 << i
            if v:
                pattern |= 1 << i
        return cls(BitString(n, subset), BitString(n, pattern))


class WildcardOracle:
    """Answers wildcard queries about a sealed string ``x``."""

    def __init__(self, x: BitString, ledger: Optional[QueryLedger] = None):
        self._x = x
        self.ledger = ledger if ledger is not None else QueryLedger()

    @property
    def n(self) -> int:
        return self._x.length

    def query(self, q: WildcardQuery, kind: QueryKind = QueryKind.WILDCARD) -> int:
        """Returns 1 iff ``x`` restricted to ``q.subset`` equals ``q.pattern``.

        Args:
            q (WildcardQuery): The probe. An empty subset always answers 1.
            kind (QueryKind): Counter to charge; wildcard or verification.

        Returns:
            int: The response bit.

        Raises:
            ParameterError: If the query does not fit ``n`` or ``kind`` is a
                group-testing kind. The ledger is left untouched.
        """
        if q.subset.length != self.n:
            raise ParameterError("subset", str(q.subset), f"must have length {self.n}")
        if QueryKind(kind) is QueryKind.CGT:
            raise ParameterError(
                "kind", kind, "a wildcard oracle cannot answer CGT queries"
            )
        response = int(((self._x.bits ^ q.pattern.bits) & q.subset.bits) == 0)
        self.ledger.record(kind, response, q.subset, q.pattern)
        return response

    def query_positions(
        self,
        positions: Sequence[int],
        values: Sequence[int],
        kind: QueryKind = QueryKind.WILDCARD,
    ) -> int:
        query = WildcardQuery.from_assignment(self.n, positions, values)
        return self.query(query, kind)

    def measure_window(
        self, positions: Sequence[int], errors: int, rng: np.random.Generator
    ) -> List[int]:
        """Simulator-side outcome of the distinguishing measurement on a window.

        Returns the true bits at ``positions`` with ``errors`` of them, chosen
        uniformly at random, flipped. No query is charged.
        """
        if not 0 <= errors <= len(positions):
            raise ParameterError("errors", errors, f"must lie in [0, {len(positions)}]")
        claim = [self._x[i] for i in positions]
        for j in rng.choice(len(positions), size=errors, replace=False):
            claim[j] ^= 1
        return claim


class CgtOracle:
    """Answers group-testing queries: is there a one inside ``S``?"""

    def __init__(self, x: BitString, ledger: Optional[QueryLedger] = None):
        self._x = x
        self.ledger = ledger if ledger is not None else QueryLedger()

    @property
    def n(self) -> int:
        return self._x.length

    def _check(self, subset: BitString):
        if subset.length != self.n:
            raise ParameterError("subset", str(subset), f"must have length {self.n}")

    def query(self, subset: BitString, kind: QueryKind = QueryKind.CGT) -> int:
        """OR of the hidden bits selected by ``subset``; an empty set answers 0."""
        self._check(subset)
        if QueryKind(kind) is QueryKind.WILDCARD:
            raise ParameterError(
                "kind", kind, "a CGT oracle cannot answer wildcard queries"
            )
        response = int(self._x.bits & subset.bits != 0)
        self.ledger.record(kind, response, subset)
        return response

    def coherent_query(
        self,
        subset: BitString,
        sampler: Callable[[List[int], np.random.Generator], List[int]],
        rng: np.random.Generator,
    ) -> List[int]:
        """One coherent query over ``subset``, resolved by sampling its measurement.

        ``sampler`` receives the hidden one-positions inside ``subset`` and
        returns the positions revealed by the measurement. Exactly one CGT
        query is charged; the trace response lists the revealed positions.
        """
        self._check(subset)
        revealed = sampler((self._x & subset).support(), rng)
        self.ledger.record(QueryKind.CGT, list(revealed), subset)
        return revealed


class WildcardReduction:
    """Search with wildcards on ``k`` bits posed as group testing on ``2k + padding``.

    Block ``i`` holds positions ``2i`` and ``2i + 1``; the hidden group-testing
    string has its single one at ``2i`` when ``z_i = 0`` and at ``2i + 1`` when
    ``z_i = 1``. The padding positions are zero and never queried.

    Attributes:
        k (int): Length of the wildcard instance ``z``.
        padding (int): Number of trailing zero positions.
        oracle (CgtOracle): The group-testing oracle over the encoded string.
    """

    def __init__(
        self, z: BitString, padding: int = 0, ledger: Optional[QueryLedger] = None
    ):
        if z.length < 1:
            raise ParameterError("k", z.length, "must be at least 1")
        if padding < 0:
            raise ParameterError("padding", padding, "must be nonnegative")
        self.k = z.length
        self.padding = padding
        ones = [2 * i + z[i] for i in range(self.k)]
        hidden = BitString.from_indices(2 * self.k + padding, ones)
        self.oracle = CgtOracle(hidden, ledger)

    @property
    def n(self) -> int:
        return self.k

    @property
    def ledger(self) -> QueryLedger:
        return self.oracle.ledger

    def decode(self, h: BitString) -> BitString:
        """Recovers ``z`` from a recovered group-testing string."""
        if h.length != self.oracle.n:
            raise ParameterError("h", str(h), f"must have length {self.oracle.n}")
        bits = []
        for i in range(self.k):
            low, high = h[2 * i], h[2 * i + 1]
            if low == high:
                raise ParameterError("h", str(h), f"block {i} is not one-hot")
            bits.append(high)
        return BitString.from_bits(bits)

    def cgt_set(self, q: WildcardQuery) -> BitString:
        """Group-testing set asking whether any ``z_i`` equals the claimed ``y_i``."""
        if q.subset.length != self.k:
            raise ParameterError("subset", str(q.subset), f"must have length {self.k}")
        positions = [2 * i + q.pattern[i] for i in q.subset.support()]
        return BitString.from_indices(self.oracle.n, positions)

    def query(self, q: WildcardQuery, kind: QueryKind = QueryKind.WILDCARD) -> int:
        """Wildcard query on the complement of ``z`` via one inverted CGT query."""
        verifying = QueryKind(kind) is QueryKind.VERIFICATION
        cgt_kind = QueryKind.VERIFICATION if verifying else QueryKind.CGT
        return 1 - self.oracle.query(self.cgt_set(q), cgt_kind)

    def query_positions(
        self,
        positions: Sequence[int],
        values: Sequence[int],
        kind: QueryKind = QueryKind.WILDCARD,
    ) -> int:
        query = WildcardQuery.from_assignment(self.k, positions, values)
        return self.query(query, kind)


def wildcards_via_cgt(
    z: BitString, padding: int = 0, ledger: Optional[QueryLedger] = None
) -> WildcardReduction:
    """Wraps a hidden wildcard instance ``z`` as a group-testing oracle."""
    return WildcardReduction(z, padding, ledger)
