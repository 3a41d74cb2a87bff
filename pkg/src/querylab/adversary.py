"""
Strong weighted adversary bound for search with wildcards, by enumeration.

Inputs are all ``x`` in ``{0,1}^n``; queries are all ``(S, t)``, one of three
states per position, so ``3^n`` of them. Neighbours at Hamming distance one
carry weight 1, which makes ``wt(x) = n`` for every input.
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from .combinatorics import BitString, hamming_weights
from .exceptions import ParameterError
from .oracles import WildcardQuery

ADVERSARY_MAX_N = 10


@dataclass(frozen=True)
class AdversaryWitness:
    """A triple ``(x, y, q)`` attaining the minimum ratio."""

    x: BitString
    y: BitString
    query: WildcardQuery
    v_x: int
    v_y: int

    def to_dict(self) -> dict:
        subset = self.query.subset
        return {
            "x": str(self.x),
            "y": str(self.y),
            "subset": str(subset),
            "pattern": str(self.query.pattern.restrict(subset.support())),
            "subset_size": subset.weight,
            "v_x": self.v_x,
            "v_y": self.v_y,
        }


@dataclass(frozen=True)
class AdversaryReport:
    n: int
    bound: float
    witness: Optional[AdversaryWitness]
    violations: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "bound": self.bound,
            "argmin_witness": self.witness.to_dict() if self.witness else None,
            "weight_scheme_violations": self.violations,
        }


def _submasks(mask: int) -> Iterator[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _responses(
    n: int, subset: int, patterns: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.arange(1 << n, dtype=np.int64)
    patterns = np.asarray(patterns, dtype=np.int64).reshape(-1, 1)
    mismatches = weights[(xs ^ patterns) & subset]
    zeta = mismatches == 0
    closed = np.where(zeta, int(weights[subset]), (mismatches == 1).astype(np.int64))
    direct = np.zeros_like(closed)
    for p in range(n):
        direct += zeta != zeta[:, xs ^ (1 << p)]
    return zeta, closed, direct


def query_weights(
    n: int, subset: int, patterns: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """``v(x, q)`` for every ``x`` and every pattern over one subset.

    Returns the closed-form case split (``|S|`` on a match, 1 at one
    mismatch, else 0) and the direct count of neighbours ``y`` whose
    response differs, as arrays of shape ``(len(patterns), 2^n)``.
    """
    _, closed, direct = _responses(n, subset, patterns, hamming_weights(n))
    return closed, direct


def _scan(n: int, masks: List[int]) -> Tuple[float, Optional[tuple], int]:
    xs = np.arange(1 << n, dtype=np.int64)
    weights = hamming_weights(n)
    best, witness, violations = math.inf, None, 0
    for mask in masks:
        patterns = np.fromiter(_submasks(mask), dtype=np.int64)
        zeta, closed, direct = _responses(n, mask, patterns, weights)
        violations += int(np.count_nonzero(closed != direct))
        if mask == 0:
            continue
        for p in range(n):
            partner = xs ^ (1 << p)
            denom = closed * closed[:, partner]
            # pairs whose responses differ; 0/0 pairs never enter the minimum
            live = (zeta != zeta[:, partner]) & (denom > 0)
            if not live.any():
                continue
            ratio = np.where(live, np.sqrt((n * n) / np.where(live, denom, 1)), np.inf)
            row, x = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
            if ratio[row, x] < best:
                best = float(ratio[row, x])
                y = int(partner[x])
                witness = (
                    int(x),
                    y,
                    mask,
                    int(patterns[row]),
                    int(closed[row, x]),
                    int(closed[row, y]),
                )
    return best, witness, violations


def adversary_report(n: int, *, jobs: int = 1) -> AdversaryReport:
    """Evaluates the adversary minimum over every input pair and query.

    Enumeration is split by subset across ``jobs`` workers; partial results
    merge in subset order so the witness does not depend on ``jobs``.

    Args:
        n (int): String length, at most ``ADVERSARY_MAX_N``.
        jobs (int): Worker processes for joblib.

    Returns:
        AdversaryReport: The bound, its first minimizing triple and the
            number of triples where the closed-form ``v`` disagrees with
            the direct neighbour count.

    Raises:
        ParameterError: If ``n`` is outside ``[1, ADVERSARY_MAX_N]``.
    """
    if not 1 <= n <= ADVERSARY_MAX_N:
        raise ParameterError(
            "n", n, f"must lie in [1, {ADVERSARY_MAX_N}] for full enumeration"
        )
    masks = list(range(1 << n))
    chunks = [masks[i :: max(jobs, 1)] for i in range(max(jobs, 1))]
    chunks = [sorted(c) for c in chunks if c]
    if jobs > 1:
        parts = Parallel(n_jobs=jobs)(delayed(_scan)(n, chunk) for chunk in chunks)
    else:
        parts = [_scan(n, chunk) for chunk in chunks]

    violations = sum(count for _, _, count in parts)
    best, witness = math.inf, None
    for value, found, _ in sorted(
        (p for p in parts if p[1] is not None), key=lambda p: (p[0], p[1][2])
    ):
        if value < best:
            best, witness = value, found
    if witness is None:
        return AdversaryReport(n, best, None, violations)

    x, y, mask, pattern, v_x, v_y = witness
    query = WildcardQuery(BitString(n, mask), BitString(n, pattern))
    found = AdversaryWitness(BitString(n, x), BitString(n, y), query, v_x, v_y)
    return AdversaryReport(n, best, found, violations)


def adversary_bound(n: int) -> float:
    return adversary_report(n).bound


def weight_scheme_violations(n: int) -> int:
    """Triples where the closed-form ``v(x, q)`` differs from the neighbour count."""
    return adversary_report(n).violations
