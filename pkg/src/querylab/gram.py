"""
Pretty Good Measurement statistics for the subset-restricted state family.

For a hidden ``x`` the algorithm holds the uniform superposition over all
``k``-subsets ``S`` of ``x_S``. The Gram matrix of that family depends on
``x XOR y`` only, so it is diagonalised by the Walsh-Hadamard transform and
every quantity of interest is a function of a Hamming weight or distance.
This module evaluates those quantities exactly (closed forms over exact
integers), cross-checks them against a brute-force ``2^n`` path, and
packages them into an immutable :class:`GramSpectrum`.
"""

import math
import sys
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .combinatorics import hamming_weights, krawtchouk_row, wht
from .exceptions import InternalConsistencyError, ParameterError, PrecisionWarning

DEFAULT_PRECISION_BUDGET = 1e-10
BRUTE_FORCE_MAX_N = 20
# Above this n the distance law stops once the residual mass is below TAIL_MASS.
FULL_DISTANCE_MAX_N = 64
TAIL_MASS = 1e-13
NEGATIVE_EIGENVALUE_TOLERANCE = 1e-9

_EPS = sys.float_info.epsilon
_SQRT_HALF = math.sqrt(0.5)


def _check_nk(n: int, k: int):
    if n < 0:
        raise ParameterError("n", n, "must be nonnegative")
    if not 0 <= k <= n:
        raise ParameterError("k", k, f"must lie in [0, {n}]")


def _check_index(name: str, value: int, n: int):
    if not 0 <= value <= n:
        raise ParameterError(name, value, f"must lie in [0, {n}]")


def _sqrt_parts(value: int) -> Tuple[float, int]:
    """Splits ``sqrt(value)`` into ``(mantissa, exponent)``, base 2."""
    shift = max(value.bit_length() - 64, 0)
    shift += shift & 1
    return math.sqrt(value >> shift), shift // 2


def gram_entry(n: int, k: int, d: int) -> float:
    """Inner product of two states whose hidden strings are at distance ``d``.

    Args:
        n (int): Length of the hidden string.
        k (int): Subset size.
        d (int): Hamming distance ``d(x, y)``.

    Returns:
        float: ``C(n - d, k) / C(n, k)``.

    Raises:
        ParameterError: If ``k`` or ``d`` is outside ``[0, n]``.
    """
    _check_nk(n, k)
    _check_index("d", d, n)
    return math.comb(n - d, k) / math.comb(n, k)


def eigenvalue(n: int, k: int, w: int) -> float:
    """Gram eigenvalue at any character ``s`` of weight ``w``.

    ``lambda_w = 2^(n-k) C(n - w, n - k) / C(n, k)``. Returns ``inf`` when the
    value does not fit a float (only for ``n - k`` above about a thousand).
    """
    _check_nk(n, k)
    _check_index("w", w, n)
    try:
        return (2 ** (n - k) * math.comb(n - w, n - k)) / math.comb(n, k)
    except OverflowError:
        return math.inf


def log_eigenvalue(n: int, k: int, w: int) -> float:
    """Natural log of :func:`eigenvalue`; ``-inf`` where the eigenvalue vanishes."""
    _check_nk(n, k)
    _check_index("w", w, n)
    numerator = math.comb(n - w, n - k)
    if numerator == 0:
        return -math.inf
    return (n - k) * math.log(2) + math.log(numerator) - math.log(math.comb(n, k))


@dataclass(frozen=True)
class PgmEntry:
    """One distance-resolved entry of the square-root Gram row.

    ``scaled`` is ``sqrt(C(n, d)) * r_d``, whose square is the probability
    that the measurement lands at distance ``d``.
    """

    d: int
    value: float
    scaled: float
    cancellation: float
    mass_error: float
    exact: bool = False
    flagged: bool = False

    @property
    def probability(self) -> float:
        return self.scaled * self.scaled


class _EntryKernel:
    """Per-(n, k) precomputation shared by every distance ``d``."""

    def __init__(self, n: int, k: int):
        _check_nk(n, k)
        self.n = n
        self.k = k
        self.m = n - k
        self.half, self.odd = divmod(n + k, 2)
        self.binoms = [math.comb(n - z, self.m) for z in range(k + 1)]
        self.parts = [_sqrt_parts(b) for b in self.binoms]
        self.norm = _sqrt_parts(math.comb(n, self.m))

    def float_entry(self, d: int) -> Tuple[float, float, float]:
        """Scaled entry, sum of absolute terms and an error bound on the entry."""
        row = krawtchouk_row(self.n, d, self.k)
        d_mant, d_exp = _sqrt_parts(math.comb(self.n, d))
        n_mant, n_exp = self.norm
        terms: List[float] = []
        for z, kz in enumerate(row):
            if kz == 0:
                continue
            z_mant, z_exp = self.parts[z]
            shift = max(abs(kz).bit_length() - 62, 0)
            mantissa = float(kz >> shift) * d_mant * z_mant / n_mant
            terms.append(
                math.ldexp(mantissa, shift + d_exp + z_exp - n_exp - self.half)
            )
        scaled = math.fsum(terms)
        abs_sum = math.fsum(abs(t) for t in terms)
        if self.odd:
            scaled *= _SQRT_HALF
            abs_sum *= _SQRT_HALF
        return scaled, abs_sum, 8 * _EPS * abs_sum + _EPS * abs(scaled)

    def exact_entry(self, d: int, bits: int) -> Tuple[float, float, float]:
        """Fixed-point route: integer square roots scaled by ``2**bits``."""
        row = krawtchouk_row(self.n, d, self.k)
        c_nd = math.comb(self.n, d)
        numerator = 0
        abs_row = 0
        abs_sum = 0
        for z, kz in enumerate(row):
            if kz == 0:
                continue
            q = math.isqrt((c_nd * self.binoms[z]) << (2 * bits))
            numerator += kz * q
            abs_sum += abs(kz) * q
            abs_row += abs(kz)
        denominator = math.isqrt(
            (math.comb(self.n, self.m) << (self.n + self.k)) << (2 * bits)
        )
        scaled = numerator / denominator
        error = (abs_row + 2) / denominator + _EPS * abs(scaled)
        return scaled, abs_sum / denominator, error

    def entry(self, d: int, precision_budget: float) -> PgmEntry:
        _check_index("d", d, self.n)
        if self.k == self.n:
            one = 1.0 if d == 0 else 0.0
            return PgmEntry(d, one, one, 1.0, 0.0)

        scaled, abs_sum, error = self.float_entry(d)
        exact = False
        if _mass_error(scaled, error) > precision_budget:
            scaled, abs_sum, error = self.exact_entry(d, bits=self.n + 64)
            exact = True
        mass_error = _mass_error(scaled, error)

        flagged = mass_error > precision_budget
        if flagged:
            warnings.warn(
                f"sqrtG entry (n={self.n}, k={self.k}, d={d}) has a probability "
                f"error bound of {mass_error:.3e}, "
                f"above the budget {precision_budget:.1e}.",
                PrecisionWarning,
                stacklevel=3,
            )

        if scaled == 0.0:
            cancellation = math.inf if abs_sum else 1.0
        else:
            cancellation = abs_sum / abs(scaled)
        d_mant, d_exp = _sqrt_parts(math.comb(self.n, d))
        value = math.ldexp(scaled / d_mant, -d_exp)
        return PgmEntry(d, value, scaled, cancellation, mass_error, exact, flagged)


def _mass_error(scaled: float, error: float) -> float:
    return 2 * abs(scaled) * error + error * error


def sqrt_gram_entry(
    n: int, k: int, d: int, *, precision_budget: float = DEFAULT_PRECISION_BUDGET
) -> float:
    """Entry of ``sqrt(G)`` for two strings at Hamming distance ``d``.

    Evaluates the Krawtchouk closed form
    ``r_d = 2^(-(n+k)/2) C(n,k)^(-1/2) sum_z C(n-z, n-k)^(1/2) K_z^n(d)`` with
    exact Krawtchouk integers and correctly rounded summation. When the
    resulting error bound on the probability ``C(n,d) r_d^2`` exceeds
    ``precision_budget`` the entry is recomputed on a fixed-point integer
    route; if that still exceeds the budget a :class:`PrecisionWarning` is
    issued and the value is returned anyway.

    Args:
        n (int): Length of the hidden string.
        k (int): Subset size.
        d (int): Hamming distance.
        precision_budget (float): Largest tolerated error on the probability.

    Returns:
        float: ``r_d``.

    Raises:
        ParameterError: If ``k`` or ``d`` is outside ``[0, n]``.
    """
    return _EntryKernel(n, k).entry(d, precision_budget).value


@dataclass(frozen=True, eq=False)
class PgmDistanceDistribution:
    """Law of ``d(x, y)`` when the measurement outputs ``y`` on input ``x``."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.n + 1,):
            raise ParameterError("probs", probs.shape, f"must have length {self.n + 1}")
        if probs.min() < 0:
            raise ParameterError("probs", probs.min(), "must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ParameterError("probs", probs.sum(), "must sum to 1")
        probs = probs / probs.sum()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.n + 1), self.probs))

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.n + 1, p=self.probs))


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GramSpectrum:
    """All Gram statistics for one ``(n, k)``.

    Attributes:
        n (int): Length of the hidden string.
        k (int): Subset size.
        lambda_by_weight (np.ndarray): ``lambda_w`` for ``w = 0..n``.
        sqrtG_by_distance (np.ndarray): ``r_d`` for ``d = 0..n``.
        probs (np.ndarray): ``P(d) = C(n,d) r_d^2``.
        cancellation_estimate (np.ndarray): ``sum |terms| / |result|`` per ``d``.
        mass_error (np.ndarray): Error bound on each ``P(d)``.
        flagged (bool): Whether any entry exceeded the precision budget.
        tail_mass (float): Mass beyond the last evaluated distance (0 for small n).
    """

    n: int
    k: int
    lambda_by_weight: np.ndarray
    sqrtG_by_distance: np.ndarray
    probs: np.ndarray
    cancellation_estimate: np.ndarray
    mass_error: np.ndarray
    flagged: bool = False
    tail_mass: float = 0.0
    exact_distances: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def distribution(self) -> PgmDistanceDistribution:
        return PgmDistanceDistribution(self.n, self.probs)

    @property
    def expected_distance(self) -> float:
        return math.fsum(d * p for d, p in enumerate(self.probs))

    @property
    def success_probability(self) -> float:
        return float(self.probs[0])

    @property
    def normalization(self) -> float:
        return math.fsum(self.probs)

    def to_dict(self) -> dict:
        """JSON-ready view of the spectrum."""
        return {
            "n": self.n,
            "k": self.k,
            "lambda": self.lambda_by_weight.tolist(),
            "sqrtG": self.sqrtG_by_distance.tolist(),
            "P": self.probs.tolist(),
            "D_direct": self.expected_distance,
            "D_plancherel": expected_distance_plancherel(self.n, self.k),
            "p_success": self.success_probability,
            "cancellation": self.cancellation_estimate.tolist(),
            "flagged": self.flagged,
            "tail_mass": self.tail_mass,
        }


@lru_cache(maxsize=1024)
def gram_spectrum(
    n: int, k: int, precision_budget: float = DEFAULT_PRECISION_BUDGET
) -> GramSpectrum:
    """Builds (and caches) the :class:`GramSpectrum` for ``(n, k)``.

    For ``n <= 64`` every distance is evaluated. Beyond that the distances are
    walked upwards until the residual probability mass falls below
    ``TAIL_MASS``; the remaining entries are zero and the residual is kept in
    ``tail_mass``.
    """
    kernel = _EntryKernel(n, k)
    lambdas = [eigenvalue(n, k, w) for w in range(n + 1)]

    entries: List[PgmEntry] = []
    for d in range(n + 1):
        entries.append(kernel.entry(d, precision_budget))
        if n > FULL_DISTANCE_MAX_N:
            if 1.0 - math.fsum(e.probability for e in entries) < TAIL_MASS:
                break

    size = n + 1
    sqrt_row = np.zeros(size)
    probs = np.zeros(size)
    cancellation = np.zeros(size)
    mass_error = np.zeros(size)
    for e in entries:
        sqrt_row[e.d] = e.value
        probs[e.d] = e.probability
        cancellation[e.d] = e.cancellation
        mass_error[e.d] = e.mass_error

    tail = max(0.0, 1.0 - math.fsum(probs)) if len(entries) < size else 0.0
    return GramSpectrum(
        n=n,
        k=k,
        lambda_by_weight=_readonly(lambdas),
        sqrtG_by_distance=_readonly(sqrt_row),
        probs=_readonly(probs),
        cancellation_estimate=_readonly(cancellation),
        mass_error=_readonly(mass_error),
        flagged=any(e.flagged for e in entries),
        tail_mass=tail,
        exact_distances=tuple(e.d for e in entries if e.exact),
    )


@dataclass(frozen=True, eq=False)
class BruteForceSpectrum:
    """Full ``2^n`` eigenvalue vector and ``sqrt(G)`` row, read back by weight."""

    n: int
    k: int
    eigenvalues: np.ndarray
    sqrt_row: np.ndarray

    @property
    def lambda_by_weight(self) -> np.ndarray:
        return self.eigenvalues[[(1 << w) - 1 for w in range(self.n + 1)]]

    @property
    def sqrtG_by_distance(self) -> np.ndarray:
        return self.sqrt_row[[(1 << d) - 1 for d in range(self.n + 1)]]

    @property
    def expected_distance(self) -> float:
        weights = hamming_weights(self.n)
        return float(np.dot(weights, self.sqrt_row**2))


def brute_force_spectrum(n: int, k: int) -> BruteForceSpectrum:
    """Diagonalises the Gram matrix by a full Walsh-Hadamard transform.

    Args:
        n (int): Length of the hidden string, at most ``BRUTE_FORCE_MAX_N``.
        k (int): Subset size.

    Returns:
        BruteForceSpectrum: The oracle spectrum.

    Raises:
        ParameterError: If ``n`` exceeds the memory budget.
        InternalConsistencyError: If an eigenvalue is below ``-1e-9``.
    """
    _check_nk(n, k)
    if n > BRUTE_FORCE_MAX_N:
        raise ParameterError(
            "n", n, f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}"
        )

    row_by_weight = np.array([gram_entry(n, k, w) for w in range(n + 1)])
    eigenvalues = wht(row_by_weight[hamming_weights(n)])
    lowest = float(eigenvalues.min())
    if lowest < -NEGATIVE_EIGENVALUE_TOLERANCE:
        raise InternalConsistencyError(
            "gram positive semidefinite", f"eigenvalue {lowest:.3e} for n={n}, k={k}"
        )
    # eigenvalues above weight k vanish exactly; drop the transform noise
    eigenvalues = np.where(
        eigenvalues < NEGATIVE_EIGENVALUE_TOLERANCE, 0.0, eigenvalues
    )
    sqrt_row = wht(np.sqrt(eigenvalues)) / (1 << n)
    return BruteForceSpectrum(n, k, _readonly(eigenvalues), _readonly(sqrt_row))


def brute_force_pgm(n: int, k: int) -> np.ndarray:
    """Distance-indexed ``sqrt(G)`` row from the brute-force path."""
    return brute_force_spectrum(n, k).sqrtG_by_distance


def expected_distance_direct(
    n: int, k: int, precision_budget: float = DEFAULT_PRECISION_BUDGET
) -> float:
    """``D_k = sum_d d C(n,d) r_d^2`` from the distance-resolved entries."""
    return gram_spectrum(n, k, precision_budget).expected_distance


def expected_distance_plancherel(n: int, k: int) -> float:
    """``D_k`` from the weight-one Fourier coefficient of the outcome law.

    The coefficient is the self-convolution of the ``sqrt(lambda)`` spectrum,
    ``A = 2^(1-n) sum_{w<n} C(n-1, w) sqrt(lambda_w lambda_{w+1})``, and
    ``D_k = (n/2)(1 - A)``. Every term is nonnegative and is evaluated in
    log-space, so the route stays finite for large ``n``.
    """
    _check_nk(n, k)
    if n == 0 or k == n:
        return 0.0
    log_lambda = [log_eigenvalue(n, k, w) for w in range(n + 1)]
    logs = np.array(
        [
            (1 - n) * math.log(2)
            + math.log(math.comb(n - 1, w))
            + 0.5 * (log_lambda[w] + log_lambda[w + 1])
            for w in range(n)
            if log_lambda[w + 1] > -math.inf
        ]
    )
    if logs.size == 0:
        return n / 2
    top = float(logs.max())
    coefficient = math.exp(top) * math.fsum(np.exp(logs - top).tolist())
    return n / 2 * (1.0 - coefficient)


def success_probability(
    n: int, k: int, precision_budget: float = DEFAULT_PRECISION_BUDGET
) -> float:
    """Probability ``r_0^2`` that the measurement outputs ``x`` exactly."""
    return gram_spectrum(n, k, precision_budget).success_probability


def genlower_bound(n: int, k: int) -> float:
    """Lower bound ``C(n,k)^2 / sum_d C(n,d) C(n-d,k)^2`` on the success probability."""
    _check_nk(n, k)
    denominator = sum(math.comb(n, d) * math.comb(n - d, k) ** 2 for d in range(n + 1))
    return math.comb(n, k) ** 2 / denominator


def _deficit(n: int, k: int) -> float:
    if n < 1:
        raise ParameterError("n", n, "must be positive")
    _check_nk(n, k)
    return (n - k) / math.sqrt(n)


def upper_bound(n: int, k: int) -> float:
    """``4 exp(-a^2/32)`` with ``a = (n - k)/sqrt(n)``."""
    a = _deficit(n, k)
    return 4.0 * math.exp(-(a * a) / 32.0)


def lower_bound_constant(n: int, k: int) -> float:
    """The ``c`` for which ``genlower_bound = 1 - 2a^2 - c/sqrt(n)``."""
    a = _deficit(n, k)
    return math.sqrt(n) * (1.0 - 2.0 * a * a - genlower_bound(n, k))


def kexact_probability(n: int, k: int, d: int) -> float:
    """Squared entry summed over the Krawtchouk argument.

    ``2^-(n+k) C(n,d)^-2 (sum_z K_d(z) C(n,z)^1/2 C(k,z)^1/2)^2``

    Summing over the argument rather than the degree makes this an
    independent check of :func:`sqrt_gram_entry`; it is evaluated
    in floating point, so ``n`` is limited to 64.
    """
    _check_nk(n, k)
    _check_index("d", d, n)
    if n > FULL_DISTANCE_MAX_N:
        raise ParameterError("n", n, f"must be at most {FULL_DISTANCE_MAX_N}")
    total = math.fsum(
        krawtchouk_row(n, z, d)[d] * math.sqrt(math.comb(n, z) * math.comb(k, z))
        for z in range(k + 1)
    )
    return total * total / (2.0 ** (n + k) * math.comb(n, d) ** 2)


def spectrum_errors(
    spectrum: GramSpectrum, oracle: Optional[BruteForceSpectrum] = None
) -> dict:
    """Largest deviations of ``spectrum`` from the brute-force oracle."""
    oracle = oracle or brute_force_spectrum(spectrum.n, spectrum.k)
    return {
        "sqrtG_max_abs_error": float(
            np.max(np.abs(spectrum.sqrtG_by_distance - oracle.sqrtG_by_distance))
        ),
        "lambda_max_abs_error": float(
            np.max(np.abs(spectrum.lambda_by_weight - oracle.lambda_by_weight))
        ),
    }
