"""
Exact and log-space combinatorial kernels.

Bit-strings over ``{0,1}^n``, binomial coefficients, Krawtchouk polynomials
and the Walsh-Hadamard transform over ``Z_2^n``. Everything here is pure and
every value is immutable after construction.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .exceptions import InternalConsistencyError, ParameterError

# Binomials up to this n come from the exact integer, larger ones from lgamma.
EXACT_BINOM_LIMIT = 64


@dataclass(frozen=True)
class BitString:
    """A fixed-length binary word.

    Bit ``i`` of ``bits`` holds position ``i`` of the word (0-indexed), so the
    string form ``"1010"`` has ones at positions 0 and 2.

    Attributes:
        length (int): Number of positions ``n``.
        bits (int): Packed word; no bit at or beyond ``length`` may be set.
    """

    length: int
    bits: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ParameterError("length", self.length, "must be nonnegative")
        if self.bits < 0 or self.bits >> self.length:
            raise ParameterError(
                "bits", self.bits, f"has bits set beyond position {self.length}"
            )

    # Construction

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls(n, (1 << n) - 1)

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        """Parses a word such as ``"1010"``; the first character is position 0."""
        if any(ch not in "01" for ch in text):
            raise ParameterError("text", text, "must contain only '0' and '1'")
        bits = 0
        for i, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << i
        return cls(len(text), bits)

    @classmethod
    def from_bits(cls, values: Iterable[int]) -> "BitString":
        return cls.from_array(np.fromiter((int(v) for v in values), dtype=np.uint8))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "BitString":
        """Packs a 0/1 numpy vector."""
        array = np.asarray(array)
        if array.ndim != 1:
            raise ParameterError("array", array.shape, "must be one-dimensional")
        packed = np.packbits(array.astype(bool), bitorder="little")
        return cls(int(array.shape[0]), int.from_bytes(packed.tobytes(), "little"))

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "BitString":
        """Builds the indicator word of ``indices`` inside ``[0, n)``."""
        idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ParameterError("indices", idx.tolist(), f"must lie in [0, {n})")
        array = np.zeros(n, dtype=np.uint8)
        array[idx] = 1
        return cls.from_array(array)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitString":
        return cls.from_array(rng.integers(0, 2, size=n, dtype=np.uint8))

    @classmethod
    def random_with_weight(
        cls, n: int, weight: int, rng: np.random.Generator
    ) -> "BitString":
        """Draws a uniformly random word of Hamming weight ``weight``."""
        if not 0 <= weight <= n:
            raise ParameterError("weight", weight, f"must lie in [0, {n}]")
        return cls.from_indices(n, rng.choice(n, size=weight, replace=False))

    # Inspection

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(f"position {index} outside [0, {self.length})")
        return (self.bits >> index) & 1

    def to_array(self) -> np.ndarray:
        """Unpacks to a ``uint8`` vector of length ``n``."""
        raw = self.bits.to_bytes((self.length + 7) // 8, "little")
        unpacked = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return unpacked[: self.length]

    def support(self) -> List[int]:
        """Positions holding a one, in increasing order."""
        return np.flatnonzero(self.to_array()).tolist()

    def distance(self, other: "BitString") -> int:
        self._check_same_length(other)
        return (self.bits ^ other.bits).bit_count()

    def restrict(self, indices: Sequence[int]) -> "BitString":
        """Returns ``x_S``: the bits at ``indices``, repacked in the given order."""
        bits = 0
        for j, i in enumerate(indices):
            bits |= self[i] << j
        return BitString(len(indices), bits)

    def flip(self, indices: Iterable[int]) -> "BitString":
        return self ^ BitString.from_indices(self.length, indices)

    # Word algebra

    def _check_same_length(self, other: "BitString"):
        if self.length != other.length:
            raise ParameterError(
                "length", other.length, f"does not match word length {self.length}"
            )

    def __xor__(self, other: "BitString") -> "BitString":
        self._check_same_length(other)
        return BitString(self.length, self.bits ^ other.bits)

    def __and__(self, other: "BitString") -> "BitString":
        self._check_same_length(other)
        return BitString(self.length, self.bits & other.bits)

    def __or__(self, other: "BitString") -> "BitString":
        self._check_same_length(other)
        return BitString(self.length, self.bits | other.bits)

    def __invert__(self) -> "BitString":
        return BitString(self.length, self.bits ^ ((1 << self.length) - 1))

    def __str__(self) -> str:
        return "".join(str((self.bits >> i) & 1) for i in range(self.length))


@dataclass(frozen=True)
class LogReal:
    """A real number stored as a sign and the natural log of its magnitude.

    Attributes:
        sign (int): -1, 0 or +1. Zero exactly when the value is zero.
        log_abs (float): ``log|value|``; ``-inf`` for zero.
    """

    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ParameterError("sign", self.sign, "must be -1, 0 or +1")
        if (self.sign == 0) != (self.log_abs == -math.inf):
            raise ParameterError("log_abs", self.log_abs, "must be -inf iff sign is 0")

    @classmethod
    def zero(cls) -> "LogReal":
        return cls(0, -math.inf)

    @classmethod
    def from_float(cls, value: float) -> "LogReal":
        if value == 0:
            return cls.zero()
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def from_int(cls, value: int) -> "LogReal":
        """Exact for any big integer: ``math.log`` accepts arbitrary ints."""
        if value == 0:
            return cls.zero()
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @property
    def value(self) -> float:
        """Converts back to a float (may overflow to ``inf``)."""
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_abs)
        except OverflowError:
            return self.sign * math.inf

    def __mul__(self, other: "LogReal") -> "LogReal":
        if self.sign == 0 or other.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.log_abs - other.log_abs)

    def sqrt(self) -> "LogReal":
        if self.sign < 0:
            raise ParameterError("value", self.value, "square root of a negative")
        if self.sign == 0:
            return LogReal.zero()
        return LogReal(1, 0.5 * self.log_abs)


def binom_exact(n: int, k: int) -> int:
    """Exact ``C(n, k)`` as a Python integer; 0 outside ``0 <= k <= n``."""
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


def binom_log(n: int, k: int) -> LogReal:
    """``C(n, k)`` through log-gamma, for any size of ``n``."""
    if k < 0 or n < 0 or k > n:
        return LogReal.zero()
    return LogReal(1, math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def binom(n: int, k: int) -> LogReal:
    """Binomial coefficient in log-space.

    Uses the exact big-integer value for ``n <= EXACT_BINOM_LIMIT`` and the
    log-gamma path beyond it. Total: returns zero when ``k > n`` or ``k < 0``.

    Args:
        n (int): Upper index.
        k (int): Lower index.

    Returns:
        LogReal: ``C(n, k)``.
    """
    if n <= EXACT_BINOM_LIMIT:
        return LogReal.from_int(binom_exact(n, k))
    return binom_log(n, k)


def _check_krawtchouk_domain(n: int, k: int, x: int):
    if n < 0:
        raise ParameterError("n", n, "must be nonnegative")
    if not 0 <= k <= n:
        raise ParameterError("k", k, f"must lie in [0, {n}]")
    if not 0 <= x <= n:
        raise ParameterError("x", x, f"must lie in [0, {n}]")


def krawtchouk_row(n: int, x: int, k_max: int) -> List[int]:
    """All of ``K_0^n(x), ..., K_{k_max}^n(x)`` by the three-term recurrence.

    ``(k+1) K_{k+1}(x) = (n - 2x) K_k(x) - (n - k + 1) K_{k-1}(x)``, seeded
    with ``K_0 = 1`` and ``K_1 = n - 2x``. Every division is exact.
    """
    _check_krawtchouk_domain(n, k_max, x)
    row = [1]
    if k_max >= 1:
        row.append(n - 2 * x)
    for k in range(1, k_max):
        quotient, remainder = divmod(
            (n - 2 * x) * row[k] - (n - k + 1) * row[k - 1], k + 1
        )
        if remainder:
            raise InternalConsistencyError(
                "krawtchouk recurrence", f"inexact division at n={n}, k={k}, x={x}"
            )
        row.append(quotient)
    return row


def krawtchouk(n: int, k: int, x: int) -> int:
    """The Krawtchouk polynomial ``K_k^n(x)`` as an exact integer.

    Args:
        n (int): Length of the binary Hamming scheme.
        k (int): Degree, ``0 <= k <= n``.
        x (int): Argument, ``0 <= x <= n``.

    Returns:
        int: ``sum_i (-1)^i C(x, i) C(n - x, k - i)``.

    Raises:
        ParameterError: If ``k`` or ``x`` is outside ``[0, n]``.
    """
    _check_krawtchouk_domain(n, k, x)
    return krawtchouk_row(n, x, k)[k]


def krawtchouk_direct(n: int, k: int, x: int) -> int:
    """The defining alternating sum, used to cross-check the recurrence."""
    _check_krawtchouk_domain(n, k, x)
    return sum(
        (-1) ** i * math.comb(x, i) * math.comb(n - x, k - i) for i in range(k + 1)
    )


@dataclass(frozen=True)
class KrawtchoukTable:
    """Every ``K_k^n(x)`` for ``0 <= k, x <= n``, indexed ``values[k][x]``."""

    n: int
    values: Tuple[Tuple[int, ...], ...]

    def __call__(self, k: int, x: int) -> int:
        _check_krawtchouk_domain(self.n, k, x)
        return self.values[k][x]


@lru_cache(maxsize=32)
def krawtchouk_table(n: int) -> KrawtchoukTable:
    columns = [krawtchouk_row(n, x, n) for x in range(n + 1)]
    return KrawtchoukTable(
        n, tuple(tuple(columns[x][k] for x in range(n + 1)) for k in range(n + 1))
    )


def wht(v: Sequence[float]) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform over ``Z_2^n``.

    Returns ``w(s) = sum_x (-1)^{s.x} v(x)``; the butterfly runs in place on
    a float copy of ``v`` in ``O(n 2^n)`` operations. Callers apply any
    ``1/2^n`` factor themselves.

    Args:
        v (Sequence[float]): Vector whose length is a power of two.

    Returns:
        np.ndarray: The transformed vector.

    Raises:
        ParameterError: If the length is not a power of two.
    """
    a = np.array(v, dtype=float)
    if a.ndim != 1:
        raise ParameterError("v", a.shape, "must be one-dimensional")
    size = a.shape[0]
    if size == 0 or size & (size - 1):
        raise ParameterError("len(v)", size, "must be a power of two")
    h = 1
    while h < size:
        blocks = a.reshape(-1, 2, h)
        upper = blocks[:, 0, :].copy()
        blocks[:, 0, :] += blocks[:, 1, :]
        blocks[:, 1, :] = upper - blocks[:, 1, :]
        h *= 2
    return a


def hamming_weights(n: int) -> np.ndarray:
    """Vector of ``|x|`` for ``x = 0 .. 2^n - 1``."""
    index = np.arange(1 << n, dtype=np.int64)
    weights = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        weights += (index >> b) & 1
    return weights
