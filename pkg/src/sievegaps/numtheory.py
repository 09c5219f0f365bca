"""Primes, factorizations, totients and the closed-form products used by the
asymptotic ratio results.

All moduli handled by this package are products of small primes, so
factorization is plain trial division.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from .errors import DomainError

# Exact rationals are stdlib Fractions: always reduced, denominator > 0.
ExactRational = Fraction


def primes_up_to(bound: int) -> list[int]:
    """Return the primes ``<= bound`` in ascending order."""
    if bound < 2:
        raise DomainError(f"empty range: no primes <= {bound}")
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(bound) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).tolist()


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=4096)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n < 41 * 41:
        return True
    # Miller-Rabin with these bases is deterministic far beyond 2**64
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(p: int) -> int:
    """Smallest prime strictly greater than ``p``."""
    n = max(p + 1, 2)
    while not is_prime(n):
        n += 1
    return n


def previous_prime(p: int) -> int | None:
    n = p - 1
    while n >= 2:
        if is_prime(n):
            return n
        n -= 1
    return None


def require_prime(p: int, what: str = "value") -> int:
    if not isinstance(p, (int, np.integer)) or not is_prime(int(p)):
        raise DomainError(f"{what} must be prime, got {p!r}")
    return int(p)


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer together with its canonical factorization."""

    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.value < 1:
            raise DomainError(f"factored integers are positive, got {self.value}")
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1 or not is_prime(p):
                raise DomainError(f"bad factorization {self.factors!r}")
            prod *= p**e
            last = p
        if prod != self.value:
            raise DomainError(f"factors {self.factors!r} do not multiply to {self.value}")

    @classmethod
    def from_factors(cls, factors: Iterable[tuple[int, int]]) -> "FactoredInteger":
        merged: dict[int, int] = {}
        for p, e in factors:
            merged[int(p)] = merged.get(int(p), 0) + int(e)
        pairs = tuple(sorted((p, e) for p, e in merged.items() if e))
        return cls(math.prod(p**e for p, e in pairs), pairs)

    def times(self, q: int) -> "FactoredInteger":
        """The factored product ``q * self`` for a prime ``q``."""
        require_prime(q, "multiplier")
        return FactoredInteger.from_factors(self.factors + ((q, 1),))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def largest_prime(self) -> int | None:
        return self.factors[-1][0] if self.factors else None

    def __contains__(self, p: int) -> bool:
        return p in self.primes

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        return "*".join(f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors)


IntLike = Union[int, FactoredInteger]


def factorize(n: int) -> FactoredInteger:
    if n < 1:
        raise DomainError(f"cannot factor {n}")
    pairs = []
    rest = n
    if rest > 3:
        for p in primes_up_to(max(2, math.isqrt(rest))):
            if p * p > rest:
                break
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            if e:
                pairs.append((p, e))
    if rest > 1:
        pairs.append((rest, 1))
    return FactoredInteger(n, tuple(pairs))


def _as_factored(n: IntLike) -> FactoredInteger:
    return n if isinstance(n, FactoredInteger) else factorize(int(n))


def radical(n: IntLike) -> int:
    """Product of the distinct primes dividing ``n``."""
    return math.prod(_as_factored(n).primes)


def euler_phi(n: IntLike) -> int:
    return math.prod(p ** (e - 1) * (p - 1) for p, e in _as_factored(n).factors)


def primorial(p: int) -> FactoredInteger:
    """``p#`` as a factored integer (``p`` itself need not be prime)."""
    return FactoredInteger.from_factors((q, 1) for q in primes_up_to(p))


def twin_gap_count(p: int) -> int:
    """Number of gaps equal to 2 in the cycle for ``p#``: prod of (q-2), 2 < q <= p."""
    return math.prod(q - 2 for q in primes_up_to(p) if q > 2)


def odd_prime_factors(g: int) -> tuple[int, ...]:
    return tuple(q for q in factorize(g).primes if q > 2)


def _require_even(g: int) -> None:
    if g < 2 or g % 2:
        raise DomainError(f"gap must be a positive even integer, got {g}")


def hl_ratio(g: int) -> Fraction:
    """Limiting ratio of gaps ``g`` to gaps 2: prod of (q-1)/(q-2) over odd primes q | g."""
    _require_even(g)
    r = Fraction(1)
    for q in odd_prime_factors(g):
        r *= Fraction(q - 1, q - 2)
    return r


def convergence_factor(p_from: int, p_to: int) -> Fraction:
    """Partial product of (q-3)/(q-2) over the primes q in ``[p_from, p_to]``."""
    if p_from <= 3:
        raise DomainError(f"p_from must exceed 3, got {p_from}")
    if p_to < p_from:
        raise DomainError(f"empty prime range [{p_from}, {p_to}]")
    r = Fraction(1)
    for q in primes_up_to(p_to):
        if q >= p_from:
            r *= Fraction(q - 3, q - 2)
    return r


def format_decimal(x: Fraction, places: int = 4) -> str:
    """Fixed-point rendering of an exact rational, rounded half-to-even."""
    scaled = round(Fraction(x) * 10**places)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10**places)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"
