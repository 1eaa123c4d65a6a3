"""Local cotype zeta factors, coefficient extraction, corank densities, and
tail-bounded Euler products.

The local factor of the cotype zeta function of Z^d at a prime p is the rational
function  sum_lambda w(d,lambda)(p^-1) prod_{j in lambda} t_j  over
(1-t_1)...(1-t_d),  in the variables t_j = p^(-z_j) with
z_j = s_1 + ... + s_j - j(d-j). Everything identity-shaped is evaluated in exact
rational arithmetic; Euler products over primes are accumulated at 113-bit
precision with explicit tail bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from mpmath import mp, mpf

from .errors import CapExceededError, DomainError, NotWeaklyDecreasingError
from .groups import Partition, ambient_subgroup_count, partitions_of
from .primes import primes_upto
from .qcomb import (
    IntPolynomial,
    ONE,
    ZERO,
    all_descent_sets,
    descent_poly_inclusion_exclusion,
    q_binomial,
)

# The numerator of the local factor has 2^(d-1) terms.
DEFAULT_LOCAL_FACTOR_CAP = 12
# Working precision (bits) for Euler-product accumulation.
_EULER_PREC = 113
# Negligible-term threshold matching that precision.
_EPS_SHIFT = 130


@dataclass(frozen=True)
class LocalFactor:
    """Exact local factor of the cotype zeta function of Z^d.

    numerator maps each subset of {1,...,d-1} to its coefficient in Z[q]; the
    denominator is the formal product (1-t_1)...(1-t_d).
    """

    d: int
    numerator: tuple[tuple[tuple[int, ...], IntPolynomial], ...]

    def coefficient(self, subset) -> IntPolynomial:
        key = tuple(sorted(subset))
        for s, poly in self.numerator:
            if s == key:
                return poly
        return ZERO

    def canonical_str(self) -> str:
        terms = []
        for subset, poly in sorted(self.numerator, key=lambda kv: (len(kv[0]), kv[0])):
            tmon = "*".join(f"t{j}" for j in subset)
            s = str(poly)
            if not subset:
                terms.append(s)
            elif poly == ONE:
                terms.append(tmon)
            elif " " in s or s.startswith("-"):
                terms.append(f"({s})*{tmon}")
            else:
                terms.append(f"{s}*{tmon}")
        num = " + ".join(terms)
        den = "".join(f"(1-t{i})" for i in range(1, self.d + 1))
        num_str = num if len(terms) == 1 else f"({num})"
        den_str = den if self.d == 1 else f"({den})"
        return f"{num_str} / {den_str}"


@lru_cache(maxsize=None)
def local_factor(d: int, cap: int = DEFAULT_LOCAL_FACTOR_CAP) -> LocalFactor:
    """Exact symbolic local factor for Z^d; numerator coefficients are the
    descent polynomials."""
    if d < 1:
        raise DomainError("d must be positive")
    if d > cap:
        raise CapExceededError(f"local factor for d={d} has 2^{d-1} terms; cap is {cap}")
    numer = tuple(
        (tuple(sorted(lam.elements)), descent_poly_inclusion_exclusion(lam))
        for lam in all_descent_sets(d)
    )
    return LocalFactor(d=d, numerator=numer)


def _validate_exponents(d: int, nu) -> tuple[int, ...]:
    nu = tuple(int(v) for v in nu)
    if len(nu) != d:
        raise DomainError(f"expected {d} exponents, got {len(nu)}")
    if any(v < 0 for v in nu):
        raise NotWeaklyDecreasingError("exponents must be nonnegative")
    if any(nu[i] < nu[i + 1] for i in range(d - 1)):
        raise NotWeaklyDecreasingError(f"exponents must be weakly decreasing: {nu}")
    return nu


def local_coefficient(d: int, p: int, nu) -> int:
    """Number of sublattices of Z^d whose cotype at p is (p^nu_1,...,p^nu_d).

    Evaluated by the conjugate-exponent product formula (equivalently: the number
    of subgroups of (Z/p^nu_1)^d isomorphic to the group of type nu).
    """
    nu = _validate_exponents(d, nu)
    return ambient_subgroup_count(d, Partition.of(nu), p)


def series_coefficient(d: int, p: int, nu) -> int:
    """The same coefficient extracted from the power-series expansion of the
    symbolic local factor: geometric expansion of every 1/(1-t_j) turns the
    coefficient of the monomial determined by nu into a sum of descent
    polynomials, evaluated exactly at q = 1/p and rescaled by the change of
    variables t_j = p^(-z_j)."""
    nu = _validate_exponents(d, nu)
    lf = local_factor(d)
    steps = [nu[j] - (nu[j + 1] if j + 1 < d else 0) for j in range(d)]
    support = {j + 1 for j, c in enumerate(steps) if c > 0}
    inner = support - {d}
    acc = ZERO
    for subset, poly in lf.numerator:
        if set(subset) <= inner:
            acc = acc + poly
    shift = sum(c * (j + 1) * (d - (j + 1)) for j, c in enumerate(steps))
    value = Fraction(acc(Fraction(1, p))) * Fraction(p) ** shift
    if value.denominator != 1:
        raise ArithmeticError("series coefficient was not an integer")
    return value.numerator


@lru_cache(maxsize=None)
def _prime_power_coefficient(d: int, p: int, e: int) -> int:
    return sum(
        ambient_subgroup_count(d, Partition.of(parts), p)
        for parts in partitions_of(e, max_parts=d)
    )


def dirichlet_coefficient(d: int, n: int) -> int:
    """Number of index-n sublattices of Z^d, multiplicatively over n's primes."""
    if d < 1 or n < 1:
        raise DomainError("need d >= 1 and n >= 1")
    out = 1
    m = n
    f = 2
    while f * f <= m:
        if m % f == 0:
            e = 0
            while m % f == 0:
                m //= f
                e += 1
            out *= _prime_power_coefficient(d, f, e)
        f += 1
    if m > 1:
        out *= _prime_power_coefficient(d, m, 1)
    return out


def dirichlet_coefficients_upto(d: int, N: int) -> list[int]:
    """Coefficients of zeta(s) zeta(s-1) ... zeta(s-(d-1)) for 1 <= n < N,
    by sieve convolution of the sequences n^0, n^1, ..., n^(d-1).

    Returns a list a of length N with a[0] = 0; independent of both the
    enumeration and the q-binomial formulas, so it can referee between them.
    """
    if d < 1 or N < 1:
        raise DomainError("need d >= 1 and N >= 1")
    a = [0] + [1] * (N - 1)
    for j in range(1, d):
        b = [0] * N
        for n in range(1, N):
            an = a[n]
            if an:
                for m in range(n, N, n):
                    b[m] += an * (m // n) ** j
        a = b
    return a


# ---------------------------------------------------------------------------
# Corank densities and residues (exact local values)
# ---------------------------------------------------------------------------


def corank_local_factor_at_pole(d: int, m: int, p: int) -> Fraction:
    """Exact p-local value of the corank-<=m counting residue at its pole:

    (1 - p^-1) * sum_{i=0}^{m} [d choose i]_q q^(i^2) / prod_{j=1}^{i} (1-q^j)
    with q = 1/p.
    """
    if not 1 <= m <= d:
        raise DomainError(f"need 1 <= m <= d, got m={m}, d={d}")
    q = Fraction(1, p)
    total = Fraction(0)
    poch = Fraction(1)
    for i in range(m + 1):
        if i:
            poch *= 1 - q**i
        total += Fraction(q_binomial(d, i)(q)) * q ** (i * i) / poch
    return (1 - q) * total


def _unit_pochhammer(p: int, n: int) -> Fraction:
    """prod_{j=1}^{n} (1 - p^-j); empty product for n <= 0."""
    out = Fraction(1)
    for j in range(1, n + 1):
        out *= 1 - Fraction(1, p**j)
    return out


def cokernel_rank_density_local(d: int, p: int, m: int) -> Fraction:
    """Exact p-local probability that the cokernel of a random d x d integer
    matrix has rank at most m (entries uniform in [-k,k], limit k -> infinity):

    A(d) * sum_{i=0}^{m} p^(-i^2) A(d) / (A(i)^2 A(d-i)),  A(n) = prod (1-p^-j).
    """
    if not 0 <= m <= d:
        raise DomainError(f"need 0 <= m <= d, got m={m}, d={d}")
    ad = _unit_pochhammer(p, d)
    total = Fraction(0)
    for i in range(m + 1):
        total += (
            Fraction(1, p ** (i * i))
            * ad
            / (_unit_pochhammer(p, i) ** 2 * _unit_pochhammer(p, d - i))
        )
    return ad * total


def corank_density_local(d: int, m: int, p: int) -> Fraction:
    """Exact p-factor of the corank-<=m density:
    prod_{j=1}^{d}(1-p^-j) * sum_{i=0}^{m} [d choose i]_q q^(i^2)/prod(1-q^j)."""
    if not 1 <= m <= d:
        raise DomainError(f"need 1 <= m <= d, got m={m}, d={d}")
    q = Fraction(1, p)
    total = Fraction(0)
    poch = Fraction(1)
    for i in range(m + 1):
        if i:
            poch *= 1 - q**i
        total += Fraction(q_binomial(d, i)(q)) * q ** (i * i) / poch
    return _unit_pochhammer(p, d) * total


# ---------------------------------------------------------------------------
# Euler products with tail bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerProductValue:
    """A truncated product over primes p <= prime_cutoff.

    The interval [value - tail_bound, value + tail_bound] contains the full
    infinite product; the bound comes from a per-formula constant C and exponent
    e with |local(p) - 1| <= C p^-e for all p, so the missing log mass is at most
    2 C cutoff^(1-e) / (e-1).
    """

    value: float
    prime_cutoff: int
    tail_bound: float

    def to_json_dict(self, exact_rational: str | None = None) -> dict:
        out = {
            "value": self.value,
            "prime_cutoff": self.prime_cutoff,
            "tail_bound": self.tail_bound,
        }
        if exact_rational is not None:
            out["exact_rational"] = exact_rational
        return out


def _euler_product(local_fn, cutoff: int, tail_c: float, tail_e: int,
                   extra_log_tail: float = 0.0) -> EulerProductValue:
    if cutoff < 2:
        raise DomainError("prime cutoff must be at least 2")
    with mp.workprec(_EULER_PREC):
        acc = mpf(1)
        for p in primes_upto(cutoff):
            acc *= local_fn(p)
        value = float(acc)
    log_tail = 2.0 * tail_c * cutoff ** (1 - tail_e) / (tail_e - 1) + extra_log_tail
    return EulerProductValue(value, cutoff, abs(value) * math.expm1(log_tail))


def _mpf_pochhammer(q: mpf, n: int, eps: mpf) -> mpf:
    """prod_{j=1}^{n} (1 - q^j), dropping factors once q^j is below eps."""
    acc = mpf(1)
    term = q
    for _ in range(n):
        acc *= 1 - term
        term *= q
        if term < eps:
            break
    return acc


def _mpf_qbinom(d: int, i: int, q: mpf) -> mpf:
    """Gaussian binomial [d choose i] at 0 < q < 1."""
    num = mpf(1)
    den = mpf(1)
    for j in range(1, i + 1):
        num *= 1 - q ** (d - i + j)
        den *= 1 - q**j
    return num / den


def _corank_sum(d: int, m: int, q: mpf, eps: mpf) -> mpf:
    total = mpf(1)
    poch = mpf(1)
    for i in range(1, m + 1):
        qi2 = q ** (i * i)
        if qi2 < eps:
            break
        poch *= 1 - q**i
        total += _mpf_qbinom(d, i, q) * qi2 / poch
    return total


def corank_zeta_residue(d: int, m: int, prime_cutoff: int) -> EulerProductValue:
    """Residue of the Dirichlet series counting corank-<=m sublattices at its
    rightmost pole s = d, as a truncated Euler product.

    Tail constant: each local factor is 1 + c_p with 0 <= c_p <= 6 p^-2
    (c_p = q^2(1-q^(d-1))/(1-q) + higher Durfee-square terms, q = 1/p).
    """
    if not 1 <= m <= d:
        raise DomainError(f"need 1 <= m <= d, got m={m}, d={d}")
    eps = mpf(2) ** (-_EPS_SHIFT)

    def local(p: int) -> mpf:
        q = mpf(1) / p
        return (1 - q) * _corank_sum(d, m, q, eps)

    return _euler_product(local, prime_cutoff, tail_c=6.0, tail_e=2)


def corank_density(d: int, m: int, prime_cutoff: int) -> EulerProductValue:
    """Limiting proportion of sublattices of Z^d with corank at most m.

    Tail constant: |local(p) - 1| <= 15 p^(-(m+1)^2), since the defect is the
    p-local probability of corank exceeding m.
    """
    if not 1 <= m <= d:
        raise DomainError(f"need 1 <= m <= d, got m={m}, d={d}")
    eps = mpf(2) ** (-_EPS_SHIFT)

    def local(p: int) -> mpf:
        q = mpf(1) / p
        return _mpf_pochhammer(q, d, eps) * _corank_sum(d, m, q, eps)

    return _euler_product(local, prime_cutoff, tail_c=15.0, tail_e=(m + 1) ** 2)


def cocyclic_growth_constant(d: int, prime_cutoff: int) -> EulerProductValue:
    """The constant theta with  #cocyclic sublattices of index < X  ~ theta X^d / d:

    prod_p (1 + (p^(d-1) - 1) / (p^(d+1) - p^d)).

    Tail constant: 0 <= c_p <= 1/(p(p-1)) <= 2 p^-2.
    """
    if d < 2:
        raise DomainError("the cocyclic growth constant needs d >= 2")

    def local(p: int) -> mpf:
        return 1 + mpf(p ** (d - 1) - 1) / (p ** (d + 1) - p**d)

    return _euler_product(local, prime_cutoff, tail_c=2.0, tail_e=2)


def squarefree_index_density(
    prime_cutoff: int, inner_truncation: int = 64
) -> EulerProductValue:
    """Limiting probability (large d) that a random sublattice has squarefree
    index: prod_p prod_{j=2}^inf (1 - p^-j).

    Tail constant: |local(p) - 1| <= 2 p^-2. The inner products are truncated at
    j = inner_truncation, which adds at most 4 * 2^-(B+1) to the log tail.
    """
    eps = mpf(2) ** (-_EPS_SHIFT)

    def local(p: int) -> mpf:
        q = mpf(1) / p
        acc = mpf(1)
        term = q * q
        for _ in range(2, inner_truncation + 1):
            acc *= 1 - term
            term *= q
            if term < eps:
                break
        return acc

    inner_tail = 4.0 * 2.0 ** (-(inner_truncation + 1))
    return _euler_product(local, prime_cutoff, tail_c=2.0, tail_e=2,
                          extra_log_tail=inner_tail)
