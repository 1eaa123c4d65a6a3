"""Prime sieving helpers."""

from functools import lru_cache


@lru_cache(maxsize=8)
def primes_upto(n: int) -> tuple[int, ...]:
    """All primes p <= n, by a byte sieve."""
    if n < 2:
        return ()
    sieve = bytearray(b"\x01") * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            start = p * p
            sieve[start : n + 1 : p] = b"\x00" * ((n - start) // p + 1)
    return tuple(i for i, v in enumerate(sieve) if v)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True
