"""Shared independent oracles for the test suite."""

import itertools
from math import gcd, prod


def det_by_permutations(rows) -> int:
    """Leibniz-expansion determinant (fine for k <= 4)."""
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        total += sign * prod(rows[i][perm[i]] for i in range(n))
    return total


def snf_oracle(rows):
    """Determinantal-divisor oracle: s_k = d_k / d_{k-1}, d_k = gcd of k-minors.

    Returns (invariant factors, free rank).
    """
    n = len(rows)
    dets = [1]
    for k in range(1, n + 1):
        g = 0
        for rsel in itertools.combinations(range(n), k):
            for csel in itertools.combinations(range(n), k):
                sub = [[rows[i][j] for j in csel] for i in rsel]
                g = gcd(g, det_by_permutations(sub))
        dets.append(g)
    invariants = []
    for k in range(1, n + 1):
        if dets[k] == 0:
            break
        invariants.append(dets[k] // dets[k - 1])
    return tuple(invariants), n - len(invariants)


def rank_mod_p(rows, p: int) -> int:
    """Row-reduction rank of an integer matrix over F_p."""
    m = [[v % p for v in row] for row in rows]
    n = len(m)
    rank = 0
    col = 0
    width = len(m[0]) if m else 0
    while rank < n and col < width:
        piv = next((i for i in range(rank, n) if m[i][col]), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][col], -1, p)
        m[rank] = [(v * inv) % p for v in m[rank]]
        for i in range(n):
            if i != rank and m[i][col]:
                f = m[i][col]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank
