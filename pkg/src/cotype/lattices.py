"""Ground-truth sublattice enumeration for Z^d.

Finite-index sublattices are enumerated through their Hermite-basis matrices
(upper triangular, column-style, off-diagonal entries reduced modulo the row's
diagonal), classified by Smith invariant factors, and tallied by cotype. All
arithmetic is exact. These routines are deliberately independent of the
q-binomial machinery in `cotype.zeta`, so the two sides can check each other.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, prod
from typing import Iterable, Iterator

from .errors import DomainError, ResourceLimitError

# Cap on how many matrices an enumeration call may visit.
DEFAULT_ENUM_CAP = 10**8
# Cap on brute-force generating-tuple searches (candidate tuples examined).
DEFAULT_TUPLE_CAP = 2**22


@dataclass(frozen=True)
class HermiteBasis:
    """Column-style Hermite basis of a finite-index sublattice of Z^d.

    rows is a d x d upper-triangular integer matrix whose columns span the
    sublattice: diagonal entries positive, and every entry in row i (to the
    right of the diagonal) lies in [0, rows[i][i]).
    """

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        d = len(self.rows)
        rows = tuple(tuple(r) for r in self.rows)
        if any(len(r) != d for r in rows):
            raise DomainError("basis matrix must be square")
        for i, row in enumerate(rows):
            if row[i] <= 0:
                raise DomainError("diagonal entries must be positive")
            if any(row[j] != 0 for j in range(i)):
                raise DomainError("basis matrix must be upper triangular")
            if any(not 0 <= row[j] < row[i] for j in range(i + 1, d)):
                raise DomainError("off-diagonal entries must be reduced mod the row diagonal")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def index(self) -> int:
        """[Z^d : L] = product of the diagonal."""
        return prod(self.rows[i][i] for i in range(self.dim))

    def matrix(self) -> list[list[int]]:
        return [list(r) for r in self.rows]


@dataclass(frozen=True)
class Cotype:
    """The d-tuple (a_1,...,a_d) with a_{i+1} | a_i and Z^d/L = sum of Z/a_i."""

    alpha: tuple[int, ...]

    def __post_init__(self):
        alpha = tuple(int(a) for a in self.alpha)
        if not alpha or any(a < 1 for a in alpha):
            raise DomainError("cotype entries must be positive")
        for i in range(len(alpha) - 1):
            if alpha[i] % alpha[i + 1]:
                raise DomainError(f"cotype violates divisibility chain: {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def index(self) -> int:
        return prod(self.alpha)

    @property
    def corank(self) -> int:
        """Largest i with alpha_i != 1 (1-based); 0 for the full lattice."""
        for i in range(self.dim, 0, -1):
            if self.alpha[i - 1] != 1:
                return i
        return 0

    def p_part(self, p: int) -> tuple[int, ...]:
        """Partition of p-adic valuations of the entries (zeros dropped)."""
        vals = []
        for a in self.alpha:
            v = 0
            while a % p == 0:
                a //= p
                v += 1
            if v:
                vals.append(v)
        return tuple(vals)


@dataclass(frozen=True)
class SmithForm:
    """Invariant factors s_1 | s_2 | ... | s_r plus the free rank of the cokernel."""

    diag: tuple[int, ...]
    free_rank: int

    def __post_init__(self):
        diag = tuple(self.diag)
        if any(s <= 0 for s in diag):
            raise DomainError("invariant factors must be positive")
        for i in range(len(diag) - 1):
            if diag[i + 1] % diag[i]:
                raise DomainError(f"invariant factors violate divisibility: {diag}")
        object.__setattr__(self, "diag", diag)

    @property
    def rank(self) -> int:
        return len(self.diag)


def _smith_diagonal(m: list[list[int]]) -> tuple[list[int], int]:
    """In-place Smith reduction; returns (positive invariant factors, free rank)."""
    n = len(m)
    diag: list[int] = []
    for k in range(n):
        # Pick the smallest-magnitude nonzero entry of the trailing block as pivot.
        best = None
        pi = pj = -1
        for i in range(k, n):
            row = m[i]
            for j in range(k, n):
                v = row[j]
                if v:
                    a = v if v > 0 else -v
                    if best is None or a < best:
                        best, pi, pj = a, i, j
        if best is None:
            break
        if pi != k:
            m[k], m[pi] = m[pi], m[k]
        if pj != k:
            for row in m:
                row[k], row[pj] = row[pj], row[k]
        while True:
            if m[k][k] < 0:
                mk = m[k]
                for j in range(k, n):
                    mk[j] = -mk[j]
            changed = False
            pivot = m[k][k]
            for i in range(k + 1, n):
                v = m[i][k]
                if v:
                    q = v // pivot
                    if q:
                        rk, ri = m[k], m[i]
                        for j in range(k, n):
                            ri[j] -= q * rk[j]
                    if m[i][k]:
                        m[k], m[i] = m[i], m[k]
                        pivot = m[k][k]
                        changed = True
            if changed:
                continue
            for j in range(k + 1, n):
                v = m[k][j]
                if v:
                    q = v // pivot
                    if q:
                        for i in range(k, n):
                            m[i][j] -= q * m[i][k]
                    if m[k][j]:
                        for i in range(k, n):
                            m[i][k], m[i][j] = m[i][j], m[i][k]
                        pivot = m[k][k]
                        changed = True
            if not changed:
                break
        diag.append(m[k][k])
    free_rank = n - len(diag)
    # Repair the divisibility chain with gcd/lcm exchanges on diagonal pairs.
    changed = True
    while changed:
        changed = False
        for i in range(len(diag) - 1):
            a, b = diag[i], diag[i + 1]
            if b % a:
                g = gcd(a, b)
                diag[i], diag[i + 1] = g, a * b // g
                changed = True
    return diag, free_rank


def smith_normal_form(matrix: Iterable[Iterable[int]]) -> SmithForm:
    """Smith Normal Form invariants of a square integer matrix (any rank)."""
    m = [list(map(int, row)) for row in matrix]
    n = len(m)
    if any(len(row) != n for row in m):
        raise DomainError("smith_normal_form expects a square matrix")
    diag, free_rank = _smith_diagonal(m)
    return SmithForm(tuple(diag), free_rank)


def cotype_of(basis: HermiteBasis) -> Cotype:
    """Cotype of the sublattice: the Smith invariants, largest first."""
    sf = smith_normal_form(basis.rows)
    if sf.free_rank:
        raise DomainError("Hermite basis must have full rank")
    return Cotype(tuple(reversed(sf.diag)))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _divisors(n: int) -> tuple[int, ...]:
    small, large = [], []
    f = 1
    while f * f <= n:
        if n % f == 0:
            small.append(f)
            if f != n // f:
                large.append(n // f)
        f += 1
    return tuple(small + large[::-1])


def _ordered_factorizations(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """All tuples (a_1,...,a_d) of positive integers with product n."""
    if d == 1:
        yield (n,)
        return
    for a in _divisors(n):
        for rest in _ordered_factorizations(n // a, d - 1):
            yield (a,) + rest


def hnf_count(d: int, n: int) -> int:
    """Number of index-n sublattices of Z^d, summed over Hermite diagonals."""
    if d < 1 or n < 1:
        raise DomainError("need d >= 1 and n >= 1")
    return sum(
        prod(diag[i] ** (d - 1 - i) for i in range(d))
        for diag in _ordered_factorizations(n, d)
    )


def enumerate_hnf(
    d: int, n: int, max_matrices: int = DEFAULT_ENUM_CAP
) -> Iterator[HermiteBasis]:
    """Yield every index-n sublattice of Z^d exactly once, as a Hermite basis."""
    if d < 1 or n < 1:
        raise DomainError("need d >= 1 and n >= 1")
    total = hnf_count(d, n)
    if total > max_matrices:
        raise ResourceLimitError(
            f"enumeration of {total} matrices exceeds the cap of {max_matrices}"
        )
    for diag in _ordered_factorizations(n, d):
        positions = [(i, j) for i in range(d) for j in range(i + 1, d)]
        ranges = [range(diag[i]) for i, _ in positions]
        for combo in itertools.product(*ranges):
            rows = [[0] * d for _ in range(d)]
            for i in range(d):
                rows[i][i] = diag[i]
            for (i, j), v in zip(positions, combo):
                rows[i][j] = v
            yield HermiteBasis(tuple(tuple(r) for r in rows))


def _tally_index_enumerated(d: int, n: int, counts: dict[tuple[int, ...], int]) -> None:
    """Add the cotype tally of all index-n sublattices of Z^d into counts.

    Rows/columns with diagonal 1 are contracted away first: such a basis contains
    the standard vector e_i, so coordinate i contributes nothing to the quotient,
    and each free off-diagonal entry aimed at a deleted column multiplies the
    count without changing the cotype.
    """
    ones = (1,) * d
    for diag in _ordered_factorizations(n, d):
        kept = [i for i in range(d) if diag[i] > 1]
        c = len(kept)
        mult = 1
        for i in kept:
            dropped_after = sum(1 for j in range(i + 1, d) if diag[j] == 1)
            if dropped_after:
                mult *= diag[i] ** dropped_after
        if c == 0:
            counts[ones] = counts.get(ones, 0) + 1
            continue
        if c == 1:
            key = (diag[kept[0]],) + (1,) * (d - 1)
            counts[key] = counts.get(key, 0) + mult
            continue
        core_diag = [diag[i] for i in kept]
        positions = [(u, v) for u in range(c) for v in range(u + 1, c)]
        ranges = [range(core_diag[u]) for u, _ in positions]
        pad = (1,) * (d - c)
        for combo in itertools.product(*ranges):
            m = [[0] * c for _ in range(c)]
            for u in range(c):
                m[u][u] = core_diag[u]
            for (u, v), val in zip(positions, combo):
                m[u][v] = val
            inv, _ = _smith_diagonal(m)
            key = tuple(reversed(inv)) + pad
            counts[key] = counts.get(key, 0) + mult


def _tally_2d(X: int) -> dict[tuple[int, ...], int]:
    """Exact cotype tally for Z^2 over all indices < X via divisor pairs.

    For a basis [[a, b], [0, c]] the first invariant factor is gcd(a, b, c), so
    with g = gcd(a, c) the number of b in [0, a) with gcd(g, b) = t is
    (a/t) * phi(g/t) / (g/t). Runs in about X log X integer operations.
    """
    counts: dict[tuple[int, ...], int] = {}
    if X <= 1:
        return counts
    # gcd(a, c) <= min(a, c) <= sqrt(ac) < sqrt(X): small phi/divisor tables do.
    gmax = int((X - 1) ** 0.5) + 1
    phi = list(range(gmax + 1))
    for p in range(2, gmax + 1):
        if phi[p] == p:  # p prime
            for k in range(p, gmax + 1, p):
                phi[k] -= phi[k] // p
    for a in range(1, X):
        for c in range(1, (X - 1) // a + 1):
            n = a * c
            g = gcd(a, c)
            if g == 1:
                key = (n, 1)
                counts[key] = counts.get(key, 0) + a
                continue
            for t in _divisors(g):
                u = g // t
                cnt = (a // t) // u * phi[u]
                key = (n // t, t)
                counts[key] = counts.get(key, 0) + cnt
    return counts


@dataclass(frozen=True)
class CotypeTally:
    """Cotype counts of all sublattices of Z^d of index < X (strict bound)."""

    d: int
    X: int
    counts: dict[Cotype, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def count(self, alpha: Iterable[int]) -> int:
        return self.counts.get(Cotype(tuple(alpha)), 0)

    def n_with_corank_at_most(self, m: int) -> int:
        return sum(c for ct, c in self.counts.items() if ct.corank <= m)

    def rows(self) -> list[tuple[tuple[int, ...], int, int, int]]:
        """Sorted (alpha, corank, index, count) rows."""
        out = [(ct.alpha, ct.corank, ct.index, c) for ct, c in self.counts.items()]
        out.sort(key=lambda r: (r[2], r[0]))
        return out

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "X": self.X,
            "bound": "index < X",
            "total": self.total,
            "n_by_corank": {
                str(m): self.n_with_corank_at_most(m) for m in range(self.d + 1)
            },
            "rows": [
                {"alpha": list(alpha), "corank": crk, "index": idx, "count": c}
                for alpha, crk, idx, c in self.rows()
            ],
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# d={self.d} X={self.X} convention: index < X\n")
            writer = csv.writer(fh)
            writer.writerow(["alpha", "corank", "index", "count"])
            for alpha, crk, idx, c in self.rows():
                writer.writerow([".".join(map(str, alpha)), crk, idx, c])


def tally_cotypes_at_index(d: int, n: int) -> dict[tuple[int, ...], int]:
    """Exact map cotype-tuple -> count over sublattices of index exactly n."""
    if d < 1 or n < 1:
        raise DomainError("need d >= 1 and n >= 1")
    counts: dict[tuple[int, ...], int] = {}
    _tally_index_enumerated(d, n, counts)
    return counts


def tally_cotypes(
    d: int,
    X: int,
    method: str = "auto",
    max_matrices: int = DEFAULT_ENUM_CAP,
) -> CotypeTally:
    """Tally every sublattice of Z^d of index < X by cotype (exact).

    method: 'divisor' (d=2 only; gcd/phi counting), 'enumerate' (per-matrix with
    diagonal-1 contraction), 'full' (per-matrix, no contraction; cross-check
    oracle), or 'auto' (divisor for d=2, enumerate otherwise).
    """
    if d < 1 or X < 1:
        raise DomainError("need d >= 1 and X >= 1")
    if method == "auto":
        method = "divisor" if d == 2 else "enumerate"
    if method == "divisor" and d != 2:
        raise DomainError("the divisor-counting tally only applies to d = 2")
    if method not in ("divisor", "enumerate", "full"):
        raise DomainError(f"unknown tally method {method!r}")

    if method != "divisor":
        total = sum(hnf_count(d, n) for n in range(1, X))
        if total > max_matrices:
            raise ResourceLimitError(
                f"tally of {total} sublattices exceeds the cap of {max_matrices}"
            )

    raw: dict[tuple[int, ...], int] = {}
    if method == "divisor":
        raw = _tally_2d(X)
    elif method == "enumerate":
        for n in range(1, X):
            _tally_index_enumerated(d, n, raw)
    else:
        for n in range(1, X):
            for basis in enumerate_hnf(d, n, max_matrices=max_matrices):
                key = cotype_of(basis).alpha
                raw[key] = raw.get(key, 0) + 1
    counts = {Cotype(k): v for k, v in raw.items() if v}
    return CotypeTally(d=d, X=X, counts=counts)


# ---------------------------------------------------------------------------
# Generating tuples in (Z/p^a)^d
# ---------------------------------------------------------------------------


def _closed_form_tuple_count(d: int, p: int, lam: tuple[int, ...]) -> int:
    """prod_{j=0}^{r-1} (p^(lam_{j+1} d) - p^j p^((lam_{j+1}-1) d))."""
    out = 1
    for j, part in enumerate(lam):
        out *= p ** (part * d) - p**j * p ** ((part - 1) * d)
    return out


def count_generating_tuples(
    d: int,
    p: int,
    lam: Iterable[int],
    method: str = "auto",
    max_candidates: int = DEFAULT_TUPLE_CAP,
) -> int:
    """Number of r-tuples in (Z/p^(lam_1))^d generating a subgroup of type lam,
    with the i-th entry of additive order exactly p^(lam_i).

    method 'closed' uses the factored product formula; 'brute' enumerates the
    candidate tuples and checks the generated subgroup's type by an element-order
    census; 'auto' prefers brute force when it fits the budget.
    """
    lam = tuple(int(a) for a in lam)
    if any(a < 1 for a in lam) or list(lam) != sorted(lam, reverse=True):
        raise DomainError("type must be a partition with positive parts")
    if len(lam) > d:
        raise DomainError("type has more parts than the ambient rank")
    if not lam:
        return 1
    if method == "auto":
        try:
            return count_generating_tuples(d, p, lam, "brute", max_candidates)
        except ResourceLimitError:
            return _closed_form_tuple_count(d, p, lam)
    if method == "closed":
        return _closed_form_tuple_count(d, p, lam)
    if method != "brute":
        raise DomainError(f"unknown method {method!r}")

    a1 = lam[0]
    mod = p**a1
    if mod**d > max_candidates:
        raise ResourceLimitError("ambient group too large for brute force")

    elements = list(itertools.product(range(mod), repeat=d))

    def order_exp(x: tuple[int, ...]) -> int:
        # additive order of x is p^(a1 - min valuation)
        best = a1
        for c in x:
            v = 0
            while c and c % p == 0:
                c //= p
                v += 1
            if c == 0:
                v = a1
            best = min(best, v)
        return a1 - best

    by_order: dict[int, list[tuple[int, ...]]] = {}
    for x in elements:
        by_order.setdefault(order_exp(x), []).append(x)

    cand_lists = [by_order.get(a, []) for a in lam]
    work = prod(len(c) for c in cand_lists)
    if work > max_candidates:
        raise ResourceLimitError(f"{work} candidate tuples exceed the brute-force cap")

    def add(x, y):
        return tuple((u + v) % mod for u, v in zip(x, y))

    zero = (0,) * d
    count = 0
    for tup in itertools.product(*cand_lists):
        # close under the subgroup generated by the tuple
        sub = {zero}
        for x in tup:
            if x in sub:
                continue
            t = x
            base = list(sub)
            while t not in sub:
                sub.update(add(h, t) for h in base)
                t = add(t, x)
        # element-order census -> conjugate partition -> type
        sizes = [sum(1 for y in sub if order_exp(y) <= i) for i in range(a1 + 1)]
        conj = []
        for i in range(1, a1 + 1):
            step = sizes[i] // sizes[i - 1]
            e = 0
            while step > 1:
                step //= p
                e += 1
            conj.append(e)
        typ = tuple(
            sorted((sum(1 for c in conj if c >= i) for i in range(1, max(conj) + 1)),
                   reverse=True)
        ) if any(conj) else ()
        if typ == lam:
            count += 1
    return count
