"""Finite inverse semigroup arithmetic on dense integer-indexed tables.

Elements are indices 0..n-1. All derived structure (involution, idempotent
set, natural partial order) is computed eagerly at construction; later
modules read these tables in hot loops.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class NotAssociative(Exception):
    pass


class NoUniqueInverse(Exception):
    def __init__(self, s: int, count: int):
        super().__init__(f"element {s} has {count} involution candidates; expected exactly 1")
        self.s = s
        self.count = count


class BadUnit(Exception):
    pass


class TooLarge(Exception):
    pass


@dataclass(frozen=True)
class InverseSemigroup:
    """Validated finite inverse semigroup with a two-sided unit."""

    size: int
    mult: np.ndarray            # (n, n) int
    unit: int
    star: np.ndarray            # (n,) int
    idempotents: tuple          # sorted indices of E
    leq: np.ndarray             # (n, n) bool, leq[s, t] iff s <= t
    zero: Optional[int] = None
    names: Optional[tuple] = None

    def mul(self, a: int, b: int) -> int:
        return int(self.mult[a, b])

    def inv(self, a: int) -> int:
        return int(self.star[a])

    def elements(self) -> range:
        return range(self.size)

    def is_idempotent(self, e: int) -> bool:
        return int(self.mult[e, e]) == e

    def le(self, s: int, t: int) -> bool:
        return bool(self.leq[s, t])

    def name_of(self, s: int) -> str:
        if self.names is not None:
            return self.names[s]
        return str(s)


def _check_associative(mult: np.ndarray) -> None:
    n = mult.shape[0]
    for a in range(n):
        left = mult[mult[a], :]          # (n, n): (a b) c
        right = mult[a, mult]            # (n, n): a (b c)
        if not np.array_equal(left, right):
            b, c = map(int, np.argwhere(left != right)[0])
            raise NotAssociative(f"({a} {b}) {c} != {a} ({b} {c})")


def from_mult_table(table: Sequence[Sequence[int]], unit: int,
                    names: Optional[Sequence[str]] = None) -> InverseSemigroup:
    """Validate a multiplication table and derive the inverse-semigroup data.

    Rejects tables that are not associative, lack a two-sided unit at the
    given index, or where some element has no unique generalized inverse.
    """
    mult = np.asarray(table, dtype=np.int64)
    if mult.ndim != 2 or mult.shape[0] != mult.shape[1]:
        raise ValueError("multiplication table must be square")
    n = mult.shape[0]
    if n == 0:
        raise ValueError("empty semigroup")
    if mult.min() < 0 or mult.max() >= n:
        raise ValueError("table entries out of range")
    unit = int(unit)
    if not (0 <= unit < n):
        raise BadUnit(f"unit index {unit} out of range")
    idx = np.arange(n)
    if not (np.array_equal(mult[unit], idx) and np.array_equal(mult[:, unit], idx)):
        raise BadUnit(f"element {unit} is not a two-sided identity")
    _check_associative(mult)

    star = np.empty(n, dtype=np.int64)
    for s in range(n):
        st = mult[s]                     # s*t over t
        sts = mult[st, s]                # (s t) s
        ts = mult[:, s]                  # t*s over t
        tst = mult[ts, idx]              # (t s) t
        cand = np.flatnonzero((sts == s) & (tst == idx))
        if cand.size != 1:
            raise NoUniqueInverse(s, int(cand.size))
        star[s] = cand[0]

    idem = tuple(int(e) for e in range(n) if mult[e, e] == e)
    for e in idem:
        for f in idem:
            if mult[e, f] != mult[f, e]:
                raise NoUniqueInverse(e, 0)  # unreachable for true inverse semigroups

    ss = mult[star, idx]                 # s* s
    leq = mult[:, ss].T == idx[:, None]  # leq[s, t] iff t (s* s) == s

    zero = None
    for z in range(n):
        if np.all(mult[z] == z) and np.all(mult[:, z] == z):
            zero = z
            break

    return InverseSemigroup(
        size=n, mult=mult, unit=unit, star=star, idempotents=idem, leq=leq,
        zero=zero, names=tuple(names) if names is not None else None,
    )


def adjoin_unit(table: Sequence[Sequence[int]]):
    """Append a fresh two-sided unit to a raw table; returns (table, unit)."""
    t = [list(map(int, row)) for row in table]
    n = len(t)
    for row in t:
        row.append(None)
    t.append([None] * (n + 1))
    for i in range(n):
        t[i][n] = i
        t[n][i] = i
    t[n][n] = n
    return t, n


def down_idempotents(sg: InverseSemigroup, s: int) -> tuple:
    """E_s = {e in E : e <= s}, shared by s and s*."""
    return tuple(e for e in sg.idempotents if sg.leq[e, s])


def omega(sg: InverseSemigroup, s: int, e: int) -> int:
    """Conjugation e -> s e s* on idempotents."""
    return sg.mul(sg.mul(s, e), sg.inv(s))


@dataclass(frozen=True)
class Character:
    """Nonzero multiplicative {0,1}-map on the idempotent semilattice.

    Stored as the boolean vector over E (in semigroup idempotent order)
    together with the minimum of its filter.
    """

    values: tuple
    generator: int  # idempotent generating the filter

    def __call__(self, e_position: int) -> int:
        return int(self.values[e_position])


def characters(sg: InverseSemigroup) -> list[Character]:
    """All characters of E, i.e. all filters of the finite meet semilattice.

    Every filter of a finite semilattice is principal, so characters are
    indexed by idempotents: the filter of e is {f : f >= e}.
    """
    E = sg.idempotents
    out = []
    for e in E:
        vals = tuple(1 if sg.leq[e, f] else 0 for f in E)
        out.append(Character(values=vals, generator=e))
    return out


def enumerate_filters_bruteforce(sg: InverseSemigroup) -> set:
    """Exhaustive filter enumeration over subsets of E (test oracle)."""
    E = sg.idempotents
    pos = {e: i for i, e in enumerate(E)}
    found = set()
    for mask in range(1, 1 << len(E)):
        subset = [e for i, e in enumerate(E) if mask >> i & 1]
        ok = True
        for e in subset:
            for f in subset:
                if sg.mul(e, f) not in subset:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        for e in subset:
            for f in E:
                if sg.leq[e, f] and f not in subset:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            found.add(tuple(sorted(pos[e] for e in subset)))
    return found


def _partial_bijections(n: int):
    points = range(n)
    for k in range(n + 1):
        for dom in itertools.combinations(points, k):
            for img in itertools.permutations(points, k):
                if len(set(img)) == k:
                    yield tuple(zip(dom, img))


def symmetric_inverse_monoid(n: int) -> InverseSemigroup:
    """The monoid of all partial bijections of {0..n-1} under composition."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > 5:
        raise TooLarge(f"symmetric inverse monoid on {n} points does not fit memory budget")
    maps = sorted(_partial_bijections(n), key=lambda m: (len(m), m))
    index = {m: i for i, m in enumerate(maps)}
    size = len(maps)

    def compose(f, g):
        # (f o g)(x) = f(g(x)) on the maximal domain
        fd = dict(f)
        out = tuple((x, fd[y]) for x, y in g if y in fd)
        return out

    table = [[index[compose(maps[a], maps[b])] for b in range(size)] for a in range(size)]
    unit = index[tuple((x, x) for x in range(n))]
    names = ["{" + ",".join(f"{x}->{y}" for x, y in m) + "}" for m in maps]
    sg = from_mult_table(table, unit, names=names)
    return sg


def sim_partial_maps(n: int) -> list[tuple]:
    """The partial bijections backing symmetric_inverse_monoid, same order."""
    return sorted(_partial_bijections(n), key=lambda m: (len(m), m))


def cyclic_group(n: int) -> InverseSemigroup:
    """Z/n with additive indexing, unit 0."""
    if n < 1:
        raise ValueError("n must be positive")
    table = [[(a + b) % n for b in range(n)] for a in range(n)]
    return from_mult_table(table, 0, names=[f"g{a}" for a in range(n)])


def semilattice_chain(k: int) -> InverseSemigroup:
    """Meet-semilattice chain e_0 > e_1 > ... with top element as unit.

    Index 0 is the unit; products take the maximum index (deeper element).
    """
    if k < 1:
        raise ValueError("k must be positive")
    table = [[max(a, b) for b in range(k)] for a in range(k)]
    return from_mult_table(table, 0, names=[f"e{a}" for a in range(k)])


def group_with_zero(n: int) -> InverseSemigroup:
    """Z/n with an adjoined zero element at index n."""
    if n < 1:
        raise ValueError("n must be positive")
    z = n
    table = [[0] * (n + 1) for _ in range(n + 1)]
    for a in range(n):
        for b in range(n):
            table[a][b] = (a + b) % n
        table[a][z] = z
        table[z][a] = z
    table[z][z] = z
    names = [f"g{a}" for a in range(n)] + ["z"]
    return from_mult_table(table, 0, names=names)
