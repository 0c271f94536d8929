"""Actions of finite inverse semigroups, groupoids of germs, bisections.

Groupoids here are finite and discrete: arrows are indices, units are a
distinguished subset of arrows, and src/tgt map arrows to positions in the
unit list. Composition g * h is defined when src(g) = tgt(h) ("h first").
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .semigroup import InverseSemigroup


class NotFunctorial(Exception):
    def __init__(self, s, t):
        super().__init__(f"map({s}) o map({t}) != map({s}*{t})")
        self.s, self.t = s, t


class InverseMismatch(Exception):
    def __init__(self, s):
        super().__init__(f"map({s}*) is not the relational inverse of map({s})")
        self.s = s


class IdempotentNotIdentity(Exception):
    def __init__(self, e):
        super().__init__(f"map({e}) moves a point although {e} is idempotent")
        self.e = e


class NotABisection(Exception):
    def __init__(self, index):
        super().__init__(f"family member {index} is not a bisection")
        self.index = index


class NotClosedUnderProduct(Exception):
    pass


class NotGermBundle(Exception):
    pass


@dataclass(frozen=True)
class PartialBijection:
    """Injective partial map on {0..m-1}, stored as sorted (source, target) pairs."""

    pairs: tuple

    def __post_init__(self):
        srcs = [p[0] for p in self.pairs]
        tgts = [p[1] for p in self.pairs]
        if len(set(srcs)) != len(srcs) or len(set(tgts)) != len(tgts):
            raise ValueError("pairs not injective/functional")
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs)))

    @property
    def domain(self) -> tuple:
        return tuple(p[0] for p in self.pairs)

    @property
    def image(self) -> tuple:
        return tuple(sorted(p[1] for p in self.pairs))

    def as_dict(self) -> dict:
        return dict(self.pairs)

    def __call__(self, x: int) -> int:
        return dict(self.pairs)[x]

    def compose(self, other: "PartialBijection") -> "PartialBijection":
        """self after other, on the maximal domain."""
        f = self.as_dict()
        return PartialBijection(tuple((x, f[y]) for x, y in other.pairs if y in f))

    def inverse(self) -> "PartialBijection":
        return PartialBijection(tuple((y, x) for x, y in self.pairs))

    def is_partial_identity(self) -> bool:
        return all(x == y for x, y in self.pairs)


def identity_map(m: int) -> PartialBijection:
    return PartialBijection(tuple((x, x) for x in range(m)))


@dataclass(frozen=True)
class Action:
    """Action of an inverse semigroup on {0..space_size-1} by partial bijections."""

    semigroup: InverseSemigroup
    space_size: int
    maps: tuple  # PartialBijection per element index


def validate_action(sg: InverseSemigroup, action: Action) -> None:
    if action.space_size < 0 or len(action.maps) != sg.size:
        raise ValueError("action size mismatch")
    m = action.space_size
    for pb in action.maps:
        for x, y in pb.pairs:
            if not (0 <= x < m and 0 <= y < m):
                raise ValueError("action map leaves the space")
    if action.maps[sg.unit].pairs != identity_map(m).pairs:
        raise IdempotentNotIdentity(sg.unit)
    for e in sg.idempotents:
        if not action.maps[e].is_partial_identity():
            raise IdempotentNotIdentity(e)
    for s in sg.elements():
        if action.maps[sg.inv(s)].pairs != action.maps[s].inverse().pairs:
            raise InverseMismatch(s)
    for s in sg.elements():
        for t in sg.elements():
            if action.maps[s].compose(action.maps[t]).pairs != action.maps[sg.mul(s, t)].pairs:
                raise NotFunctorial(s, t)


def wagner_preston_action(sg: InverseSemigroup, maps: Sequence[PartialBijection],
                          space_size: int) -> Action:
    action = Action(semigroup=sg, space_size=space_size, maps=tuple(maps))
    validate_action(sg, action)
    return action


@dataclass(frozen=True)
class FiniteGroupoid:
    """Finite discrete groupoid; src/tgt map arrows to unit positions."""

    n_arrows: int
    src: np.ndarray          # (n,) int, positions into units
    tgt: np.ndarray
    compose: np.ndarray      # (n, n) int, -1 when undefined
    inverse: np.ndarray      # (n,) int
    units: tuple             # arrow indices of the units, sorted by unit position

    @property
    def n_units(self) -> int:
        return len(self.units)

    def arrows_into(self, unit_pos: int) -> np.ndarray:
        """G^x: arrows with target x."""
        return np.flatnonzero(self.tgt == unit_pos)

    def validate(self) -> None:
        n = self.n_arrows
        for g in range(n):
            gi = int(self.inverse[g])
            if int(self.inverse[gi]) != g:
                raise ValueError(f"inverse not involutive at {g}")
            if self.src[gi] != self.tgt[g] or self.tgt[gi] != self.src[g]:
                raise ValueError(f"inverse swaps src/tgt incorrectly at {g}")
            if self.compose[gi, g] != self.units[self.src[g]]:
                raise ValueError(f"g^-1 g is not the source unit at {g}")
            if self.compose[g, gi] != self.units[self.tgt[g]]:
                raise ValueError(f"g g^-1 is not the target unit at {g}")
        for g in range(n):
            for h in range(n):
                gh = int(self.compose[g, h])
                defined = self.src[g] == self.tgt[h]
                if defined != (gh >= 0):
                    raise ValueError(f"composability mismatch at ({g},{h})")
                if gh >= 0:
                    if self.src[gh] != self.src[h] or self.tgt[gh] != self.tgt[g]:
                        raise ValueError(f"src/tgt of composite wrong at ({g},{h})")
        for g in range(n):
            for h in range(n):
                if self.compose[g, h] < 0:
                    continue
                for k in range(n):
                    if self.compose[h, k] < 0:
                        continue
                    if self.compose[self.compose[g, h], k] != self.compose[g, self.compose[h, k]]:
                        raise ValueError(f"associativity fails at ({g},{h},{k})")
        for u in self.units:
            if self.inverse[u] != u or self.src[u] != self.tgt[u]:
                raise ValueError(f"unit {u} is not a loop fixed by inversion")


def group_groupoid(sg_table: Sequence[Sequence[int]], unit: int) -> FiniteGroupoid:
    """A finite group viewed as a one-unit groupoid."""
    t = np.asarray(sg_table, dtype=np.int64)
    n = t.shape[0]
    inv = np.empty(n, dtype=np.int64)
    for a in range(n):
        inv[a] = int(np.flatnonzero(t[a] == unit)[0])
    return FiniteGroupoid(
        n_arrows=n,
        src=np.zeros(n, dtype=np.int64),
        tgt=np.zeros(n, dtype=np.int64),
        compose=t.copy(),
        inverse=inv,
        units=(unit,),
    )


def pair_groupoid(m: int) -> FiniteGroupoid:
    """Pair groupoid on m points; arrow (i, j) runs j -> i."""
    arrows = [(i, j) for i in range(m) for j in range(m)]
    index = {a: k for k, a in enumerate(arrows)}
    n = len(arrows)
    src = np.array([j for _, j in arrows], dtype=np.int64)
    tgt = np.array([i for i, _ in arrows], dtype=np.int64)
    comp = -np.ones((n, n), dtype=np.int64)
    for (i, j), g in index.items():
        for (jj, k), h in index.items():
            if j == jj:
                comp[g, h] = index[(i, k)]
    inv = np.array([index[(j, i)] for i, j in arrows], dtype=np.int64)
    units = tuple(index[(x, x)] for x in range(m))
    return FiniteGroupoid(n_arrows=n, src=src, tgt=tgt, compose=comp, inverse=inv, units=units)


def disjoint_union(g1: FiniteGroupoid, g2: FiniteGroupoid) -> FiniteGroupoid:
    n1, n2 = g1.n_arrows, g2.n_arrows
    u1 = g1.n_units
    src = np.concatenate([g1.src, g2.src + u1])
    tgt = np.concatenate([g1.tgt, g2.tgt + u1])
    comp = -np.ones((n1 + n2, n1 + n2), dtype=np.int64)
    comp[:n1, :n1] = g1.compose
    shifted = g2.compose.copy()
    shifted[shifted >= 0] += n1
    comp[n1:, n1:] = shifted
    inv = np.concatenate([g1.inverse, g2.inverse + n1])
    units = tuple(g1.units) + tuple(u + n1 for u in g2.units)
    return FiniteGroupoid(n_arrows=n1 + n2, src=src, tgt=tgt, compose=comp, inverse=inv,
                          units=units)


@dataclass(frozen=True)
class GermLabeling:
    """Canonical germ data: one (element, point) representative per arrow."""

    canonical: tuple                  # arrow -> (s, x)
    class_of: dict                    # (s, x) -> arrow, for every defined germ
    point_of_unit: tuple              # unit position -> point of the space

    def arrow_of(self, s: int, x: int) -> int:
        return self.class_of[(s, x)]


def germ_groupoid(sg: InverseSemigroup, action: Action):
    """Groupoid of germs of an action; returns (FiniteGroupoid, GermLabeling)."""
    validate_action(sg, action)
    m = action.space_size
    dom = [set(action.maps[s].domain) for s in sg.elements()]
    act = [action.maps[s].as_dict() for s in sg.elements()]

    def equivalent(s: int, t: int, x: int) -> bool:
        for e in sg.idempotents:
            if x in dom[e] and sg.mul(s, e) == sg.mul(t, e):
                return True
        return False

    class_of: dict = {}
    canonical: list = []
    for x in range(m):
        here = [s for s in sg.elements() if x in dom[s]]
        classes: list[list[int]] = []
        for s in here:
            for cls in classes:
                if equivalent(s, cls[0], x):
                    cls.append(s)
                    break
            else:
                classes.append([s])
        for cls in classes:
            rep = (min(cls), x)
            canonical.append(rep)
    canonical.sort()
    index = {rep: k for k, rep in enumerate(canonical)}
    for rep in canonical:
        s0, x = rep
        for s in sg.elements():
            if x in dom[s] and equivalent(s, s0, x):
                class_of[(s, x)] = index[rep]

    n = len(canonical)
    unit_reps = sorted({class_of[(sg.unit, x)] for x in range(m)})
    point_of_unit = tuple(canonical[a][1] for a in unit_reps)
    unit_pos_at_point = {canonical[a][1]: i for i, a in enumerate(unit_reps)}

    src = np.array([unit_pos_at_point[x] for (_, x) in canonical], dtype=np.int64)
    tgt = np.array([unit_pos_at_point[act[s][x]] for (s, x) in canonical], dtype=np.int64)
    inv = np.array([class_of[(sg.inv(s), act[s][x])] for (s, x) in canonical], dtype=np.int64)
    comp = -np.ones((n, n), dtype=np.int64)
    for h, (t, y) in enumerate(canonical):
        ty = act[t][y]
        for g, (s, x) in enumerate(canonical):
            if x == ty:
                comp[g, h] = class_of[(sg.mul(s, t), y)]

    groupoid = FiniteGroupoid(n_arrows=n, src=src, tgt=tgt, compose=comp, inverse=inv,
                              units=tuple(unit_reps))
    labeling = GermLabeling(canonical=tuple(canonical), class_of=class_of,
                            point_of_unit=point_of_unit)
    return groupoid, labeling


# -- bisections ---------------------------------------------------------------

def is_bisection(g: FiniteGroupoid, arrows: frozenset) -> bool:
    srcs = [int(g.src[a]) for a in arrows]
    tgts = [int(g.tgt[a]) for a in arrows]
    return len(set(srcs)) == len(srcs) and len(set(tgts)) == len(tgts)


def bisection_product(g: FiniteGroupoid, u: frozenset, v: frozenset) -> frozenset:
    out = set()
    for a in u:
        for b in v:
            c = int(g.compose[a, b])
            if c >= 0:
                out.add(c)
    return frozenset(out)


def bisection_star(g: FiniteGroupoid, u: frozenset) -> frozenset:
    return frozenset(int(g.inverse[a]) for a in u)


def enumerate_bisections(g: FiniteGroupoid, limit: int = 16) -> list[frozenset]:
    """All bisections of a small groupoid (exponential; guarded by limit)."""
    if g.n_arrows > limit:
        raise NotClosedUnderProduct(
            f"refusing to enumerate bisections of a groupoid with {g.n_arrows} > {limit} arrows")
    by_src: dict = {}
    for a in range(g.n_arrows):
        by_src.setdefault(int(g.src[a]), []).append(a)
    sources = sorted(by_src)
    out = []
    def rec(i, chosen, used_tgts):
        if i == len(sources):
            out.append(frozenset(chosen))
            return
        rec(i + 1, chosen, used_tgts)
        for a in by_src[sources[i]]:
            t = int(g.tgt[a])
            if t not in used_tgts:
                rec(i + 1, chosen + [a], used_tgts | {t})
    rec(0, [], set())
    return out


def is_wide(g: FiniteGroupoid, family: Sequence[frozenset]) -> bool:
    """Cover + refinement conditions for a family of bisections.

    For a finite discrete groupoid every subset is open, so the topological
    refinement condition reduces to: every arrow in an intersection u n v
    lies in some member contained in u n v.
    """
    fam = [frozenset(u) for u in family]
    for i, u in enumerate(fam):
        if not is_bisection(g, u):
            raise NotABisection(i)
    covered = set().union(*fam) if fam else set()
    if covered != set(range(g.n_arrows)):
        return False
    for u in fam:
        for v in fam:
            meet = u & v
            for a in meet:
                if not any(a in w and w <= meet for w in fam):
                    return False
    return True


def family_semigroup(g: FiniteGroupoid, family: Sequence[frozenset]):
    """Inverse semigroup structure on a product/star-closed family.

    The full unit bisection is adjoined when absent (it adds no germs).
    Returns (InverseSemigroup, element list) with elements as frozensets.
    """
    fam = {frozenset(u) for u in family}
    for u in fam:
        if not is_bisection(g, u):
            raise NotABisection(sorted(family).index(sorted(u)) if u in family else -1)
    for u in fam:
        if bisection_star(g, u) not in fam:
            raise NotClosedUnderProduct(f"family not closed under inversion at {sorted(u)}")
        for v in fam:
            if bisection_product(g, u, v) not in fam:
                raise NotClosedUnderProduct(
                    f"family not closed under product at {sorted(u)} * {sorted(v)}")
    unit_bis = frozenset(g.units)
    fam.add(unit_bis)
    for u in list(fam):
        fam.add(bisection_product(g, u, unit_bis))
        fam.add(bisection_product(g, unit_bis, u))
    elements = sorted(fam, key=lambda u: (len(u), sorted(u)))
    index = {u: i for i, u in enumerate(elements)}
    table = [[index[bisection_product(g, u, v)] for v in elements] for u in elements]
    from .semigroup import from_mult_table
    sg = from_mult_table(table, index[unit_bis])
    return sg, elements


def family_action_on_units(g: FiniteGroupoid, sg: InverseSemigroup,
                           elements: Sequence[frozenset]) -> Action:
    """Canonical action of a bisection semigroup on the unit space."""
    maps = []
    for u in elements:
        pairs = tuple((int(g.src[a]), int(g.tgt[a])) for a in sorted(u))
        maps.append(PartialBijection(pairs))
    return wagner_preston_action(sg, maps, g.n_units)


def reconstruct_check(g: FiniteGroupoid, family: Sequence[frozenset]):
    """Rebuild g as the germ groupoid of its bisection family.

    Returns (True, iso) with iso mapping germ arrows to arrows of g, or
    (False, diagnostic) when the family fails to reconstruct g.
    """
    fam = [frozenset(u) for u in family]
    for i, u in enumerate(fam):
        if not is_bisection(g, u):
            raise NotABisection(i)
    covered = set().union(*fam) if fam else set()
    missing = sorted(set(range(g.n_arrows)) - covered)
    if missing:
        return False, {"reason": "not covered", "arrow": missing[0]}
    sg, elements = family_semigroup(g, fam)
    action = family_action_on_units(g, sg, elements)
    germs, labeling = germ_groupoid(sg, action)

    def g_arrow_in(u: frozenset, x: int) -> int:
        for a in u:
            if int(g.src[a]) == x:
                return a
        raise KeyError

    iso = -np.ones(germs.n_arrows, dtype=np.int64)
    for k, (si, x) in enumerate(labeling.canonical):
        u = elements[si]
        if not any(int(g.src[a]) == x for a in u):
            return False, {"reason": "germ without arrow", "germ": (si, x)}
        iso[k] = g_arrow_in(elements[si], x)
    # well-defined: every member of a germ class must name the same arrow
    for (si, x), k in labeling.class_of.items():
        u = elements[si]
        if any(int(g.src[a]) == x for a in u):
            if g_arrow_in(u, x) != iso[k]:
                return False, {"reason": "germ map not well-defined",
                               "arrow": int(g_arrow_in(u, x))}
    if len(set(iso.tolist())) != germs.n_arrows or germs.n_arrows != g.n_arrows:
        leftovers = sorted(set(range(g.n_arrows)) - set(iso.tolist()))
        return False, {"reason": "not bijective",
                       "arrow": leftovers[0] if leftovers else int(iso[0])}
    for a in range(germs.n_arrows):
        if int(g.inverse[iso[a]]) != int(iso[germs.inverse[a]]):
            return False, {"reason": "inverse not preserved", "arrow": int(iso[a])}
        for b in range(germs.n_arrows):
            ab = int(germs.compose[a, b])
            gab = int(g.compose[iso[a], iso[b]])
            if (ab >= 0) != (gab >= 0):
                return False, {"reason": "composability not preserved", "arrow": int(iso[a])}
            if ab >= 0 and int(iso[ab]) != gab:
                return False, {"reason": "composition not preserved", "arrow": int(iso[a])}
    return True, iso


# -- amenability ---------------------------------------------------------------

def amenability_witness(g: FiniteGroupoid) -> np.ndarray:
    """Exact normalized witness: (|orbit| * |isotropy|)^(-1/2) per component."""
    parent = list(range(g.n_units))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(g.n_arrows):
        ra, rb = find(int(g.src[a])), find(int(g.tgt[a]))
        if ra != rb:
            parent[ra] = rb
    eta = np.zeros(g.n_arrows)
    roots = {}
    for x in range(g.n_units):
        roots.setdefault(find(x), []).append(x)
    for orbit in roots.values():
        least = min(orbit)
        iso = [a for a in range(g.n_arrows)
               if int(g.src[a]) == least and int(g.tgt[a]) == least]
        value = 1.0 / np.sqrt(len(orbit) * len(iso))
        members = set(orbit)
        for a in range(g.n_arrows):
            if int(g.src[a]) in members:
                eta[a] = value
    return eta


def amenability_defect(g: FiniteGroupoid, eta: np.ndarray) -> float:
    """Max deviation of the two defining conditions from exact equality."""
    worst = 0.0
    for x in range(g.n_units):
        total = sum(eta[a] ** 2 for a in g.arrows_into(x))
        worst = max(worst, abs(total - 1.0))
    for a in range(g.n_arrows):
        x = int(g.tgt[a])
        ainv = int(g.inverse[a])
        total = 0.0
        for h in g.arrows_into(x):
            gh = int(g.compose[ainv, h])
            if gh >= 0:
                total += eta[h] * eta[gh]
        worst = max(worst, abs(total - 1.0))
    return float(worst)
