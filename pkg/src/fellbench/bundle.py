"""Concrete Fell bundles: labeled subspaces of one complex matrix algebra.

A bundle assigns to every semigroup element s a subspace F_s of N x N
matrices. Multiplication maps, inclusions and involutions are literal
matrix operations; this is fully general at finite scale because the
regular representation is isometric on fibers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg as la
from .groupoids import (Action, FiniteGroupoid, GermLabeling,
                        family_action_on_units, family_semigroup,
                        germ_groupoid, is_wide, validate_action)
from .semigroup import InverseSemigroup, characters, down_idempotents


class ProductEscapesFiber(Exception):
    def __init__(self, s, t, defect):
        super().__init__(f"F_{s} * F_{t} escapes F_{s}{t} (defect {defect:.3e})")
        self.s, self.t, self.defect = s, t, defect


class AdjointMismatch(Exception):
    def __init__(self, s, defect):
        super().__init__(f"adjoint of F_{s} does not land in F_{s}* (defect {defect:.3e})")
        self.s, self.defect = s, defect


class InclusionFails(Exception):
    def __init__(self, s, t, defect):
        super().__init__(f"F_{s} not included in F_{t} although {s} <= {t} (defect {defect:.3e})")
        self.s, self.t, self.defect = s, t, defect


class NotSaturatedOnDiagonal(Exception):
    def __init__(self, s):
        super().__init__(f"span(F_{s} F_{s}* F_{s}) != F_{s}")
        self.s = s


class UnitFiberNotStarAlgebra(Exception):
    pass


class FiberIncompatible(Exception):
    def __init__(self, g):
        super().__init__(f"fiber data incompatible at arrow/unit {g}")
        self.g = g


class NotWide(Exception):
    pass


@dataclass(frozen=True)
class GermData:
    """Germ-groupoid provenance of a bundle built from an action."""

    action: Action
    groupoid: FiniteGroupoid
    labeling: GermLabeling
    block_offset: tuple   # per groupoid unit position: carrier offset
    block_dim: tuple      # per groupoid unit position: internal fiber dim


@dataclass(frozen=True)
class IdealWithUnit:
    """Ideal I_{s,t} of the unit fiber together with its unit projection."""

    ideal_basis: np.ndarray       # (k, N, N) orthonormal
    unit_projection: np.ndarray   # (N, N)


@dataclass(frozen=True)
class FellBundle:
    semigroup: InverseSemigroup
    carrier_dim: int
    fibers: tuple                  # per element: (n_s, N, N) complex array
    fiber_onb: tuple = field(repr=False, default=())
    unit_projections: tuple = field(repr=False, default=())   # 1_{r,1} per element r
    ideal_bases: tuple = field(repr=False, default=())        # ONB of I_{r,1} per r
    germ: Optional[GermData] = field(repr=False, default=None)
    name: str = "bundle"

    def fiber(self, s: int) -> np.ndarray:
        return self.fibers[s]

    def fiber_dim(self, s: int) -> int:
        return self.fibers[s].shape[0]

    @property
    def unit_fiber(self) -> np.ndarray:
        return self.fibers[self.semigroup.unit]

    def unit_proj(self, r: int) -> np.ndarray:
        """1_r = 1_{r,1}, the unit projection of the ideal I_{r,1}."""
        return self.unit_projections[r]

    def unit_proj_pair(self, s: int, t: int) -> np.ndarray:
        """1_{s,t} = 1_{s*t,1}."""
        return self.unit_projections[self.semigroup.mul(self.semigroup.inv(s), t)]

    @property
    def a1_unit(self) -> np.ndarray:
        """The unit of the unit-fiber C*-algebra A_1."""
        return self.unit_projections[self.semigroup.unit]

    def total_section_dim(self) -> int:
        return sum(self.fiber_dim(s) for s in self.semigroup.elements())


@dataclass
class ValidationReport:
    carrier_dim: int
    fiber_dims: list
    product_defect: float = 0.0
    adjoint_defect: float = 0.0
    inclusion_defect: float = 0.0
    unit_fiber_defect: float = 0.0
    ok: bool = True

    def max_defect(self) -> float:
        return max(self.product_defect, self.adjoint_defect,
                   self.inclusion_defect, self.unit_fiber_defect)


def _ideal_span_closure(bundle_fibers, a1_onb, seed_mats, n, tol):
    """Two-sided ideal of A_1 generated by seed_mats, as an ONB; closure
    capped at dim(A_1) rounds (dimension grows strictly until stable)."""
    basis = la.onb_of_mats(seed_mats, tol)
    if basis.shape[0] == 0:
        return basis
    cap = max(1, a1_onb.shape[0])
    for _ in range(cap + 1):
        left = np.einsum("iab,jbc->ijac", a1_onb, basis).reshape((-1, n, n))
        right = np.einsum("iab,jbc->ijac", basis, a1_onb).reshape((-1, n, n))
        new = la.onb_of_mats(np.concatenate([basis, left, right]), tol)
        if new.shape[0] == basis.shape[0]:
            return new
        basis = new
    raise la.IllConditioned("ideal span closure did not stabilize")


def ideal_unit(bundle: FellBundle, s: int, t: int, tol: float = la.DEFAULT_TOL) -> IdealWithUnit:
    """Ideal I_{s,t} (generated by fibers F_{v*v} over v <= s,t) and its unit.

    The unit is the support projection of sum_i b_i b_i^*, obtained by
    spectral interpolation, hence itself an element of the ideal. Agrees
    with 1_{s*t,1} and 1_{t*s,1}.
    """
    sg = bundle.semigroup
    n = bundle.carrier_dim
    a1_onb = la.onb_of_mats(bundle.unit_fiber, tol)
    seeds = []
    for v in sg.elements():
        if sg.leq[v, s] and sg.leq[v, t]:
            vv = sg.mul(sg.inv(v), v)
            if bundle.fiber_dim(vv):
                seeds.append(bundle.fibers[vv])
    if not seeds:
        zero = np.zeros((n, n), dtype=complex)
        return IdealWithUnit(ideal_basis=np.zeros((0, n, n), dtype=complex), unit_projection=zero)
    basis = _ideal_span_closure(bundle.fibers, a1_onb, np.concatenate(seeds), n, tol)
    z = np.einsum("iab,icb->ac", basis, basis.conj())
    p = la.support_projection(z, tol)
    return IdealWithUnit(ideal_basis=basis, unit_projection=p)


def _attach_caches(bundle: FellBundle, tol: float) -> FellBundle:
    sg = bundle.semigroup
    onbs = tuple(la.onb_of_mats(f, tol) for f in bundle.fibers)
    object.__setattr__(bundle, "fiber_onb", onbs)
    units = []
    bases = []
    for r in sg.elements():
        iu = ideal_unit(bundle, r, sg.unit, tol)
        units.append(iu.unit_projection)
        bases.append(iu.ideal_basis)
    object.__setattr__(bundle, "unit_projections", tuple(units))
    object.__setattr__(bundle, "ideal_bases", tuple(bases))
    return bundle


def validate_bundle(bundle: FellBundle, tol: float = la.DEFAULT_TOL) -> ValidationReport:
    """Check every Fell-bundle axiom of the concrete model; raises on failure."""
    sg = bundle.semigroup
    n = bundle.carrier_dim
    report = ValidationReport(carrier_dim=n,
                              fiber_dims=[bundle.fiber_dim(s) for s in sg.elements()])
    if len(bundle.fibers) != sg.size:
        raise ValueError("one fiber basis required per semigroup element")
    for s in sg.elements():
        f = bundle.fibers[s]
        if f.shape[0] == 0:
            continue
        if f.shape[1:] != (n, n):
            raise ValueError(f"fiber {s} has wrong carrier shape")
        rows = la.mats_to_rows(f)
        svals = np.linalg.svd(rows, compute_uv=False)
        if la.rank_from_singvals(svals, tol) != f.shape[0]:
            raise ValueError(f"fiber basis {s} is linearly dependent")

    onb = [la.onb_of_mats(f, tol) for f in bundle.fibers]
    scale = 1.0 + max((la.opnorm(m) for f in bundle.fibers for m in f), default=0.0)

    # products land in the target fiber
    for s in sg.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            continue
        for t in sg.elements():
            ft = bundle.fibers[t]
            if ft.shape[0] == 0:
                continue
            prods = np.einsum("iab,jbc->ijac", fs, ft).reshape((-1, n, n))
            res = la.residual_outside_span(prods, onb[sg.mul(s, t)], tol)
            report.product_defect = max(report.product_defect, res)
            if res > tol * scale * scale * 10:
                raise ProductEscapesFiber(s, t, res)

    # adjoints land in the starred fiber, with matching dimensions
    for s in sg.elements():
        fs = bundle.fibers[s]
        st = sg.inv(s)
        if bundle.fiber_dim(s) != bundle.fiber_dim(st):
            raise AdjointMismatch(s, float("inf"))
        if fs.shape[0] == 0:
            continue
        adj = np.conj(np.transpose(fs, (0, 2, 1)))
        res = la.residual_outside_span(adj, onb[st], tol)
        report.adjoint_defect = max(report.adjoint_defect, res)
        if res > tol * scale * 10:
            raise AdjointMismatch(s, res)

    # inclusions along the natural partial order
    for s in sg.elements():
        if bundle.fiber_dim(s) == 0:
            continue
        for t in sg.elements():
            if s == t or not sg.leq[s, t]:
                continue
            res = la.residual_outside_span(bundle.fibers[s], onb[t], tol)
            report.inclusion_defect = max(report.inclusion_defect, res)
            if res > tol * scale * 10:
                raise InclusionFails(s, t, res)

    # span(F_s F_s* F_s) = F_s
    for s in sg.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            continue
        fst = bundle.fibers[sg.inv(s)]
        pair = np.einsum("iab,jbc->ijac", fs, fst).reshape((-1, n, n))
        pair = la.onb_of_mats(pair, tol)
        triple = np.einsum("iab,jbc->ijac", pair, fs).reshape((-1, n, n))
        triple_onb = la.onb_of_mats(triple, tol)
        if triple_onb.shape[0] != fs.shape[0]:
            raise NotSaturatedOnDiagonal(s)
        if la.residual_outside_span(fs, triple_onb, tol) > tol * scale * 10:
            raise NotSaturatedOnDiagonal(s)

    # unit fiber is a *-closed subalgebra (products/adjoints already checked
    # against itself); verify it is unital as a C*-algebra by support
    u = sg.unit
    fu = bundle.fibers[u]
    if fu.shape[0] == 0:
        raise UnitFiberNotStarAlgebra("unit fiber is zero")
    adj = np.conj(np.transpose(fu, (0, 2, 1)))
    res = la.residual_outside_span(adj, onb[u], tol)
    prods = np.einsum("iab,jbc->ijac", fu, fu).reshape((-1, n, n))
    res = max(res, la.residual_outside_span(prods, onb[u], tol))
    report.unit_fiber_defect = res
    if res > tol * scale * scale * 10:
        raise UnitFiberNotStarAlgebra(f"unit fiber not a *-algebra (defect {res:.3e})")

    report.ok = True
    return report


def make_bundle(sg: InverseSemigroup, fibers: Sequence[np.ndarray], *,
                carrier_dim: Optional[int] = None, germ: Optional[GermData] = None,
                name: str = "bundle", tol: float = la.DEFAULT_TOL,
                validate: bool = True) -> FellBundle:
    """Assemble, validate and cache a Fell bundle from raw fiber bases."""
    fib = []
    n = carrier_dim
    for f in fibers:
        f = la.as_complex(f)
        if f.size == 0:
            f = f.reshape((0, 0, 0))
        else:
            n = f.shape[1] if n is None else n
        fib.append(f)
    if n is None:
        raise ValueError("carrier dimension undetermined")
    fib = tuple(f if f.size else np.zeros((0, n, n), dtype=complex) for f in fib)
    bundle = FellBundle(semigroup=sg, carrier_dim=n, fibers=fib, germ=germ, name=name)
    if validate:
        validate_bundle(bundle, tol)
    _attach_caches(bundle, tol)
    for f in bundle.fibers:
        f.setflags(write=False)
    return bundle


# -- constructors --------------------------------------------------------------

def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1.0
    return m


def from_isg_action(sg: InverseSemigroup, action: Action, *, name: str = "action-bundle",
                    tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Bundle of an action on a finite set: F_s = partial-permutation x diagonal.

    The carrier is C^X; F_s is spanned by the matrix units E_{s.x, x} over
    x in dom(s), so A_1 is the diagonal algebra C(X).
    """
    validate_action(sg, action)
    m = action.space_size
    if m < 1:
        raise ValueError("action space must be nonempty")
    fibers = []
    for s in sg.elements():
        mats = [matrix_unit(m, y, x) for x, y in action.maps[s].pairs]
        fibers.append(np.array(mats, dtype=complex) if mats else np.zeros((0, m, m), dtype=complex))
    groupoid, labeling = germ_groupoid(sg, action)
    germ = GermData(action=action, groupoid=groupoid, labeling=labeling,
                    block_offset=tuple(labeling.point_of_unit),
                    block_dim=tuple(1 for _ in labeling.point_of_unit))
    return make_bundle(sg, fibers, germ=germ, name=name, tol=tol)


def trivial_bundle(sg: InverseSemigroup, *, tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Bundle of the canonical action of S on the character space of E.

    Characters are the principal filters of E; s moves the filter of f to
    the filter of s f s* whenever f <= s*s. The cross-sectional algebras of
    this bundle are those of the semigroup itself.
    """
    from .groupoids import PartialBijection
    chars = characters(sg)
    pos = {c.generator: i for i, c in enumerate(chars)}
    maps = []
    for s in sg.elements():
        ss = sg.mul(sg.inv(s), s)
        pairs = []
        for f in sg.idempotents:
            if sg.leq[f, ss]:
                image = sg.mul(sg.mul(s, f), sg.inv(s))
                pairs.append((pos[f], pos[image]))
        maps.append(PartialBijection(tuple(pairs)))
    action = Action(semigroup=sg, space_size=len(chars), maps=tuple(maps))
    return from_isg_action(sg, action, name="trivial-bundle", tol=tol)


def from_groupoid_bundle(g: FiniteGroupoid, family: Sequence[frozenset],
                         fiber_data, *, name: str = "groupoid-bundle",
                         tol: float = la.DEFAULT_TOL):
    """Bundle over the bisection semigroup of a finite groupoid.

    ``fiber_data`` gives the internal fiber dimension per groupoid unit
    (an int for a uniform dimension). Arrow fibers are the full rectangular
    blocks between the unit blocks of their endpoints, so F_u is the direct
    sum of the blocks of the arrows in the bisection u.

    Returns (bundle, semigroup, elements) with elements the bisection list
    indexing the semigroup.
    """
    if isinstance(fiber_data, int):
        dims = [fiber_data] * g.n_units
    else:
        dims = [int(d) for d in fiber_data]
    if len(dims) != g.n_units:
        raise FiberIncompatible(len(dims))
    for x, d in enumerate(dims):
        if d < 1:
            raise FiberIncompatible(g.units[x])
    if not is_wide(g, family):
        raise NotWide("family of bisections does not cover/refine the groupoid")
    sg, elements = family_semigroup(g, family)
    offsets = np.concatenate([[0], np.cumsum(dims)])
    n = int(offsets[-1])
    fibers = []
    for u in elements:
        mats = []
        for a in sorted(u):
            x, y = int(g.src[a]), int(g.tgt[a])
            for i in range(dims[y]):
                for j in range(dims[x]):
                    mats.append(matrix_unit(n, int(offsets[y]) + i, int(offsets[x]) + j))
        fibers.append(np.array(mats) if mats else np.zeros((0, n, n), dtype=complex))
    action = family_action_on_units(g, sg, elements)
    groupoid, labeling = germ_groupoid(sg, action)
    block_offset = tuple(int(offsets[labeling.point_of_unit[i]]) for i in range(len(labeling.point_of_unit)))
    block_dim = tuple(int(dims[labeling.point_of_unit[i]]) for i in range(len(labeling.point_of_unit)))
    germ = GermData(action=action, groupoid=groupoid, labeling=labeling,
                    block_offset=block_offset, block_dim=block_dim)
    bundle = make_bundle(sg, fibers, germ=germ, name=name, tol=tol)
    return bundle, sg, elements


def group_zero_line_bundle(sg: InverseSemigroup, m: int, *, tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Finite analog of a group-with-zero line bundle on X = {0..m}.

    Group elements act as the identity on X; the zero element acts as the
    partial identity on X minus {0}. Fibers: F_g = all diagonals, F_zero =
    diagonals vanishing at coordinate 0.
    """
    from .groupoids import PartialBijection, identity_map
    if sg.zero is None:
        raise ValueError("semigroup must have a zero element")
    if m < 1:
        raise ValueError("m must be positive")
    size = m + 1
    maps = []
    for s in sg.elements():
        if s == sg.zero:
            maps.append(PartialBijection(tuple((x, x) for x in range(1, size))))
        else:
            maps.append(identity_map(size))
    action = Action(semigroup=sg, space_size=size, maps=tuple(maps))
    bundle = from_isg_action(sg, action, name=f"group-zero-line-{m}", tol=tol)
    return bundle


def tensor_with(bundle: FellBundle, block_sizes: Sequence[int], *,
                tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Tensor the bundle with a finite-dimensional C*-algebra B = (+) M_k.

    Fibers become F_s (x) B on the Kronecker carrier. In finite dimensions
    the minimal and maximal tensor norms agree, so a single bundle results.
    """
    sizes = [int(k) for k in block_sizes]
    if not sizes or any(k < 1 for k in sizes):
        raise ValueError("block sizes must be positive")
    dim_b = sum(sizes)
    basis_b = []
    off = 0
    for k in sizes:
        for i in range(k):
            for j in range(k):
                basis_b.append(matrix_unit(dim_b, off + i, off + j))
        off += k
    basis_b = np.array(basis_b)
    fibers = []
    for s in bundle.semigroup.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            fibers.append(np.zeros((0, bundle.carrier_dim * dim_b, bundle.carrier_dim * dim_b),
                                   dtype=complex))
            continue
        mats = [np.kron(a, m) for a in fs for m in basis_b]
        fibers.append(np.array(mats))
    germ = None
    if bundle.germ is not None:
        germ = GermData(
            action=bundle.germ.action, groupoid=bundle.germ.groupoid,
            labeling=bundle.germ.labeling,
            block_offset=tuple(o * dim_b for o in bundle.germ.block_offset),
            block_dim=tuple(d * dim_b for d in bundle.germ.block_dim),
        )
    return make_bundle(bundle.semigroup, fibers, germ=germ,
                       name=f"{bundle.name}(x)B{sizes}", tol=tol)


# -- structural identity checks -------------------------------------------------

@dataclass
class CommutationReport:
    commutation_defect: float = 0.0
    idempotent_commutation_defect: float = 0.0
    span_defect: float = 0.0
    centrality_defect: float = 0.0
    join_defect: float = 0.0
    failures: list = field(default_factory=list)

    def max_defect(self) -> float:
        return max(self.commutation_defect, self.idempotent_commutation_defect,
                   self.span_defect, self.centrality_defect, self.join_defect)


def join_projection_inclusion_exclusion(bundle: FellBundle, idems: Sequence[int]) -> np.ndarray:
    """p_F = sum over nonempty K of (-1)^{|K|+1} prod_{e in K} 1_e."""
    n = bundle.carrier_dim
    p = np.zeros((n, n), dtype=complex)
    units = [bundle.unit_proj(e) for e in idems]
    for r in range(1, len(units) + 1):
        sign = (-1.0) ** (r + 1)
        for combo in itertools.combinations(range(len(units)), r):
            prod = units[combo[0]].copy()
            for k in combo[1:]:
                prod = prod @ units[k]
            p += sign * prod
    return p


def check_commutation(bundle: FellBundle, tol: float = la.DEFAULT_TOL) -> CommutationReport:
    """Verify the commutation identities tying fibers to the ideal units."""
    sg = bundle.semigroup
    rep = CommutationReport()
    a1 = bundle.unit_fiber

    for s in sg.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            continue
        for t in sg.elements():
            # a_s 1_{s*t} = 1_{st*} a_s
            q_in = bundle.unit_proj(sg.mul(sg.inv(s), t))
            q_out = bundle.unit_proj(sg.mul(s, sg.inv(t)))
            d = max(la.frob(a @ q_in - q_out @ a) for a in fs)
            rep.commutation_defect = max(rep.commutation_defect, d)
            if d > tol * 1e3:
                rep.failures.append(("commutation", s, t, d))

    for s in sg.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            continue
        ss = sg.mul(sg.inv(s), s)
        for e in sg.idempotents:
            if not sg.leq[e, ss]:
                continue
            ses = sg.mul(sg.mul(s, e), sg.inv(s))
            qe, qs = bundle.unit_proj(e), bundle.unit_proj(ses)
            d = max(la.frob(a @ qe - qs @ a) for a in fs)
            rep.idempotent_commutation_defect = max(rep.idempotent_commutation_defect, d)
            if d > tol * 1e3:
                rep.failures.append(("idempotent-commutation", s, e, d))

    n = bundle.carrier_dim
    for s in sg.elements():
        if bundle.fiber_dim(s) == 0:
            continue
        fnorm_s = max(la.frob(m) for m in bundle.fibers[s])
        for e in sg.idempotents:
            se = sg.mul(s, e)
            fe = bundle.fibers[e]
            if fe.shape[0] == 0:
                if bundle.fiber_dim(se) != 0:
                    rep.span_defect = max(rep.span_defect, 1.0)
                    rep.failures.append(("span", s, e, 1.0))
                continue
            scale = fnorm_s * max(la.frob(m) for m in fe)
            prods = np.einsum("iab,jbc->ijac", bundle.fibers[s], fe).reshape((-1, n, n))
            got = la.onb_of_mats(prods, tol, scale=scale)
            if got.shape[0] != bundle.fiber_dim(se):
                rep.failures.append(("span", s, e, float(got.shape[0] - bundle.fiber_dim(se))))
                rep.span_defect = max(rep.span_defect, 1.0)
            else:
                d = la.residual_outside_span(got, bundle.fiber_onb[se], tol)
                rep.span_defect = max(rep.span_defect, d)
                if d > tol * 1e3:
                    rep.failures.append(("span", s, e, d))

    for r in sg.elements():
        q = bundle.unit_proj(r)
        d = max((la.frob(q @ a - a @ q) for a in a1), default=0.0)
        rep.centrality_defect = max(rep.centrality_defect, d)
        if d > tol * 1e3:
            rep.failures.append(("centrality", r, r, d))

    seen = set()
    for r in sg.elements():
        idems = down_idempotents(sg, r)
        if idems in seen or len(idems) > 14:
            continue
        seen.add(idems)
        p = join_projection_inclusion_exclusion(bundle, idems)
        d = la.frob(p - bundle.unit_proj(r))
        if idems:
            z = sum(bundle.unit_proj(e) for e in idems)
            d = max(d, la.frob(p - la.support_projection(z, tol)))
        else:
            d = max(d, la.frob(bundle.unit_proj(r)))
        rep.join_defect = max(rep.join_defect, d)
        if d > tol * 1e3:
            rep.failures.append(("join", r, r, d))

    return rep
