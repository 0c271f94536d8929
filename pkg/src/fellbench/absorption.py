"""Bundle representations, the absorption-principle verifier, and the
approximation property: checking, synthesis from groupoid witnesses, and
the completely positive compression that certifies weak containment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg as la
from .bundle import FellBundle
from .groupoids import NotGermBundle
from .sections import SectionBasis


class RepAxiomFails(Exception):
    def __init__(self, which, s, t, defect):
        super().__init__(f"representation axiom {which} fails at ({s},{t}), defect {defect:.3e}")
        self.which, self.s, self.t, self.defect = which, s, t, defect


class NotASection(Exception):
    def __init__(self, s):
        super().__init__(f"witness value at {s} is not in the fiber F_(ss*)")
        self.s = s


@dataclass
class Representation:
    """Linear maps F_s -> d x d matrices, given on each fiber basis."""

    bundle: FellBundle
    dim_h: int
    images: tuple     # per element s: (n_s, d, d) images of bundle.fibers[s]
    nondegenerate: Optional[bool] = None

    def apply(self, s: int, a: np.ndarray, tol: float = la.DEFAULT_TOL) -> np.ndarray:
        c = la.coords_in_basis(a[None], self.bundle.fibers[s], tol, what=f"fiber {s}")[0]
        if self.images[s].shape[0] == 0:
            return np.zeros((self.dim_h, self.dim_h), dtype=complex)
        return np.einsum("i,iab->ab", c, self.images[s])

    def apply_unit(self, a: np.ndarray, tol: float = la.DEFAULT_TOL) -> np.ndarray:
        return self.apply(self.bundle.semigroup.unit, a, tol)


def carrier_representation(bundle: FellBundle) -> Representation:
    """The inclusion F_s in M_N acting on the carrier C^N."""
    return Representation(bundle=bundle, dim_h=bundle.carrier_dim,
                          images=tuple(f.copy() for f in bundle.fibers))


def direct_sum_representation(rep1: Representation, rep2: Representation) -> Representation:
    assert rep1.bundle is rep2.bundle
    d1, d2 = rep1.dim_h, rep2.dim_h
    images = []
    for s in rep1.bundle.semigroup.elements():
        n = rep1.bundle.fiber_dim(s)
        out = np.zeros((n, d1 + d2, d1 + d2), dtype=complex)
        out[:, :d1, :d1] = rep1.images[s]
        out[:, d1:, d1:] = rep2.images[s]
        images.append(out)
    return Representation(bundle=rep1.bundle, dim_h=d1 + d2, images=tuple(images))


def zero_representation(bundle: FellBundle, dim_h: int) -> Representation:
    images = tuple(np.zeros((bundle.fiber_dim(s), dim_h, dim_h), dtype=complex)
                   for s in bundle.semigroup.elements())
    return Representation(bundle=bundle, dim_h=dim_h, images=images)


def representation_from_envelope(bundle: FellBundle, multiplicities,
                                 rng: Optional[np.random.Generator] = None,
                                 tol: float = la.DEFAULT_TOL) -> Representation:
    """Bundle representation from the universal C*-quotient.

    Any *-representation of Q_c restricts to a representation of the
    bundle; choosing multiplicities for the envelope blocks (and a random
    basis rotation) produces genuinely different representations, including
    ones with non-faithful unit part when some multiplicity is zero.
    """
    from .envelope import envelope
    from .sections import universal_quotient
    uq = universal_quotient(bundle, tol)
    env = envelope(uq.algebra, rng, tol)
    mult = list(multiplicities)
    if len(mult) != len(env.out_blocks):
        raise ValueError(f"need one multiplicity per block ({len(env.out_blocks)})")
    d = int(sum(m * k for m, k in zip(mult, env.out_blocks)))
    if d == 0:
        return zero_representation(bundle, 1)
    u = np.eye(d, dtype=complex)
    if rng is not None:
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        q, _ = np.linalg.qr(z)
        u = q
    basis = uq.basis
    images = []
    for s in bundle.semigroup.elements():
        n = bundle.fiber_dim(s)
        out = np.zeros((n, d, d), dtype=complex)
        for i in range(n):
            vec = np.zeros(basis.dim, dtype=complex)
            vec[basis.slices[s]] = np.eye(n)[i]
            blocks = env.apply(uq.proj @ vec)
            big = np.zeros((d, d), dtype=complex)
            pos = 0
            for m, blk in zip(mult, blocks):
                k = blk.shape[0]
                for _ in range(m):
                    big[pos:pos + k, pos:pos + k] = blk
                    pos += k
            out[i] = u @ big @ la.dagger(u)
        images.append(out)
    return Representation(bundle=bundle, dim_h=d, images=images)


@dataclass
class RepValidation:
    multiplicativity: float = 0.0
    star: float = 0.0
    inclusion: float = 0.0
    theta: float = 0.0
    nondegenerate: bool = False

    def max_defect(self) -> float:
        return max(self.multiplicativity, self.star, self.inclusion, self.theta)


def validate_representation(bundle: FellBundle, rep: Representation,
                            tol: float = la.DEFAULT_TOL) -> RepValidation:
    """All representation axioms on fiber bases, plus theta-compatibility."""
    sg = bundle.semigroup
    out = RepValidation()
    scale = 1.0 + max((la.opnorm(m) for im in rep.images for m in im), default=0.0)
    for s in sg.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            continue
        for t in sg.elements():
            ft = bundle.fibers[t]
            if ft.shape[0] == 0:
                continue
            st = sg.mul(s, t)
            for i in range(fs.shape[0]):
                lhs = rep.images[s][i] @ rep.images[t].reshape(ft.shape[0], rep.dim_h, rep.dim_h)
                prods = np.einsum("ab,jbc->jac", fs[i], ft)
                rhs = np.array([rep.apply(st, p, tol) for p in prods])
                d = float(np.max(np.abs(lhs - rhs))) if rhs.size else 0.0
                out.multiplicativity = max(out.multiplicativity, d)
                if d > tol * scale * scale * 1e3:
                    raise RepAxiomFails("multiplicativity", s, t, d)
        for i in range(fs.shape[0]):
            lhs = la.dagger(rep.images[s][i])
            rhs = rep.apply(sg.inv(s), la.dagger(fs[i]), tol)
            d = la.frob(lhs - rhs)
            out.star = max(out.star, d)
            if d > tol * scale * 1e3:
                raise RepAxiomFails("star", s, s, d)
        for u in sg.elements():
            if s == u or not sg.leq[s, u]:
                continue
            for i in range(fs.shape[0]):
                d = la.frob(rep.images[s][i] - rep.apply(u, fs[i], tol))
                out.inclusion = max(out.inclusion, d)
                if d > tol * scale * 1e3:
                    raise RepAxiomFails("inclusion", s, u, d)

    # theta-compatibility: for a in span{F_v : v <= t, u}, pi_t(a) = pi_u(a)
    for t in sg.elements():
        for u in sg.elements():
            if t >= u:
                continue
            vs = [v for v in sg.elements() if sg.leq[v, t] and sg.leq[v, u]]
            mats = [m for v in vs for m in bundle.fibers[v]]
            for m in mats:
                d = la.frob(rep.apply(t, m, tol) - rep.apply(u, m, tol))
                out.theta = max(out.theta, d)
                if d > tol * scale * 1e3:
                    raise RepAxiomFails("theta", t, u, d)

    iu = rep.images[sg.unit]
    if iu.shape[0] == 0:
        out.nondegenerate = False
    else:
        cols = np.concatenate([m for m in iu], axis=1)
        sv = np.linalg.svd(cols, compute_uv=False)
        rank = int(np.sum(sv > max(la.DEFAULT_TOL, tol) * max(1.0, sv[0] if sv.size else 1.0)))
        out.nondegenerate = rank == rep.dim_h
    rep.nondegenerate = out.nondegenerate
    return out


def pi1_faithful(bundle: FellBundle, rep: Representation, tol: float = la.DEFAULT_TOL) -> bool:
    iu = rep.images[bundle.semigroup.unit]
    n1 = iu.shape[0]
    if n1 == 0:
        return bundle.fiber_dim(bundle.semigroup.unit) == 0
    rows = iu.reshape(n1, -1)
    sv = np.linalg.svd(rows, compute_uv=False)
    return la.rank_from_singvals(sv, tol, scale=max(1.0, float(sv[0]))) == n1


# -- the two Hilbert spaces of the absorption principle -------------------------

@dataclass
class PiLambdaSpace:
    """l^2_pi(S, H): quotient of fiberwise section space by the 1_{st*}-form."""

    labels: tuple            # (s, k): k-th ONB vector of H_s
    slices: dict             # s -> slice
    vectors: dict            # s -> (d, h_s) ONB columns of H_s
    gram: np.ndarray
    coords: np.ndarray       # (dim, n_generators) quotient coordinates

    @property
    def dim(self) -> int:
        return int(self.coords.shape[0])


@dataclass
class AbsorptionData:
    bundle: FellBundle
    rep: Representation
    space: PiLambdaSpace                 # right side: l^2_pi(S, H)
    left_labels: tuple                   # (s, i, v): fiber basis element x ONB of H
    left_gram: np.ndarray
    left_coords: np.ndarray              # quotient coords of l^2(A) (x)_{pi_1} H
    u_matrix: np.ndarray                 # U_pi in quotient coordinates
    unitarity_defect: float

    def pi_lambda(self, s: int, a: np.ndarray, tol: float = la.DEFAULT_TOL) -> np.ndarray:
        return _pi_lambda_matrix(self, s, a, tol)

    def induced(self, s: int, a: np.ndarray, tol: float = la.DEFAULT_TOL) -> np.ndarray:
        return _induced_matrix(self, s, a, tol)


def _h_spaces(bundle: FellBundle, rep: Representation, tol: float) -> dict:
    out = {}
    for s in bundle.semigroup.elements():
        im = rep.images[s]
        if im.shape[0] == 0:
            continue
        cols = np.concatenate([m for m in im], axis=1)
        u, sv, _ = np.linalg.svd(cols, full_matrices=False)
        r = la.rank_from_singvals(sv, tol, scale=max(1.0, float(sv[0]) if sv.size else 1.0))
        if r:
            out[s] = u[:, :r]
    return out


def _pi1_of(bundle: FellBundle, rep: Representation, mat: np.ndarray, tol: float) -> np.ndarray:
    """pi_1 applied to an element of A_1 given as a carrier matrix."""
    return rep.apply(bundle.semigroup.unit, mat, tol)


def build_pi_lambda(bundle: FellBundle, rep: Representation,
                    tol: float = la.DEFAULT_TOL) -> AbsorptionData:
    """Construct l^2_pi(S,H), the induced module l^2(A) (x)_{pi_1} H, and U_pi.

    The two Gram forms are computed from different formulas (the projection
    pairing <v delta_s, w delta_t> = <v, pi_1(1_{st*}) w> on one side, the
    expectation pairing <f (x) v, g (x) w> = <v, pi_1(P(f* g)) w> on the
    other); U_pi maps f (x) v to pi_s(f(s)) v delta_s and its unitarity is
    the content of the absorption setup.
    """
    sg = bundle.semigroup
    d = rep.dim_h
    if rep.nondegenerate is None:
        validate_representation(bundle, rep, tol)
    hs = _h_spaces(bundle, rep, tol)
    labels = []
    slices = {}
    k = 0
    for s in sorted(hs):
        h = hs[s].shape[1]
        slices[s] = slice(k, k + h)
        labels.extend((s, i) for i in range(h))
        k += h
    total = k
    gram_r = np.zeros((total, total), dtype=complex)
    proj_cache = {}
    for s in hs:
        for t in hs:
            r = sg.mul(s, sg.inv(t))
            if r not in proj_cache:
                proj_cache[r] = _pi1_of(bundle, rep, bundle.unit_proj(r), tol)
            gram_r[slices[s], slices[t]] = la.dagger(hs[s]) @ proj_cache[r] @ hs[t]
    coords_r, _ = la.gram_quotient(gram_r, max(tol, 1e-12))
    space = PiLambdaSpace(labels=tuple(labels), slices=slices, vectors=hs,
                          gram=gram_r, coords=coords_r)

    basis = SectionBasis.of(bundle)
    left_labels = []
    lslices = {}
    k = 0
    for s, sl in basis.slices.items():
        n = sl.stop - sl.start
        lslices[s] = slice(k, k + n * d)
        left_labels.extend((s, i, v) for i in range(n) for v in range(d))
        k += n * d
    gram_l = np.zeros((k, k), dtype=complex)
    unit_fiber = bundle.fibers[sg.unit]
    unit_images = rep.images[sg.unit]
    for s, sl in basis.slices.items():
        fs = bundle.fibers[s]
        for t, tlsl in basis.slices.items():
            ft = bundle.fibers[t]
            q = bundle.unit_proj(sg.mul(sg.inv(s), t))
            pairs = np.einsum("iba,jbc,cd->ijad", fs.conj(), ft, q).reshape((-1,) + q.shape)
            pc = la.coords_in_basis(pairs, unit_fiber, tol, what="expectation value")
            pim = np.einsum("pc,cab->pab", pc, unit_images)
            pim = pim.reshape(fs.shape[0], ft.shape[0], d, d)
            blk = np.transpose(pim, (0, 2, 1, 3)).reshape(fs.shape[0] * d, ft.shape[0] * d)
            gram_l[lslices[s], lslices[t]] = blk
    coords_l, _ = la.gram_quotient(gram_l, max(tol, 1e-12))

    # U_pi on generators: (s, i, v) -> pi_s(b_i) e_v at label s
    img = np.zeros((coords_r.shape[0], k), dtype=complex)
    for col, (s, i, v) in enumerate(left_labels):
        y = rep.images[s][i][:, v]
        if s not in hs:
            if la.frob(y) > tol * 100:
                raise RepAxiomFails("image", s, s, la.frob(y))
            continue
        u = hs[s]
        c = la.dagger(u) @ y
        if la.frob(y - u @ c) > tol * 100 * (1 + la.frob(y)):
            raise RepAxiomFails("H_s membership", s, s, la.frob(y - u @ c))
        img[:, col] = coords_r[:, slices[s]] @ c
    u_matrix = la.solve_operator(coords_l, img, tol, what="U_pi")
    eye_l = np.eye(coords_l.shape[0])
    eye_r = np.eye(coords_r.shape[0])
    unit_defect = max(la.frob(la.dagger(u_matrix) @ u_matrix - eye_l),
                      la.frob(u_matrix @ la.dagger(u_matrix) - eye_r))
    data = AbsorptionData(bundle=bundle, rep=rep, space=space, left_labels=tuple(left_labels),
                          left_gram=gram_l, left_coords=coords_l, u_matrix=u_matrix,
                          unitarity_defect=float(unit_defect))
    data._basis = basis
    data._lslices = lslices
    return data


def _pi_lambda_matrix(data: AbsorptionData, s: int, a: np.ndarray, tol: float) -> np.ndarray:
    """pi^Lambda_s(a delta_s): v_t delta_t -> pi_s(a) v_t delta_{st}."""
    bundle, rep, space = data.bundle, data.rep, data.space
    sg = bundle.semigroup
    pa = rep.apply(s, a, tol)
    img = np.zeros((space.dim, len(space.labels)), dtype=complex)
    for col, (t, kk) in enumerate(space.labels):
        st = sg.mul(s, t)
        y = pa @ space.vectors[t][:, kk]
        if la.frob(y) < 1e-14:
            continue
        if st not in space.vectors:
            if la.frob(y) > tol * 100 * (1 + la.opnorm(pa)):
                raise RepAxiomFails("pi-lambda image", s, t, la.frob(y))
            continue
        u = space.vectors[st]
        c = la.dagger(u) @ y
        if la.frob(y - u @ c) > tol * 100 * (1 + la.frob(y)):
            raise RepAxiomFails("pi-lambda membership", s, t, la.frob(y - u @ c))
        img[:, col] = space.coords[:, space.slices[st]] @ c
    return la.solve_operator(space.coords, img, tol, what=f"pi^Lambda({s})")


def _induced_matrix(data: AbsorptionData, s: int, a: np.ndarray, tol: float) -> np.ndarray:
    """(Lambda (x) id)_s (a): (b delta_t) (x) v -> (a b) delta_{st} (x) v."""
    bundle = data.bundle
    sg = bundle.semigroup
    d = data.rep.dim_h
    basis = data._basis
    img = np.zeros((data.left_coords.shape[0], len(data.left_labels)), dtype=complex)
    for t, tsl in basis.slices.items():
        ft = bundle.fibers[t]
        st = sg.mul(s, t)
        prods = np.einsum("ab,jbc->jac", a, ft)
        if st not in basis.slices:
            if la.residual_outside_span(prods, bundle.fiber_onb[st], tol) > tol * 100:
                raise RepAxiomFails("induced image", s, t, 1.0)
            continue
        cmat = la.coords_in_basis(prods, bundle.fibers[st], tol, what=f"fiber {st}")
        nst = basis.slices[st].stop - basis.slices[st].start
        for j in range(ft.shape[0]):
            for v in range(d):
                col = data._lslices[t].start + j * d + v
                dest = data.left_coords[:, data._lslices[st]].reshape(
                    data.left_coords.shape[0], nst, d)[:, :, v]
                img[:, col] = dest @ cmat[j]
    return la.solve_operator(data.left_coords, img, tol, what=f"induced({s})")


@dataclass
class AbsorptionReport:
    unitarity_defect: float
    intertwining_defect: float
    pi1_faithful: bool
    generated_dim: Optional[int] = None
    reduced_dim: Optional[int] = None

    @property
    def ok(self) -> bool:
        dims = self.generated_dim == self.reduced_dim if self.pi1_faithful else True
        return self.unitarity_defect < 1e-8 and self.intertwining_defect < 1e-8 and dims


def verify_absorption(bundle: FellBundle, rep: Representation,
                      tol: float = la.DEFAULT_TOL,
                      reduced_dim: Optional[int] = None) -> AbsorptionReport:
    """U_pi unitarity and the intertwining pi^Lambda U = U (Lambda (x) id).

    With a faithful unit part the algebra generated by the pi^Lambda images
    is a copy of the reduced cross-sectional algebra; its dimension is
    compared against the independently computed reduced dimension.
    """
    data = build_pi_lambda(bundle, rep, tol)
    worst = 0.0
    mats = []
    for s in bundle.semigroup.elements():
        for a in bundle.fibers[s]:
            pl = data.pi_lambda(s, a, tol)
            lhs = pl @ data.u_matrix
            rhs = data.u_matrix @ data.induced(s, a, tol)
            worst = max(worst, la.frob(lhs - rhs))
            mats.append(pl)
    faithful = pi1_faithful(bundle, rep, tol)
    gen_dim = None
    if faithful and mats:
        # the pi^Lambda images of the single-fiber classes span an algebra
        arr = np.array(mats)
        basis = la.onb_of_mats(arr, tol, scale=max(la.frob(m) for m in mats))
        prods = np.array([mats[i] @ mats[j] for i in range(min(8, len(mats)))
                          for j in range(min(8, len(mats)))])
        if la.residual_outside_span(prods, basis, tol) > 1e-6 * (1 + la.frob(prods)):
            raise RepAxiomFails("pi-lambda closure", 0, 0, 1.0)
        gen_dim = int(basis.shape[0])
    if reduced_dim is None and faithful:
        from .sections import regular_representation
        reduced_dim = regular_representation(bundle, tol).presentation.algebra_dim
    return AbsorptionReport(unitarity_defect=data.unitarity_defect,
                            intertwining_defect=float(worst),
                            pi1_faithful=faithful,
                            generated_dim=gen_dim, reduced_dim=reduced_dim)


# -- approximation property ------------------------------------------------------

@dataclass
class Witness:
    """Finite net of finitely supported sections s -> F_{ss*}."""

    sections: list    # each: dict s -> (N, N) matrix

    def support(self) -> set:
        out = set()
        for xi in self.sections:
            out |= set(xi)
        return out


@dataclass
class APReport:
    bound: float
    defect: float
    per_section: list = field(default_factory=list)

    def passes(self, tol: float = 1e-8) -> bool:
        return self.defect <= tol


def _check_section_membership(bundle: FellBundle, xi: dict, tol: float) -> None:
    sg = bundle.semigroup
    for s, m in xi.items():
        ss = sg.mul(s, sg.inv(s))
        res = la.residual_outside_span(la.as_complex(m)[None], bundle.fiber_onb[ss], tol)
        if res > tol * 100 * (1 + la.frob(m)):
            raise NotASection(s)


def ap_bound(bundle: FellBundle, xi: dict) -> float:
    """|| sum_{p,t} xi(p)* xi(t) 1_{pt*} ||."""
    sg = bundle.semigroup
    n = bundle.carrier_dim
    total = np.zeros((n, n), dtype=complex)
    for p, mp in xi.items():
        for t, mt in xi.items():
            q = bundle.unit_proj(sg.mul(p, sg.inv(t)))
            total += la.dagger(mp) @ mt @ q
    return la.opnorm(total)


def ap_numerator(bundle: FellBundle, xi: dict, s: int, a: np.ndarray) -> np.ndarray:
    """sum_{p,t} 1_{p(st)*} xi(p)* a xi(t)."""
    sg = bundle.semigroup
    n = bundle.carrier_dim
    out = np.zeros((n, n), dtype=complex)
    for p, mp in xi.items():
        pm = la.dagger(mp) @ a
        for t, mt in xi.items():
            st = sg.mul(s, t)
            q = bundle.unit_proj(sg.mul(p, sg.inv(st)))
            out += q @ pm @ mt
    return out


def ap_check(bundle: FellBundle, witness: Witness, tol: float = 1e-8) -> APReport:
    """Conditions (i) and (ii) of the approximation property, finite form.

    Finite nets realize the limit exactly or not at all: the reported
    defect is the minimum over the net of the worst relative deviation of
    the double sum from a_s over all fiber basis elements.
    """
    sg = bundle.semigroup
    per = []
    for xi in witness.sections:
        _check_section_membership(bundle, xi, la.DEFAULT_TOL)
        bound = ap_bound(bundle, xi)
        worst = 0.0
        for s in sg.elements():
            for a in bundle.fibers[s]:
                got = ap_numerator(bundle, xi, s, a)
                worst = max(worst, la.opnorm(got - a) / (1.0 + la.opnorm(a)))
        per.append((bound, worst))
    if not per:
        return APReport(bound=0.0, defect=float("inf"))
    bound = max(b for b, _ in per)
    defect = min(w for _, w in per)
    return APReport(bound=float(bound), defect=float(defect), per_section=per)


def ap_synthesize(bundle: FellBundle, tol: float = la.DEFAULT_TOL) -> Witness:
    """Exact witness from the amenability witness of the germ groupoid.

    The groupoid witness value at each arrow is placed, along the canonical
    germ labels, on the identity of the unit-fiber block at the arrow's
    range; for germ bundles this gives a single section with bound 1 and
    zero defect (up to rounding).
    """
    from .groupoids import amenability_witness
    if bundle.germ is None:
        raise NotGermBundle("bundle was not built from an action or groupoid")
    germ = bundle.germ
    eta = amenability_witness(germ.groupoid)
    return witness_from_groupoid_section(bundle, eta, tol)


def witness_from_groupoid_section(bundle: FellBundle, eta, tol: float = la.DEFAULT_TOL) -> Witness:
    """Groupoid section (scalar per arrow) -> semigroup witness."""
    if bundle.germ is None:
        raise NotGermBundle("bundle was not built from an action or groupoid")
    germ = bundle.germ
    n = bundle.carrier_dim
    xi: dict = {}
    for arrow, (s, x) in enumerate(germ.labeling.canonical):
        val = complex(eta[arrow])
        if val == 0:
            continue
        upos = int(germ.groupoid.tgt[arrow])
        off, dd = germ.block_offset[upos], germ.block_dim[upos]
        mat = xi.setdefault(s, np.zeros((n, n), dtype=complex))
        for i in range(dd):
            mat[off + i, off + i] += val
    return Witness(sections=[xi])


def witness_to_groupoid_section(bundle: FellBundle, witness: Witness,
                                tol: float = la.DEFAULT_TOL) -> np.ndarray:
    """Semigroup witness -> groupoid section: eta(g) = sum_{s contains g} xi(s)(r(g)).

    Sections are read off the scalar coefficient on the identity of the
    range block (the line-bundle value when blocks are one-dimensional).
    """
    if bundle.germ is None:
        raise NotGermBundle("bundle was not built from an action or groupoid")
    germ = bundle.germ
    xi = witness.sections[0]
    sg = bundle.semigroup
    eta = np.zeros(germ.groupoid.n_arrows, dtype=complex)
    dom = [set(germ.action.maps[s].domain) for s in sg.elements()]
    for arrow in range(germ.groupoid.n_arrows):
        _, x = germ.labeling.canonical[arrow]
        upos = int(germ.groupoid.tgt[arrow])
        off, dd = germ.block_offset[upos], germ.block_dim[upos]
        total = 0.0 + 0j
        for s, mat in xi.items():
            if x in dom[s] and germ.labeling.class_of.get((s, x)) == arrow:
                total += np.trace(mat[off:off + dd, off:off + dd]) / dd
        eta[arrow] = total
    return eta


def witness_transfer(bundle: FellBundle, direction: str, data, tol: float = la.DEFAULT_TOL):
    """Convert between groupoid sections and semigroup witnesses."""
    if direction == "to_groupoid":
        return witness_to_groupoid_section(bundle, data, tol)
    if direction == "from_groupoid":
        return witness_from_groupoid_section(bundle, data, tol)
    raise ValueError(f"unknown direction {direction!r}")


# -- the completely positive compression -----------------------------------------

@dataclass
class PsiReport:
    t_norm_sq: float
    bound: float
    compression_defect: float     # Psi(pi^Lambda(a delta_s)) vs pi_s(double sum)
    phi_defect: float             # double sum vs a itself (weak containment)

    @property
    def ok(self) -> bool:
        return (self.t_norm_sq <= self.bound + 1e-9
                and self.compression_defect < 1e-8)


def psi_map(bundle: FellBundle, rep: Representation, xi: dict,
            tol: float = la.DEFAULT_TOL,
            data: Optional[AbsorptionData] = None) -> PsiReport:
    """The compression Psi(x) = T* x T along T v = sum_t pi_1(xi(t)) v delta_t.

    Verifies the norm bound ||T||^2 <= || sum xi(p)* xi(t) 1_{pt*} || and the
    displayed identity Psi(pi^Lambda(a delta_s)) = pi_s(sum 1_{p(st)*} xi(p)* a xi(t)).
    """
    _check_section_membership(bundle, xi, tol)
    sg = bundle.semigroup
    data = data or build_pi_lambda(bundle, rep, tol)
    space = data.space
    d = rep.dim_h
    tmat = np.zeros((space.dim, d), dtype=complex)
    for t, m in xi.items():
        pm = _pi1_of(bundle, rep, m, tol)
        if t not in space.vectors:
            if la.frob(pm) > tol * 100:
                raise NotASection(t)
            continue
        u = space.vectors[t]
        c = la.dagger(u) @ pm
        if la.frob(pm - u @ c) > tol * 100 * (1 + la.frob(pm)):
            raise NotASection(t)
        tmat += space.coords[:, space.slices[t]] @ c
    tsq = la.opnorm(tmat) ** 2
    bound = ap_bound(bundle, xi)

    comp_defect = 0.0
    phi_defect = 0.0
    for s in sg.elements():
        for a in bundle.fibers[s]:
            op = data.pi_lambda(s, a, tol)
            lhs = la.dagger(tmat) @ op @ tmat
            num = ap_numerator(bundle, xi, s, a)
            rhs = rep.apply(s, num, tol) if bundle.fiber_dim(s) else lhs
            comp_defect = max(comp_defect, la.frob(lhs - rhs) / (1 + la.frob(rhs)))
            phi_defect = max(phi_defect, la.opnorm(num - a) / (1 + la.opnorm(a)))
    return PsiReport(t_norm_sq=float(tsq), bound=float(bound),
                     compression_defect=float(comp_defect), phi_defect=float(phi_defect))
