"""Section algebra of a bundle, conditional expectation, crossed products.

The finitely supported sections form a *-algebra under convolution. The
expectation P sends a term at label s to its matrix times the unit
projection 1_s; its null ideal is computed from the positive Gram of the
pairing P(x* y) and quotienting yields the algebraic crossed product, whose
left regular representation gives a concrete matrix copy of the reduced
cross-sectional C*-algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg as la
from .bundle import FellBundle

BLOCK_GRAM_BUDGET = 2.0e7  # max entries of the stacked block Gram


class GramNotPSD(Exception):
    pass


class IdealNotTwoSided(Exception):
    pass


@dataclass
class CcElement:
    """Finitely supported section: label -> matrix in that fiber."""

    bundle: FellBundle
    terms: dict

    def copy(self) -> "CcElement":
        return CcElement(self.bundle, {s: m.copy() for s, m in self.terms.items()})

    def norm(self) -> float:
        return float(sum(la.frob(m) ** 2 for m in self.terms.values()) ** 0.5)


def cc_term(bundle: FellBundle, s: int, mat, tol: float = la.DEFAULT_TOL) -> CcElement:
    """Single-term section a delta_s; the matrix must lie in the fiber."""
    mat = la.as_complex(mat)
    res = la.residual_outside_span(mat[None], bundle.fiber_onb[s], tol)
    if res > tol * (1.0 + la.frob(mat)) * 100:
        raise ValueError(f"matrix not in fiber {s} (residual {res:.3e})")
    return CcElement(bundle, {s: mat})


def cc_add(x: CcElement, y: CcElement) -> CcElement:
    out = {s: m.copy() for s, m in x.terms.items()}
    for s, m in y.terms.items():
        out[s] = out.get(s, 0) + m
    return CcElement(x.bundle, out)


def cc_scale(x: CcElement, c: complex) -> CcElement:
    return CcElement(x.bundle, {s: c * m for s, m in x.terms.items()})


def cc_mul(x: CcElement, y: CcElement) -> CcElement:
    """(a delta_s)(b delta_t) = (a b) delta_{st}."""
    sg = x.bundle.semigroup
    out: dict = {}
    for s, a in x.terms.items():
        for t, b in y.terms.items():
            st = sg.mul(s, t)
            prod = a @ b
            if st in out:
                out[st] = out[st] + prod
            else:
                out[st] = prod
    return CcElement(x.bundle, out)


def cc_star(x: CcElement) -> CcElement:
    """(a delta_s)* = a* delta_{s*}."""
    sg = x.bundle.semigroup
    out: dict = {}
    for s, a in x.terms.items():
        st = sg.inv(s)
        if st in out:
            out[st] = out[st] + la.dagger(a)
        else:
            out[st] = la.dagger(a)
    return CcElement(x.bundle, out)


def expectation_P(x: CcElement) -> np.ndarray:
    """P(sum a_s delta_s) = sum a_s 1_s; identity on the unit-fiber term."""
    b = x.bundle
    n = b.carrier_dim
    out = np.zeros((n, n), dtype=complex)
    for s, a in x.terms.items():
        if s == b.semigroup.unit:
            out += a
        else:
            out += a @ b.unit_proj(s)
    return out


# -- coordinates ---------------------------------------------------------------

@dataclass(frozen=True)
class SectionBasis:
    """Global coordinates on C_c: one slot per (label, fiber basis index)."""

    labels: tuple          # (s, i) per coordinate
    slices: dict           # label s -> slice into the coordinate vector
    dim: int

    @staticmethod
    def of(bundle: FellBundle) -> "SectionBasis":
        labels = []
        slices = {}
        k = 0
        for s in bundle.semigroup.elements():
            ns = bundle.fiber_dim(s)
            if ns == 0:
                continue
            slices[s] = slice(k, k + ns)
            labels.extend((s, i) for i in range(ns))
            k += ns
        return SectionBasis(labels=tuple(labels), slices=slices, dim=k)


def coords_of(basis: SectionBasis, x: CcElement, tol: float = la.DEFAULT_TOL) -> np.ndarray:
    out = np.zeros(basis.dim, dtype=complex)
    b = x.bundle
    for s, m in x.terms.items():
        if s not in basis.slices:
            if la.frob(m) > tol:
                raise ValueError(f"term at zero fiber {s}")
            continue
        c = la.coords_in_basis(m[None], b.fibers[s], tol, what=f"fiber {s}")[0]
        out[basis.slices[s]] += c
    return out


def element_of(bundle: FellBundle, basis: SectionBasis, coords: np.ndarray) -> CcElement:
    terms = {}
    for s, sl in basis.slices.items():
        c = coords[sl]
        if np.any(np.abs(c) > 0):
            terms[s] = np.einsum("i,iab->ab", c, bundle.fibers[s])
    return CcElement(bundle, terms)


# -- Gram presentation ----------------------------------------------------------

@dataclass
class GramPresentation:
    basis: SectionBasis
    trace_gram: np.ndarray             # (B, B) scalar pairing tr(P(x* y))
    kernel_basis: np.ndarray           # rows spanning N_P in coordinates
    quotient_coords: np.ndarray        # (dim_calg, B): C_alg coordinates of basis
    dim_calg: int
    gram_eigs: np.ndarray              # eigenvalues of the trace Gram (ascending)
    block_gram: Optional[np.ndarray] = None   # (B*N, B*N) stacked A_1-valued Gram
    block_rank: Optional[int] = None   # kernel dim of N_P per the block route


def _pair_block(bundle: FellBundle, s: int, t: int) -> np.ndarray:
    """A_1-valued pairings P((a_i delta_s)* (b_j delta_t)) as (n_s, N, n_t, N)."""
    sg = bundle.semigroup
    q = bundle.unit_proj(sg.mul(sg.inv(s), t))
    yq = np.einsum("jbc,cd->jbd", bundle.fibers[t], q)
    return np.einsum("iba,jbd->iajd", bundle.fibers[s].conj(), yq)


def _trace_block(bundle: FellBundle, s: int, t: int) -> np.ndarray:
    sg = bundle.semigroup
    q = bundle.unit_proj(sg.mul(sg.inv(s), t))
    yq = np.einsum("jbc,cd->jbd", bundle.fibers[t], q)
    return np.einsum("iba,jba->ij", bundle.fibers[s].conj(), yq)


def expectation_of_star_product(bundle: FellBundle, basis: SectionBasis,
                                x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """P(xi* eta) as a matrix, for coordinate vectors xi, eta."""
    sg = bundle.semigroup
    n = bundle.carrier_dim
    out = np.zeros((n, n), dtype=complex)
    for s, sl in basis.slices.items():
        xs = x[sl]
        if not np.any(xs):
            continue
        xmat = np.einsum("i,iab->ab", xs, bundle.fibers[s])
        for t, tl in basis.slices.items():
            yt = y[tl]
            if not np.any(yt):
                continue
            ymat = np.einsum("i,iab->ab", yt, bundle.fibers[t])
            out += la.dagger(xmat) @ ymat @ bundle.unit_proj(sg.mul(sg.inv(s), t))
    return out


def gram_presentation(bundle: FellBundle, tol: float = la.DEFAULT_TOL) -> GramPresentation:
    """Scalar and A_1-valued Gram data of the pairing P(x* y) on C_c.

    The kernel (the null ideal of P) is computed from the stacked positive
    block Gram whenever it fits the memory budget; the scalar full-trace
    form is always computed, and the two rank decisions must agree. For
    oversized instances the trace form decides and a sample of kernel
    vectors is re-verified against the matrix-valued form directly.
    """
    basis = SectionBasis.of(bundle)
    B = basis.dim
    n = bundle.carrier_dim
    sg = bundle.semigroup

    trace = np.zeros((B, B), dtype=complex)
    use_block = (B * n) ** 2 <= BLOCK_GRAM_BUDGET
    block = np.zeros((B, n, B, n), dtype=complex) if use_block else None
    for s, sl in basis.slices.items():
        for t, tl in basis.slices.items():
            if use_block:
                pb = _pair_block(bundle, s, t)
                block[sl, :, tl, :] = pb
                trace[sl, tl] = np.einsum("iaja->ij", pb)
            else:
                trace[sl, tl] = _trace_block(bundle, s, t)

    trace = la.hermitize(trace)
    w = np.linalg.eigvalsh(trace)
    top = float(np.max(np.abs(w), initial=0.0))
    if top > 0 and w[0] < -1e-8 * top:
        raise GramNotPSD(f"trace Gram has negative eigenvalue {w[0]:.3e}")

    coords, kernel = la.gram_quotient(trace, max(tol, 1e-12))
    dim_calg = coords.shape[0]

    block_rank = None
    bg = None
    if use_block:
        bg = la.hermitize(block.reshape((B * n, B * n)))
        wb = np.linalg.eigvalsh(bg)
        topb = float(np.max(np.abs(wb), initial=0.0))
        if topb > 0 and wb[0] < -1e-8 * topb:
            raise GramNotPSD(f"block Gram has negative eigenvalue {wb[0]:.3e}")
        # N_P via the matrix-valued form: c in kernel iff sum_j block[.,.,j,.] c_j = 0
        flat = np.transpose(block, (0, 1, 3, 2)).reshape((B * n * n, B))
        sv = np.linalg.svd(flat, compute_uv=False)
        r = la.rank_from_singvals(sv, max(tol, 1e-12))
        block_rank = B - r
        if block_rank != kernel.shape[0]:
            raise GramNotPSD(
                f"block-form kernel dim {block_rank} != trace-form kernel dim {kernel.shape[0]}")
    else:
        # verify a sample of trace-kernel vectors against the definition
        sample = kernel[:: max(1, kernel.shape[0] // 24)] if kernel.shape[0] else kernel
        for row in sample:
            pmat = expectation_of_star_product(bundle, basis, row, row)
            if la.frob(pmat) > 1e-7 * (1.0 + top):
                raise GramNotPSD("trace-kernel vector fails P(x*x) = 0")

    return GramPresentation(basis=basis, trace_gram=trace, kernel_basis=kernel,
                            quotient_coords=coords, dim_calg=dim_calg, gram_eigs=w,
                            block_gram=bg, block_rank=block_rank)


@dataclass
class CrossedProduct:
    """Algebraic crossed product C_alg = C_c / N_P with its induced data."""

    bundle: FellBundle
    gram: GramPresentation
    dim: int
    lambda_min_ratio: float    # smallest positive / largest Gram eigenvalue

    def coords(self, x: CcElement, tol: float = la.DEFAULT_TOL) -> np.ndarray:
        return self.gram.quotient_coords @ coords_of(self.gram.basis, x, tol)


def crossed_product(bundle: FellBundle, tol: float = la.DEFAULT_TOL,
                    rng: Optional[np.random.Generator] = None,
                    ideal_checks: int = 48) -> CrossedProduct:
    """Quotient by the null ideal, with the two-sided-ideal sanity check."""
    gram = gram_presentation(bundle, tol)
    w = gram.gram_eigs
    top = float(np.max(np.abs(w), initial=0.0))
    pos = w[w > max(tol, 1e-12) * top]
    ratio = float(pos.min() / top) if pos.size else 0.0

    rng = rng or np.random.default_rng(0)
    basis = gram.basis
    kern = gram.kernel_basis
    if kern.shape[0]:
        picks = rng.integers(0, kern.shape[0], size=min(ideal_checks, 4 * kern.shape[0]))
        gens = rng.integers(0, basis.dim, size=picks.size)
        for ki, gi in zip(picks, gens):
            xi = element_of(bundle, basis, kern[ki])
            s, i = basis.labels[gi]
            g = CcElement(bundle, {s: bundle.fibers[s][i]})
            for prod in (cc_mul(xi, g), cc_mul(g, xi)):
                pv = expectation_P(cc_mul(cc_star(prod), prod))
                if la.frob(pv) > 1e-7 * (1.0 + la.frob(bundle.fibers[s][i])) ** 2:
                    raise IdealNotTwoSided(
                        f"kernel vector times generator leaves N_P (defect {la.frob(pv):.3e})")
    return CrossedProduct(bundle=bundle, gram=gram, dim=gram.dim_calg,
                          lambda_min_ratio=ratio)


# -- regular representation -----------------------------------------------------

@dataclass
class MatrixAlgebraPresentation:
    """Concrete matrix picture of an algebra: generators plus closed basis."""

    dim: int                     # ambient matrix size
    generators: list             # (label, matrix) pairs
    algebra_basis: np.ndarray    # (k, dim, dim) orthonormal
    block_sizes: Optional[tuple] = None

    @property
    def algebra_dim(self) -> int:
        return int(self.algebra_basis.shape[0])


@dataclass
class RegularRepresentation:
    """Left multiplication of C_alg on l^2(A) (x)_{A_1} C^N, in coordinates."""

    bundle: FellBundle
    presentation: MatrixAlgebraPresentation
    hilbert_dim: int
    labels: tuple                # generator labels (s, k) of the module space
    module_coords: np.ndarray    # (hilbert_dim, n_generators)
    fiber_onb_vectors: dict      # s -> (N, h_s) orthonormal columns of H_s
    lambda_defect: float         # *-homomorphism defect on generator pairs

    def matrix_of(self, s: int, a: np.ndarray, tol: float = la.DEFAULT_TOL) -> np.ndarray:
        """Lambda(a delta_s) on the induced Hilbert space."""
        return _lambda_matrix(self, s, a, tol)

    def _solve(self, img: np.ndarray, tol: float, what: str) -> np.ndarray:
        """Operator with op @ module_coords = img, via the cached pseudoinverse.

        The residual is checked on all columns when small, on a random
        sample otherwise (the full system is huge for big tensor bundles).
        """
        op = img @ self._pinv
        ncols = img.shape[1]
        if ncols <= 256:
            cols = np.arange(ncols)
        else:
            cols = np.random.default_rng(0).integers(0, ncols, size=256)
        res = la.frob(op @ self.module_coords[:, cols] - img[:, cols])
        if res > 1e-6 * (1.0 + la.frob(img[:, cols])):
            raise ValueError(f"{what}: not well-defined on the quotient (residual {res:.3e})")
        return op


def _module_generators(bundle: FellBundle, tol: float):
    """Per label, an ONB of H_s = span(F_s C^N) inside the carrier."""
    out = {}
    for s in bundle.semigroup.elements():
        fs = bundle.fibers[s]
        if fs.shape[0] == 0:
            continue
        cols = np.concatenate([m for m in fs], axis=1)
        u, sv, _ = np.linalg.svd(cols, full_matrices=False)
        r = la.rank_from_singvals(sv, tol)
        if r:
            out[s] = u[:, :r]
    return out


def _lambda_matrix(rep: RegularRepresentation, s: int, a: np.ndarray, tol: float) -> np.ndarray:
    bundle = rep.bundle
    sg = bundle.semigroup
    img = np.zeros((rep.hilbert_dim, len(rep.labels)), dtype=complex)
    for col, (t, k) in enumerate(rep.labels):
        st = sg.mul(s, t)
        y = a @ rep.fiber_onb_vectors[t][:, k]
        if la.frob(y) < 1e-14:
            continue
        if st not in rep.fiber_onb_vectors:
            if la.frob(y) > tol * 100 * (1.0 + la.opnorm(a)):
                raise ValueError("image escapes the module generators")
            continue
        u = rep.fiber_onb_vectors[st]
        c = la.dagger(u) @ y
        resid = la.frob(y - u @ c)
        if resid > tol * 100 * (1.0 + la.frob(y)):
            raise ValueError(f"image not in H_{st} (residual {resid:.3e})")
        sl = rep._slices[st]
        img[:, col] = rep.module_coords[:, sl] @ c
    return rep._solve(img, tol, what=f"Lambda({s})")


def regular_representation(bundle: FellBundle, tol: float = la.DEFAULT_TOL) -> RegularRepresentation:
    """Concrete C*_red: quotient of C_alg (x) C^N with left multiplication.

    Generators of the module are (s, v) with v in an ONB of H_s; the inner
    product <v delta_s, w delta_t> = <v, 1_{st*} w> is the A_1-valued
    pairing evaluated in the carrier. Lambda acts by left convolution and
    the generated matrix algebra is an isometric copy of C*_red.
    """
    sg = bundle.semigroup
    gens = _module_generators(bundle, tol)
    labels = []
    slices = {}
    k = 0
    for s in sorted(gens):
        h = gens[s].shape[1]
        slices[s] = slice(k, k + h)
        labels.extend((s, i) for i in range(h))
        k += h
    total = k
    gram = np.zeros((total, total), dtype=complex)
    for s in gens:
        for t in gens:
            q = bundle.unit_proj(sg.mul(s, sg.inv(t)))
            gram[slices[s], slices[t]] = la.dagger(gens[s]) @ q @ gens[t]
    coords, _ = la.gram_quotient(gram, max(tol, 1e-12))
    hdim = coords.shape[0]

    rep = RegularRepresentation(bundle=bundle, presentation=None, hilbert_dim=hdim,
                                labels=tuple(labels), module_coords=coords,
                                fiber_onb_vectors=gens, lambda_defect=0.0)
    rep._slices = slices
    rep._pinv = np.linalg.pinv(coords)

    generators = []
    mats = []
    for s in sg.elements():
        for a in bundle.fibers[s]:
            m = _lambda_matrix(rep, s, a, tol)
            generators.append(((s, len(generators)), m))
            mats.append(m)
    mats = np.array(mats) if mats else np.zeros((0, hdim, hdim))
    # the images of the single-fiber classes already span an algebra
    # (products of classes are classes), so closure is one orthonormalization;
    # product closure is still verified on a sample of generator pairs
    algebra = la.onb_of_mats(mats, tol,
                             scale=max((la.frob(m) for m in mats), default=0.0))
    _closure_spot_check(bundle, rep, mats, algebra, tol)
    pres = MatrixAlgebraPresentation(dim=hdim, generators=generators, algebra_basis=algebra)
    rep.presentation = pres

    # *-homomorphism spot check on generator pairs
    defect = 0.0
    idx = 0
    for s in sg.elements():
        for a in bundle.fibers[s]:
            m = mats[idx]
            idx += 1
            mstar = _lambda_matrix(rep, sg.inv(s), la.dagger(a), tol)
            defect = max(defect, la.frob(la.dagger(m) - mstar))
    rep.lambda_defect = defect
    return rep


def _closure_spot_check(bundle: FellBundle, rep: RegularRepresentation,
                        mats: np.ndarray, algebra: np.ndarray, tol: float,
                        samples: int = 64) -> None:
    n = mats.shape[0]
    if n == 0:
        return
    rng = np.random.default_rng(0)
    if n * n <= samples:
        pairs = [(i, j) for i in range(n) for j in range(n)]
    else:
        pairs = list(zip(rng.integers(0, n, samples), rng.integers(0, n, samples)))
    prods = np.array([mats[i] @ mats[j] for i, j in pairs])
    res = la.residual_outside_span(prods, algebra, tol)
    if res > 1e-6 * (1.0 + float(np.max(np.abs(prods), initial=0.0))):
        raise la.IllConditioned(f"generator span not product-closed (residual {res:.3e})")


def lambda_product_defect(rep: RegularRepresentation, tol: float = la.DEFAULT_TOL,
                          rng: Optional[np.random.Generator] = None,
                          samples: int = 64) -> float:
    """max || Lambda(xy) - Lambda(x)Lambda(y) || over sampled generator pairs."""
    bundle = rep.bundle
    sg = bundle.semigroup
    rng = rng or np.random.default_rng(0)
    pool = [(s, i) for s in sg.elements() for i in range(bundle.fiber_dim(s))]
    worst = 0.0
    for _ in range(min(samples, len(pool) ** 2)):
        s, i = pool[rng.integers(len(pool))]
        t, j = pool[rng.integers(len(pool))]
        a, b = bundle.fibers[s][i], bundle.fibers[t][j]
        lhs = rep.matrix_of(s, a, tol) @ rep.matrix_of(t, b, tol)
        rhs = rep.matrix_of(sg.mul(s, t), a @ b, tol)
        worst = max(worst, la.frob(lhs - rhs))
    return worst


# -- universal quotient and weak containment -------------------------------------

@dataclass
class UniversalQuotient:
    """Q_c = C_c / (label-difference ideal), as an abstract *-algebra."""

    bundle: FellBundle
    basis: SectionBasis           # coordinates on C_c
    algebra: "object"             # envelope.StarAlgebra on the quotient
    proj: np.ndarray              # (q, B): C_c coordinates -> Q_c coordinates
    lift: np.ndarray              # (B, q)
    ideal_dim: int

    @property
    def dim(self) -> int:
        return int(self.proj.shape[0])


def universal_quotient(bundle: FellBundle, tol: float = la.DEFAULT_TOL) -> UniversalQuotient:
    """Quotient of C_c by the *-ideal of label differences a(delta_s - delta_t).

    For s <= t the fiber F_s sits inside F_t; the ideal identifies the two
    labeled copies. The quotient inherits the convolution product and star,
    and its enveloping C*-algebra is the maximal cross-sectional algebra.
    """
    from .envelope import StarAlgebra
    sg = bundle.semigroup
    basis = SectionBasis.of(bundle)
    B = basis.dim
    gens = []
    for s in sg.elements():
        ns = bundle.fiber_dim(s)
        if ns == 0:
            continue
        for t in sg.elements():
            if s == t or not sg.leq[s, t]:
                continue
            coords_t = la.coords_in_basis(bundle.fibers[s], bundle.fibers[t], tol,
                                          what=f"inclusion {s}<={t}")
            for i in range(ns):
                v = np.zeros(B, dtype=complex)
                v[basis.slices[s]] = np.eye(ns)[i]
                v[basis.slices[t]] -= coords_t[i]
                gens.append(v)
    ideal = la.onb_rows(np.array(gens), tol) if gens else np.zeros((0, B), dtype=complex)
    comp = la.onb_rows(np.eye(B, dtype=complex) - ideal.conj().T @ ideal, tol) \
        if ideal.shape[0] else np.eye(B, dtype=complex)
    if ideal.shape[0]:
        mix = np.vstack([comp, ideal])
        inv = np.linalg.inv(mix.T)
        proj = inv[: comp.shape[0], :]
    else:
        proj = comp
    lift = comp.T
    q = comp.shape[0]

    def cc_of(vec: np.ndarray) -> CcElement:
        return element_of(bundle, basis, vec)

    structure = np.zeros((q, q, q), dtype=complex)
    star_mat = np.zeros((q, q), dtype=complex)
    reps = [cc_of(lift[:, i]) for i in range(q)]
    for i in range(q):
        for j in range(q):
            prod = cc_mul(reps[i], reps[j])
            structure[i, j] = proj @ coords_of(basis, prod, tol)
        star_mat[:, i] = proj @ coords_of(basis, cc_star(reps[i]), tol)
    algebra = StarAlgebra(dim=q, structure=structure, involution=star_mat)
    algebra.validate(tol)
    return UniversalQuotient(bundle=bundle, basis=basis, algebra=algebra,
                             proj=proj, lift=lift, ideal_dim=int(ideal.shape[0]))


@dataclass
class WeakContainmentReport:
    dim_qc: int
    dim_envelope: int
    dim_calg: int
    dim_red: int
    blocks_max: tuple
    blocks_red: tuple
    canonical_map_invertible: bool
    canonical_map_defect: float

    @property
    def holds(self) -> bool:
        return (self.dim_envelope == self.dim_calg == self.dim_red
                and self.blocks_max == self.blocks_red
                and self.canonical_map_invertible)


def weak_containment_report(bundle: FellBundle, tol: float = la.DEFAULT_TOL,
                            rng: Optional[np.random.Generator] = None,
                            cp: Optional[CrossedProduct] = None,
                            rr: Optional[RegularRepresentation] = None) -> WeakContainmentReport:
    """Compare the two independent pipelines to C*_max and C*_red.

    Route one: envelope of the universal quotient Q_c. Route two: Wedderburn
    decomposition of the left-regular matrix presentation. Weak containment
    at finite scale means equal dimensions, equal block multisets, and an
    invertible canonical map between the two images.
    """
    from .envelope import envelope, matrix_algebra_blocks
    uq = universal_quotient(bundle, tol)
    env = envelope(uq.algebra, rng, tol)
    cp = cp or crossed_product(bundle, tol)
    rr = rr or regular_representation(bundle, tol)
    blocks_red = matrix_algebra_blocks(rr.presentation.algebra_basis, rng, tol)

    # canonical map: envelope image -> reduced image, induced by identity on C_c
    basis = uq.basis
    B = basis.dim
    env_of = np.zeros((env.dim, B), dtype=complex) if env.dim else np.zeros((0, B), dtype=complex)
    red_of = np.zeros((rr.hilbert_dim ** 2, B), dtype=complex)
    col = 0
    for s in bundle.semigroup.elements():
        for i in range(bundle.fiber_dim(s)):
            vec = np.zeros(B, dtype=complex)
            vec[basis.slices[s]] = np.eye(bundle.fiber_dim(s))[i]
            if env.dim:
                flat = env.quotient_map @ (uq.proj @ vec)
                env_of[:, col] = flat
            red_of[:, col] = rr.matrix_of(s, bundle.fibers[s][i], tol).reshape(-1)
            col += 1
    defect = 0.0
    invertible = False
    if env.dim and env_of.size:
        try:
            tmap = la.solve_operator(env_of, red_of, tol, what="canonical max->red map")
            resid = la.frob(tmap @ env_of - red_of)
            defect = resid
            sv = np.linalg.svd(tmap, compute_uv=False)
            rk = la.rank_from_singvals(sv, max(tol, 1e-11),
                                       scale=max(1.0, float(sv[0]) if sv.size else 1.0))
            invertible = (rk == min(tmap.shape) and env.dim == rr.presentation.algebra_dim)
        except ValueError as exc:
            defect = float("inf")
            invertible = False
    return WeakContainmentReport(
        dim_qc=uq.dim, dim_envelope=env.dim, dim_calg=cp.dim,
        dim_red=rr.presentation.algebra_dim,
        blocks_max=tuple(sorted(env.block_sizes)), blocks_red=tuple(sorted(blocks_red)),
        canonical_map_invertible=bool(invertible), canonical_map_defect=float(defect))
