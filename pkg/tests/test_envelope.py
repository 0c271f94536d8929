import numpy as np
import pytest

from fellbench import envelope as ev
from fellbench import linalg as la


def poly_nilpotent_star_algebra():
    """C[x]/(x^2) with x self-adjoint, basis {1, x}."""
    structure = np.zeros((2, 2, 2), dtype=complex)
    structure[0, 0, 0] = 1
    structure[0, 1, 1] = 1
    structure[1, 0, 1] = 1
    return ev.StarAlgebra(2, structure, np.eye(2, dtype=complex))


def full_matrix_star_algebra(sizes, involution="adjoint", h=None):
    """(+) M_k as a StarAlgebra; involution 'adjoint', 'swap' (pairs), or h-twisted."""
    total = sum(sizes)
    units = []
    off = 0
    for k in sizes:
        for i in range(k):
            for j in range(k):
                m = np.zeros((total, total), dtype=complex)
                m[off + i, off + j] = 1
                units.append(m)
        off += k
    basis = np.array(units)
    d = basis.shape[0]
    structure = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        prods = np.einsum("ab,jbc->jac", basis[i], basis)
        structure[i] = la.coords_in_basis(prods, basis, what="product")
    if involution == "adjoint":
        target = np.conj(np.transpose(basis, (0, 2, 1)))
    elif involution == "swap":
        assert len(sizes) == 2 and sizes[0] == sizes[1]
        k = sizes[0]
        swap = np.zeros((total, total), dtype=complex)
        swap[:k, k:] = np.eye(k)
        swap[k:, :k] = np.eye(k)
        target = np.array([swap @ la.dagger(m) @ swap for m in basis])
    else:
        assert h is not None
        hin = np.linalg.inv(h)
        target = np.array([h @ la.dagger(m) @ hin for m in basis])
    invol = la.coords_in_basis(target, basis, what="involution").T
    return ev.StarAlgebra(d, structure, invol)


def test_radical_simple_is_zero():
    b = full_matrix_star_algebra([2])
    assert ev.radical(b).shape[0] == 0


def test_radical_of_nilpotent_part():
    b = poly_nilpotent_star_algebra()
    rad = ev.radical(b)
    assert rad.shape[0] == 1
    # the radical is the span of x (second coordinate)
    assert abs(rad[0][0]) < 1e-10 and abs(abs(rad[0][1]) - 1.0) < 1e-10


def test_radical_upper_triangular():
    # upper-triangular 2x2 with "flip" involution (a b; 0 c)* = (cbar bbar; 0 abar):
    # radical = strictly upper part
    basis = np.array([
        [[1, 0], [0, 0]],
        [[0, 1], [0, 0]],
        [[0, 0], [0, 1]],
    ], dtype=complex)
    d = 3
    structure = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        prods = np.einsum("ab,jbc->jac", basis[i], basis)
        structure[i] = la.coords_in_basis(prods, basis, what="product")
    invol = np.zeros((d, d), dtype=complex)
    invol[0, 2] = 1   # star(e22) = e11
    invol[2, 0] = 1   # star(e11) = e22
    invol[1, 1] = 1   # star(e12) = e12
    b = ev.StarAlgebra(d, structure, invol)
    b.validate()
    rad = ev.radical(b)
    assert rad.shape[0] == 1
    assert abs(abs(rad[0][1]) - 1.0) < 1e-10


def test_block_decompose_adjoint_sum():
    b = full_matrix_star_algebra([2, 3])
    blocks = ev.block_decompose(b)
    assert sorted(blk.size for blk in blocks) == [2, 3]
    for i, blk in enumerate(blocks):
        assert blk.star_partner == i
        # h is the identity up to the +1 normalization
        assert blk.h_definite
        assert la.frob(blk.h - np.eye(blk.size)) < 1e-6


def test_block_decompose_swap_pair():
    b = full_matrix_star_algebra([2, 2], involution="swap")
    blocks = ev.block_decompose(b)
    assert sorted(blk.size for blk in blocks) == [2, 2]
    assert all(blk.star_partner != i for i, blk in enumerate(blocks))


def test_block_decompose_indefinite_h():
    b = full_matrix_star_algebra([2], involution="h", h=np.diag([1.0, -1.0]).astype(complex))
    blocks = ev.block_decompose(b)
    assert len(blocks) == 1
    blk = blocks[0]
    assert blk.star_partner == 0
    assert blk.h_definite is False
    w = np.linalg.eigvalsh(blk.h)
    assert (w > 0).sum() == 1 and (w < 0).sum() == 1   # inertia (1, 1)


def test_block_decompose_definite_h_kept():
    h = np.array([[2.0, 0.5], [0.5, 1.0]], dtype=complex)
    b = full_matrix_star_algebra([2], involution="h", h=h)
    env = ev.envelope(b)
    assert env.block_sizes == (2,)
    assert env.hom_defect < 1e-9


def test_envelope_nilpotent_to_scalar():
    env = ev.envelope(poly_nilpotent_star_algebra())
    assert env.block_sizes == (1,)
    assert env.radical_dim == 1
    # x maps to 0: a self-adjoint nilpotent in a C*-algebra is 0
    img = env.apply(np.array([0.0, 1.0], dtype=complex))
    assert la.frob(img[0]) < 1e-10


def test_envelope_swap_pair_is_zero():
    env = ev.envelope(full_matrix_star_algebra([2, 2], involution="swap"))
    assert env.block_sizes == ()
    assert env.dim == 0


def test_envelope_indefinite_is_zero():
    env = ev.envelope(full_matrix_star_algebra(
        [2], involution="h", h=np.diag([1.0, -1.0]).astype(complex)))
    assert env.block_sizes == ()


def test_envelope_idempotent_on_cstar_algebras():
    env = ev.envelope(full_matrix_star_algebra([2, 3, 1]))
    assert env.block_sizes == (1, 2, 3)
    # rebuild the image as a matrix *-algebra and envelope again
    total = sum(k * k for k in env.block_sizes)
    mats = []
    eye = np.eye(9 + 4 + 1, dtype=complex)
    # use the quotient map images of a basis as the new algebra
    d = 4 + 9 + 1
    imgs = []
    for i in range(d):
        x = np.zeros(d, dtype=complex)
        x[i] = 1
        blocks = env.apply(x)
        n = sum(b.shape[0] for b in blocks)
        big = np.zeros((n, n), dtype=complex)
        pos = 0
        for blk in blocks:
            k = blk.shape[0]
            big[pos:pos + k, pos:pos + k] = blk
            pos += k
        imgs.append(big)
    again = ev.envelope_of_matrix_algebra(np.array(imgs))
    assert again.block_sizes == env.block_sizes


def test_envelope_quotient_map_star_hom():
    env = ev.envelope(full_matrix_star_algebra([2, 2], involution="adjoint"))
    assert env.hom_defect < 1e-9


def test_envelope_kernel_dimension():
    b = poly_nilpotent_star_algebra()
    env = ev.envelope(b)
    assert env.kernel_basis.shape[0] == b.dim - env.dim == 1


def test_random_multiplicity_representations_factor(rng):
    # every *-rep of the algebra is a multiplicity pattern over the envelope
    # blocks; each such pattern composed with the quotient map kills its kernel
    b = full_matrix_star_algebra([2, 1])
    env = ev.envelope(b)
    for _ in range(20):
        mult = rng.integers(0, 3, size=len(env.out_blocks))
        for row in env.kernel_basis:
            blocks = env.apply(row)
            for m, blk in zip(mult, blocks):
                assert m * la.frob(blk) < 1e-9


def test_envelope_matches_reduced_pipeline(trivial_i2):
    from fellbench import sections as xs
    uq = xs.universal_quotient(trivial_i2)
    env = ev.envelope(uq.algebra)
    assert env.dim == 7
    assert env.block_sizes == (1, 1, 1, 2)


def test_seed_determinism(trivial_i2, monkeypatch):
    from fellbench import sections as xs
    monkeypatch.setenv("FB_SEED", "12345")
    uq = xs.universal_quotient(trivial_i2)
    e1 = ev.envelope(uq.algebra)
    e2 = ev.envelope(uq.algebra)
    assert e1.block_sizes == e2.block_sizes
    assert la.frob(e1.quotient_map - e2.quotient_map) == 0.0
