"""Dense complex linear algebra helpers shared by every module.

All subspaces of N x N matrices are handled through their vectorizations,
with orthonormal bases stored as column matrices. Rank decisions follow a
two-tier policy: the working threshold is ``tol`` relative to the largest
singular value, and every decision is re-checked at the coarser tier
``TIER2`` before it is trusted.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-9
TIER2 = 1e-7


class IllConditioned(Exception):
    """Raised when a rank decision differs between the two tolerance tiers."""


def as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=complex)


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def opnorm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def mats_to_rows(mats) -> np.ndarray:
    """Stack matrices (k, N, N) into row vectors (k, N*N)."""
    m = as_complex(mats)
    if m.size == 0:
        return m.reshape((0, 0))
    return m.reshape((m.shape[0], -1))


def rank_from_singvals(s: np.ndarray, tol: float = DEFAULT_TOL, scale: float = 0.0) -> int:
    """Rank with the two-tier guard; raises IllConditioned on disagreement.

    ``scale`` sets an absolute floor: singular values are compared against
    tol * max(s[0], scale), so a numerically-zero matrix of known magnitude
    does not have its noise promoted to rank.
    """
    if s.size == 0:
        return 0
    top = max(float(s[0]), float(scale))
    if top <= 0:
        return 0
    r1 = int(np.sum(s > tol * top))
    r2 = int(np.sum(s > TIER2 * top))
    if r1 != r2:
        raise IllConditioned(
            f"rank ambiguous between tolerance tiers: {r1} vs {r2} "
            f"(singular values {s.tolist()})"
        )
    return r1


def onb_rows(rows: np.ndarray, tol: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis (rows) of the row span of ``rows``."""
    rows = as_complex(rows)
    if rows.size == 0:
        return np.zeros((0, rows.shape[1] if rows.ndim == 2 else 0), dtype=complex)
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    r = rank_from_singvals(s, tol, scale=scale)
    return vh[:r]


def onb_of_mats(mats, tol: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal (Frobenius) basis of span{mats}, shape (r, N, N)."""
    mats = as_complex(mats)
    if mats.size == 0:
        return mats.reshape((0,) + mats.shape[1:])
    n = mats.shape[1]
    rows = onb_rows(mats_to_rows(mats), tol, scale=scale)
    return rows.reshape((-1, n, mats.shape[2]))


def residual_outside_span(mats, onb, tol: float = DEFAULT_TOL) -> float:
    """Largest Frobenius distance from span(onb) over the given matrices.

    ``onb`` holds orthonormal rows as produced by :func:`onb_of_mats`.
    """
    mats = as_complex(mats)
    if mats.size == 0:
        return 0.0
    rows = mats_to_rows(mats)
    if onb.size == 0:
        return float(np.max(np.linalg.norm(rows, axis=1)))
    b = mats_to_rows(onb)
    coeff = rows @ dagger(b)
    res = rows - coeff @ b
    return float(np.max(np.linalg.norm(res, axis=1)))


def coords_in_basis(mats, basis, tol: float = DEFAULT_TOL, what: str = "matrix"):
    """Least-squares coordinates of ``mats`` in (not necessarily orthonormal)
    ``basis``; raises if any residual exceeds tol relative to the input."""
    mats = as_complex(mats)
    rows = mats_to_rows(mats)
    brows = mats_to_rows(basis)
    if brows.shape[0] == 0:
        if np.max(np.abs(rows), initial=0.0) > tol:
            raise ValueError(f"{what}: nonzero element, empty basis")
        return np.zeros((rows.shape[0], 0), dtype=complex)
    sol, *_ = np.linalg.lstsq(brows.T, rows.T, rcond=None)
    res = rows - (brows.T @ sol).T
    scale = 1.0 + float(np.max(np.linalg.norm(rows, axis=1), initial=0.0))
    worst = float(np.max(np.linalg.norm(res, axis=1), initial=0.0))
    if worst > tol * scale * 100:
        raise ValueError(f"{what}: element escapes span (residual {worst:.3e})")
    return sol.T


def span_closure(seed, generators, tol: float = DEFAULT_TOL, max_rounds: int | None = None):
    """Orthonormal basis of the algebra generated: closes span(seed) under
    right multiplication by the generators (both given as (k, N, N))."""
    basis = onb_of_mats(seed, tol)
    gens = as_complex(generators)
    n = gens.shape[-1]
    rounds = 0
    while True:
        rounds += 1
        prods = np.einsum("iab,jbc->ijac", basis, gens).reshape((-1, n, n))
        new = onb_of_mats(np.concatenate([basis, prods], axis=0), tol)
        if new.shape[0] == basis.shape[0]:
            return new
        basis = new
        if max_rounds is not None and rounds > max_rounds:
            raise IllConditioned("span closure failed to stabilize")


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def support_projection(z: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Support projection of a PSD matrix via spectral interpolation.

    Eigenvalues below ``n * tol * lambda_max`` count as zero. The projection
    is a polynomial in ``z`` with zero constant term, hence it stays inside
    any ideal containing ``z``. One Newton polish (p -> 3p^2 - 2p^3, again a
    polynomial in z) tightens idempotency.
    """
    z = hermitize(as_complex(z))
    n = z.shape[0]
    w, v = np.linalg.eigh(z)
    top = float(np.max(np.abs(w), initial=0.0))
    if top <= 0.0:
        return np.zeros_like(z)
    keep = w > n * tol * top
    p = (v[:, keep] * 1.0) @ dagger(v[:, keep])
    p = 3.0 * (p @ p) - 2.0 * (p @ p @ p)
    return hermitize(p)


def projection_defect(p: np.ndarray) -> float:
    return max(frob(p @ p - p), frob(p - dagger(p)))


def psd_check(gram: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Most negative eigenvalue (0.0 if PSD) of a Hermitian Gram matrix."""
    if gram.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(hermitize(gram))
    return float(min(0.0, w[0]))


def gram_quotient(gram: np.ndarray, tol: float = DEFAULT_TOL):
    """Hausdorff quotient of a PSD Gram form.

    Returns (coords, kernel) where ``coords`` has one column per generator
    giving its coordinates in an orthonormal basis of the quotient space,
    and ``kernel`` spans (as rows) the null vectors of the form.
    """
    g = hermitize(as_complex(gram))
    if g.size == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros((0, 0), dtype=complex)
    w, v = np.linalg.eigh(g)
    top = float(np.max(np.abs(w), initial=0.0))
    if top <= 0.0:
        return np.zeros((0, g.shape[0]), dtype=complex), np.eye(g.shape[0], dtype=complex)
    pos1 = w > tol * top
    pos2 = w > TIER2 * top
    if int(pos1.sum()) != int(pos2.sum()):
        raise IllConditioned("Gram rank ambiguous between tolerance tiers")
    neg = float(min(0.0, w[0]))
    if neg < -tol * top * 10:
        raise IllConditioned(f"Gram has a significantly negative eigenvalue {neg:.3e}")
    coords = np.diag(np.sqrt(w[pos1])) @ dagger(v[:, pos1])
    kernel = dagger(v[:, ~pos1]).conj() if (~pos1).any() else np.zeros((0, g.shape[0]), dtype=complex)
    # kernel rows satisfy gram @ row ~ 0; return them as row vectors
    kernel = v[:, ~pos1].T if (~pos1).any() else np.zeros((0, g.shape[0]), dtype=complex)
    return coords, kernel


def solve_operator(dom_coords: np.ndarray, img_coords: np.ndarray, tol: float = DEFAULT_TOL,
                   what: str = "operator") -> np.ndarray:
    """Matrix L with L @ dom_coords = img_coords (least squares + residual check)."""
    if dom_coords.shape[1] == 0:
        return np.zeros((img_coords.shape[0], dom_coords.shape[0]), dtype=complex)
    sol, *_ = np.linalg.lstsq(dom_coords.T, img_coords.T, rcond=None)
    op = sol.T
    res = frob(op @ dom_coords - img_coords)
    scale = 1.0 + frob(img_coords)
    if res > 1e-6 * scale:
        raise ValueError(f"{what}: not well-defined on the quotient (residual {res:.3e})")
    return op
