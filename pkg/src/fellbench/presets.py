"""Preset bundles and randomized valid bundles for the test corpus."""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import linalg as la
from .bundle import (FellBundle, from_groupoid_bundle, from_isg_action,
                     group_zero_line_bundle, make_bundle, tensor_with, trivial_bundle)
from .groupoids import PartialBijection, enumerate_bisections, pair_groupoid, wagner_preston_action
from .semigroup import (InverseSemigroup, TooLarge, cyclic_group, group_with_zero,
                        semilattice_chain, sim_partial_maps, symmetric_inverse_monoid)


def preset_trivial_group(n: int) -> FellBundle:
    b = trivial_bundle(cyclic_group(n))
    object.__setattr__(b, "name", f"trivial-group-{n}")
    return b


def preset_symmetric_inverse_monoid(n: int) -> FellBundle:
    if n > 3:
        raise TooLarge("trivial bundle over the symmetric inverse monoid is kept to n <= 3")
    b = trivial_bundle(symmetric_inverse_monoid(n))
    object.__setattr__(b, "name", f"symmetric-inverse-monoid-{n}")
    return b


def preset_pair_groupoid(m: int) -> FellBundle:
    """Line bundle over the pair groupoid on m points, indexed by I_m."""
    sg = symmetric_inverse_monoid(m)
    maps = [PartialBijection(p) for p in sim_partial_maps(m)]
    action = wagner_preston_action(sg, maps, m)
    b = from_isg_action(sg, action, name=f"pair-groupoid-{m}")
    return b


def preset_semilattice_chain(k: int) -> FellBundle:
    b = trivial_bundle(semilattice_chain(k))
    object.__setattr__(b, "name", f"semilattice-chain-{k}")
    return b


def preset_group_zero_line(g: int, m: int) -> FellBundle:
    b = group_zero_line_bundle(group_with_zero(g), m)
    object.__setattr__(b, "name", f"group-zero-line-{g}-{m}")
    return b


_PRESETS = {
    "trivial-group": (preset_trivial_group, 1),
    "symmetric-inverse-monoid": (preset_symmetric_inverse_monoid, 1),
    "pair-groupoid": (preset_pair_groupoid, 1),
    "semilattice-chain": (preset_semilattice_chain, 1),
    "group-zero-line": (preset_group_zero_line, 2),
}


def preset_bundle(kind: str, params) -> FellBundle:
    if kind == "random":
        if len(params) != 3:
            raise ValueError("random preset takes: max_semigroup_size carrier_budget seed")
        return random_bundle(int(params[0]), int(params[1]), int(params[2]))
    if kind not in _PRESETS:
        raise ValueError(f"unknown preset {kind!r}; choose from "
                         f"{sorted(_PRESETS) + ['random']}")
    fn, arity = _PRESETS[kind]
    if len(params) != arity:
        raise ValueError(f"preset {kind} takes {arity} parameter(s)")
    return fn(*[int(p) for p in params])


def corpus() -> list:
    """The preset corpus used throughout the acceptance suite."""
    out = []
    for n in range(1, 7):
        out.append(preset_trivial_group(n))
    for n in range(1, 4):
        out.append(preset_symmetric_inverse_monoid(n))
    for m in range(2, 5):
        out.append(preset_pair_groupoid(m))
    for k in range(2, 6):
        out.append(preset_semilattice_chain(k))
    for g, m in ((2, 1), (2, 4), (3, 2), (4, 3)):
        out.append(preset_group_zero_line(g, m))
    return out


def germ_corpus() -> list:
    """Corpus members carrying germ provenance (all presets do)."""
    return [b for b in corpus() if b.germ is not None]


def direct_sum_bundles(b1: FellBundle, b2: FellBundle, *, name: str = "sum",
                       tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Blockwise direct sum of two bundles over the same semigroup."""
    assert b1.semigroup.size == b2.semigroup.size
    n1, n2 = b1.carrier_dim, b2.carrier_dim
    n = n1 + n2
    fibers = []
    for s in b1.semigroup.elements():
        mats = []
        for m in b1.fibers[s]:
            big = np.zeros((n, n), dtype=complex)
            big[:n1, :n1] = m
            mats.append(big)
        for m in b2.fibers[s]:
            big = np.zeros((n, n), dtype=complex)
            big[n1:, n1:] = m
            mats.append(big)
        fibers.append(np.array(mats) if mats else np.zeros((0, n, n), dtype=complex))
    return make_bundle(b1.semigroup, fibers, name=name, tol=tol)


def _random_recombine(bundle: FellBundle, rng: np.random.Generator,
                      tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Random invertible recombination of every fiber basis."""
    fibers = []
    for s in bundle.semigroup.elements():
        f = bundle.fibers[s]
        k = f.shape[0]
        if k == 0:
            fibers.append(f.copy())
            continue
        while True:
            c = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            if np.linalg.cond(c) < 1e3:
                break
        fibers.append(np.einsum("ij,jab->iab", c, f))
    return make_bundle(bundle.semigroup, fibers, name=bundle.name + "+mix", tol=tol)


def _random_conjugate(bundle: FellBundle, rng: np.random.Generator,
                      tol: float = la.DEFAULT_TOL) -> FellBundle:
    """Conjugate the whole carrier by one random unitary."""
    n = bundle.carrier_dim
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(z)
    fibers = [np.einsum("ab,ibc,cd->iad", q, bundle.fibers[s], la.dagger(q))
              if bundle.fiber_dim(s) else bundle.fibers[s].copy()
              for s in bundle.semigroup.elements()]
    return make_bundle(bundle.semigroup, fibers, name=bundle.name + "+conj", tol=tol)


def random_bundle(max_sg_size: int, carrier_budget: int, seed: int) -> FellBundle:
    """A randomized valid Fell bundle within the given size budgets.

    Draws a base construction over a small semigroup, optionally tensors
    with a matrix block or direct-sums two constructions, then applies a
    random fiber-basis recombination and a random unitary conjugation.
    Every output passes full validation.
    """
    rng = np.random.default_rng(seed)
    catalog = []
    catalog.append(lambda: trivial_bundle(cyclic_group(int(rng.integers(1, 5)))))
    catalog.append(lambda: trivial_bundle(semilattice_chain(int(rng.integers(2, 5)))))
    catalog.append(lambda: trivial_bundle(symmetric_inverse_monoid(1)))
    if max_sg_size >= 7:
        catalog.append(lambda: trivial_bundle(symmetric_inverse_monoid(2)))
        catalog.append(lambda: preset_pair_groupoid(int(rng.integers(2, 4))))
    catalog.append(lambda: group_zero_line_bundle(
        group_with_zero(int(rng.integers(2, 5))), int(rng.integers(1, 4))))
    base = catalog[int(rng.integers(len(catalog)))]()
    if base.semigroup.size > max_sg_size:
        base = trivial_bundle(cyclic_group(min(4, max_sg_size)))
    if base.carrier_dim * 2 <= carrier_budget and rng.random() < 0.5:
        k = 2 if base.carrier_dim * 2 <= carrier_budget else 1
        if base.carrier_dim * 3 <= carrier_budget and rng.random() < 0.3:
            k = 3
        base = tensor_with(base, [k])
    elif base.carrier_dim * 2 <= carrier_budget and rng.random() < 0.4:
        base = direct_sum_bundles(base, _random_recombine(base, rng), name=base.name + "+sum")
    out = _random_conjugate(_random_recombine(base, rng), rng)
    object.__setattr__(out, "name", f"random-{seed}")
    return out
