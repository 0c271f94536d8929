import numpy as np
import pytest

from fellbench import groupoids as gp
from fellbench import semigroup as sg


def wp_action(n):
    s = sg.symmetric_inverse_monoid(n)
    maps = [gp.PartialBijection(m) for m in sg.sim_partial_maps(n)]
    return s, gp.wagner_preston_action(s, maps, n)


def test_wagner_preston_valid():
    s, act = wp_action(2)
    gp.validate_action(s, act)   # no raise


def test_group_swap_action_valid():
    z2 = sg.cyclic_group(2)
    act = gp.Action(semigroup=z2, space_size=2, maps=(
        gp.identity_map(2), gp.PartialBijection(((0, 1), (1, 0)))))
    gp.validate_action(z2, act)


def test_idempotent_moving_point_rejected():
    chain = sg.semilattice_chain(2)
    act = gp.Action(semigroup=chain, space_size=2, maps=(
        gp.identity_map(2), gp.PartialBijection(((0, 1), (1, 0)))))
    with pytest.raises(gp.IdempotentNotIdentity):
        gp.validate_action(chain, act)


def test_not_functorial_rejected():
    # chain 1 > e > f acting by partial identities on disjoint points:
    # map(e) o map(f) is empty but e f = f, so functoriality fails
    chain = sg.semilattice_chain(3)
    bad = gp.Action(semigroup=chain, space_size=2, maps=(
        gp.identity_map(2),
        gp.PartialBijection(((0, 0),)),
        gp.PartialBijection(((1, 1),))))
    with pytest.raises(gp.NotFunctorial):
        gp.validate_action(chain, bad)


def test_inverse_mismatch_rejected():
    z3 = sg.cyclic_group(3)
    cyc = gp.PartialBijection(((0, 1), (1, 2), (2, 0)))
    bad = gp.Action(semigroup=z3, space_size=3,
                    maps=(gp.identity_map(3), cyc, cyc))
    with pytest.raises(gp.InverseMismatch):
        gp.validate_action(z3, bad)


def test_germ_groupoid_of_group_is_group():
    z3 = sg.cyclic_group(3)
    act = gp.Action(semigroup=z3, space_size=1,
                    maps=tuple(gp.identity_map(1) for _ in range(3)))
    g, lab = gp.germ_groupoid(z3, act)
    g.validate()
    assert g.n_arrows == 3 and g.n_units == 1


def test_germ_groupoid_i1_characters():
    # I_1 = {1, 0} acting on its 2 characters: two units and nothing else
    i1 = sg.symmetric_inverse_monoid(1)
    from fellbench.bundle import trivial_bundle
    b = trivial_bundle(i1)
    g = b.germ.groupoid
    assert g.n_units == 2 and g.n_arrows == 2


def test_germ_groupoid_i3_is_pair_groupoid():
    s, act = wp_action(3)
    g, lab = gp.germ_groupoid(s, act)
    g.validate()
    assert g.n_units == 3 and g.n_arrows == 9
    ok, iso = gp.reconstruct_check(gp.pair_groupoid(3), gp.enumerate_bisections(gp.pair_groupoid(3)))
    assert ok


def test_germ_src_tgt(i2=None):
    s, act = wp_action(2)
    g, lab = gp.germ_groupoid(s, act)
    for k, (elt, x) in enumerate(lab.canonical):
        assert lab.point_of_unit[int(g.src[k])] == x
        assert lab.point_of_unit[int(g.tgt[k])] == act.maps[elt](x)


def test_germ_composition_well_defined():
    # replacing representatives by germ-equivalent ones gives the same composite
    s, act = wp_action(2)
    g, lab = gp.germ_groupoid(s, act)
    members = {}
    for (elt, x), k in lab.class_of.items():
        members.setdefault(k, []).append((elt, x))
    for h in range(g.n_arrows):
        for k in range(g.n_arrows):
            hk = int(g.compose[h, k])
            if hk < 0:
                continue
            for (e1, x1) in members[h]:
                for (e2, x2) in members[k]:
                    if act.maps[e2](x2) != x1:
                        continue
                    assert lab.class_of[(s.mul(e1, e2), x2)] == hk


def test_singletons_are_wide():
    g = gp.pair_groupoid(2)
    singles = [frozenset([a]) for a in range(g.n_arrows)]
    assert gp.is_wide(g, singles)


def test_group_single_bisection():
    # the whole group is one bisection only in the trivial-group case;
    # for |G| > 1 the source map is not injective on G
    triv = gp.group_groupoid([[0]], 0)
    assert gp.is_wide(triv, [frozenset({0})])
    z2 = gp.group_groupoid([[0, 1], [1, 0]], 0)
    with pytest.raises(gp.NotABisection):
        gp.is_wide(z2, [frozenset(range(2))])
    assert gp.is_wide(z2, [frozenset({0}), frozenset({1})])


def test_not_a_bisection_raises():
    g = gp.pair_groupoid(2)
    with pytest.raises(gp.NotABisection):
        gp.is_wide(g, [frozenset(range(g.n_arrows))])


def test_wide_fails_without_refinement():
    g = gp.pair_groupoid(3)   # arrow (i, j) = 3i + j; units 0, 4, 8
    u = frozenset({0, 4})
    v = frozenset({0, 8})
    fam = [u, v, frozenset({4}), frozenset({8})]
    fam += [frozenset({a}) for a in range(9) if a not in (0, 4, 8)]
    # covers, but no member refines u n v = {0}
    assert not gp.is_wide(g, fam)
    assert gp.is_wide(g, fam + [frozenset({0})])


def test_reconstruct_group_case():
    table = [[0, 1, 2], [1, 2, 0], [2, 0, 1]]
    g = gp.group_groupoid(table, 0)
    fam = gp.enumerate_bisections(g)
    ok, iso = gp.reconstruct_check(g, fam)
    assert ok


def test_reconstruct_reports_uncovered_arrow():
    g = gp.pair_groupoid(3)
    fam = [u for u in gp.enumerate_bisections(g) if 4 not in u]
    ok, diag = gp.reconstruct_check(g, fam)
    assert not ok and diag["arrow"] == 4


def test_reconstruct_rejects_nonclosed_family():
    g = gp.pair_groupoid(2)
    fam = [frozenset({1}), frozenset({2}), frozenset({0}), frozenset({3})]
    with pytest.raises(gp.NotClosedUnderProduct):
        gp.reconstruct_check(g, fam)


def test_bisection_enumeration_guard():
    g = gp.pair_groupoid(5)
    with pytest.raises(gp.NotClosedUnderProduct):
        gp.enumerate_bisections(g)


@pytest.mark.parametrize("make,expect", [
    (lambda: gp.pair_groupoid(4), {0.5}),
    (lambda: gp.group_groupoid([[0, 1, 2], [1, 2, 0], [2, 0, 1]], 0), {1 / np.sqrt(3)}),
])
def test_amenability_witness_values(make, expect):
    g = make()
    eta = gp.amenability_witness(g)
    assert set(np.round(np.unique(eta), 12)) == set(np.round(sorted(expect), 12))
    assert gp.amenability_defect(g, eta) < 1e-12


def test_amenability_disjoint_union():
    g = gp.disjoint_union(gp.pair_groupoid(2),
                          gp.group_groupoid([[0, 1, 2], [1, 2, 0], [2, 0, 1]], 0))
    eta = gp.amenability_witness(g)
    vals = sorted(np.unique(np.round(eta, 12)))
    assert vals == sorted(np.round([1 / np.sqrt(2), 1 / np.sqrt(3)], 12))
    assert gp.amenability_defect(g, eta) < 1e-12
