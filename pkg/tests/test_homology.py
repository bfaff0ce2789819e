import random

import pytest
from hypothesis import given, settings, strategies as st

from builders import random_twisted, t_image_pair
from oracles import sympy_rank
from twistdescent.bundle import GradedBundle, SheafMorphism
from twistdescent.cechdg import (
    GlobalComplex,
    HomCochain,
    NotClosedError,
    compose,
    hom_diff,
    identity_morphism,
    twist_object,
)
from twistdescent.exactla import GF, QQ, Matrix
from twistdescent.generate import random_closed_morphism, random_cochain, random_global_complex, random_site
from twistdescent.homology import (
    NotAComplexError,
    TwistedHomAtPoint,
    hom_complex_cohomology,
    is_weak_equivalence,
    local_homology,
)
from twistdescent.site import Site

FIELDS = st.sampled_from([QQ, GF(7)])
SEEDS = st.integers(0, 2**32 - 1)
X = frozenset({"x"})


def m(*rows):
    return Matrix.from_rows(QQ, [list(r) for r in rows])


def two_term(c):
    b = GradedBundle(X, {("x", 0): 1, ("x", 1): 1})
    return b, SheafMorphism(QQ, b, b, 1, {("x", 0): m([c])} if c else {})


def test_local_homology_examples():
    b, d = two_term(1)
    assert local_homology(b, d) == {("x", 0): 0, ("x", 1): 0}
    b, d = two_term(0)
    assert local_homology(b, d) == {("x", 0): 1, ("x", 1): 1}


def test_local_homology_rejects_non_complex():
    b = GradedBundle(X, {("x", n): 1 for n in range(3)})
    d = SheafMorphism(QQ, b, b, 1, {("x", 0): m([1]), ("x", 1): m([2])})
    with pytest.raises(NotAComplexError, match="point x, degree 0"):
        local_homology(b, d)


@given(SEEDS, FIELDS)
def test_local_homology_matches_rank_oracle(seed, f):
    rng = random.Random(seed)
    site = random_site(rng, f, 3, 1)
    E = random_global_complex(rng, site, (0, 3), 3)
    h = local_homology(E.bundle, E.d)
    for (x, n), dim in h.items():
        ker = E.bundle.dim(x, n) - sympy_rank(E.d.block(x, n))
        assert dim == ker - sympy_rank(E.d.block(x, n - 1)) >= 0


@given(SEEDS, FIELDS)
def test_euler_characteristic(seed, f):
    rng = random.Random(seed)
    site = random_site(rng, f, 3, 1)
    E = random_global_complex(rng, site, (-1, 2), 3)
    h = local_homology(E.bundle, E.d)
    for x in site.points:
        lhs = sum((-1) ** n * d for (y, n), d in h.items() if y == x)
        rhs = sum((-1) ** n * E.bundle.dim(x, n) for n in E.bundle.degrees())
        assert lhs == rhs


@given(SEEDS, FIELDS)
def test_identity_is_weak_equivalence(seed, f):
    rng = random.Random(seed)
    t = random_twisted(rng, random_site(rng, f, 3, 2))
    v = is_weak_equivalence(identity_morphism(t), t, t)
    assert v.ok and v.witness == ()


def test_zero_morphism_is_not_weak_equivalence():
    site = Site.build(["x"], [["x"]], QQ)
    b, d = two_term(0)
    t = twist_object(GlobalComplex(site, b, d))
    v = is_weak_equivalence(HomCochain.zero(site, t.bundles, t.bundles), t, t)
    assert not v.ok
    assert v.witness == ((0, "x", 0), (0, "x", 1))
    assert v.table[(0, "x", 0)] == (1, 1, 0)


def test_weak_equivalence_rejects_non_closed():
    site = Site.build(["x"], [["x"]], QQ)
    b, d = two_term(1)
    t = twist_object(GlobalComplex(site, b, d))
    phi = HomCochain(site, t.bundles, t.bundles, {((0,), 0, "x", 0): m([1])})
    with pytest.raises(NotClosedError):
        is_weak_equivalence(phi, t, t)
    with pytest.raises(NotClosedError):
        is_weak_equivalence(HomCochain(site, t.bundles, t.bundles, {((0,), 1, "x", 0): m([1])}), t, t)


@given(SEEDS, FIELDS)
def test_composite_of_weak_equivalences(seed, f):
    rng = random.Random(seed)
    site = random_site(rng, f, 3, 2)
    t = random_twisted(rng, site)
    one = identity_morphism(t)
    # closed automorphism: identity plus a boundary
    psi = random_cochain(rng, site, t.bundles, t.bundles, -1, max_p=1, density=0.3)
    phi = one + hom_diff(psi, t.twist, t.twist)
    a, b = is_weak_equivalence(phi, t, t), is_weak_equivalence(one, t, t)
    assert a.ok and b.ok
    assert is_weak_equivalence(compose(phi, phi), t, t).ok


def test_hom_k_k():
    site = Site.build(["x"], [["x"]], QQ)
    b = GradedBundle(X, {("x", 0): 1})
    K = GlobalComplex(site, b, SheafMorphism.zero(QQ, b, b, 1))
    assert hom_complex_cohomology(K, K) == {0: 1}
    tK = twist_object(K)
    assert hom_complex_cohomology(tK, tK) == {0: 1}
    Z = GlobalComplex.zero(site)
    assert all(v == 0 for v in hom_complex_cohomology(K, Z, range(-2, 3)).values())
    assert all(v == 0 for v in hom_complex_cohomology(tK, twist_object(Z), range(-2, 3)).values())


def test_hom_cohomology_of_acyclic_pair_vanishes():
    site = Site.build(["x", "y"], [["x", "y"], ["y"]], QQ)
    b = GradedBundle(frozenset({"x", "y"}), {(p, n): 1 for p in "xy" for n in (0, 1)})
    d = SheafMorphism(QQ, b, b, 1, {("x", 0): m([1]), ("y", 0): m([2])})
    A = GlobalComplex(site, b, d)
    tA = twist_object(A)
    assert set(hom_complex_cohomology(A, A).values()) == {0}
    assert set(hom_complex_cohomology(tA, tA).values()) == {0}


def test_mixed_pair_rejected():
    site = Site.build(["x"], [["x"]], QQ)
    Z = GlobalComplex.zero(site)
    with pytest.raises(TypeError):
        hom_complex_cohomology(Z, twist_object(Z))


@settings(max_examples=15)
@given(SEEDS, FIELDS)
def test_materialized_differential_matches_hom_diff(seed, f):
    rng = random.Random(seed)
    site = random_site(rng, f, 2, 2)
    a, b = random_twisted(rng, site), random_twisted(rng, site)
    x = rng.choice(site.points)
    hp = TwistedHomAtPoint(a, b, x)
    N = rng.randint(*hp.qrange) if hp.qrange else 0
    basis, target = hp.basis(N), hp.basis(N + 1)
    for col, unit in zip(hp.columns(N), basis):
        tup, q, n, r, c = unit
        rows = [[f.zero] * a.bundles[tup[-1]].dim(x, n) for _ in range(b.bundles[tup[0]].dim(x, n + q))]
        rows[r][c] = f.one
        e = HomCochain(site, a.bundles, b.bundles, {(tup, q, x, n): Matrix(f, len(rows), len(rows[0]), rows)})
        d = hom_diff(e, a.twist, b.twist)
        ref = {}
        for (t2, q2, x2, n2), blk in d.blocks.items():
            for i, row in enumerate(blk.rows):
                for j, v in enumerate(row):
                    if v != 0:
                        ref[(t2, q2, n2, i, j)] = v
        assert {target[k]: v for k, v in col.items()} == ref


@given(SEEDS, FIELDS)
def test_global_and_twisted_hom_cohomology_agree(seed, f):
    rng = random.Random(seed)
    site = random_site(rng, f, rng.randint(1, 3), rng.randint(1, 3))
    E, F = random_global_complex(rng, site, (0, 1)), random_global_complex(rng, site, (0, 1))
    g = hom_complex_cohomology(E, F)
    assert hom_complex_cohomology(twist_object(E), twist_object(F), g.keys()) == g


@settings(max_examples=10)
@given(SEEDS)
def test_gauged_images_have_same_hom_cohomology(seed):
    rng = random.Random(seed)
    site = random_site(rng, QQ, 2, 2)
    E, t, h, F, s, g = t_image_pair(rng, site)
    ref = hom_complex_cohomology(E, F)
    assert hom_complex_cohomology(t, s, ref.keys()) == ref
    phi = random_closed_morphism(rng, E, F, t, s, h, g)
    assert hom_diff(phi, t.twist, s.twist).is_zero()
