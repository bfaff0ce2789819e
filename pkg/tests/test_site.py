import pytest
from hypothesis import given, strategies as st

from twistdescent.exactla import GF, QQ
from twistdescent.site import PartitionOfUnity, Site, SiteError, build_nerve, default_partition, validate_site


def two_opens():
    return Site.build(["1", "2", "3"], [["1", "2"], ["2", "3"]])


def test_nerve_two_opens():
    # indices are 0-based: U_0 = {1,2}, U_1 = {2,3}
    assert build_nerve(two_opens(), 2) == [(0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)]


def test_nerve_disjoint():
    s = Site.build(["1", "2"], [["1"], ["2"]])
    assert build_nerve(s, 2) == [(0,), (1,), (0, 0), (1, 1)]


def test_nerve_singletons():
    assert build_nerve(two_opens(), 1) == [(0,), (1,)]
    with pytest.raises(ValueError):
        build_nerve(two_opens(), 0)


def test_default_partition_least_index():
    s = two_opens()
    assert [s.rho(0, x) for x in "123"] == [1, 1, 0]
    assert [s.rho(1, x) for x in "123"] == [0, 0, 1]


def test_default_partition_single_open_and_prime_field():
    s = Site.build(["a", "b"], [["a", "b"]], GF(7))
    assert s.rho(0, "a") == 1 and s.rho(0, "b") == 1
    assert validate_site(s) == []


def test_not_a_cover():
    with pytest.raises(SiteError, match="not a cover"):
        default_partition(("1", "2"), (frozenset({"1"}),))


def test_validate_reports():
    assert validate_site(two_opens()) == []
    bad = Site.build(["1", "2", "3"], [["1", "2"], ["2", "3"]], rho=[{"1": 1, "2": 1}, {"1": 1, "3": 1}])
    diags = validate_site(bad)
    assert "support violation at point 1, index 1" in diags
    assert "partition sum != 1 at 1" in diags
    zero = Site.build(["1", "2"], [["1", "2"]], rho=[{"1": 1}])
    assert validate_site(zero) == ["partition sum != 1 at 2"]
    uncovered = Site(("1", "2"), (frozenset({"1"}),), QQ, PartitionOfUnity(({"1": 1},)))
    assert any(d.startswith("not a cover") for d in validate_site(uncovered))


covers = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.sets(st.integers(0, n - 1), min_size=1), min_size=1, max_size=3).filter(
        lambda us: set().union(*us) == set(range(n))
    ).map(lambda us: (n, us))
)


@given(covers, st.sampled_from([QQ, GF(7)]))
def test_default_partition_always_valid(cover, field):
    n, us = cover
    s = Site.build([str(i) for i in range(n)], [[str(i) for i in u] for u in us], field)
    assert validate_site(s) == []


@given(covers, st.integers(1, 3))
def test_nerve_monotone_and_nonempty(cover, m):
    n, us = cover
    s = Site.build([str(i) for i in range(n)], [[str(i) for i in u] for u in us])
    short, long_ = build_nerve(s, m), build_nerve(s, m + 1)
    assert [t for t in long_ if len(t) <= m] == short
    assert all(s.support(t) for t in long_)
    for L in range(1, m + 2):
        block = [t for t in long_ if len(t) == L]
        assert block == sorted(block)
