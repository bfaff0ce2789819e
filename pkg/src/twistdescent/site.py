"""Discrete model of a compact space with a soft structure sheaf.

The structure sheaf is field-valued functions on the points, so sections over
any subset extend and partitions of unity always exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import product
from typing import Iterable, Mapping, Sequence

from .exactla import QQ, Field


class SiteError(ValueError):
    pass


@dataclass(frozen=True)
class PartitionOfUnity:
    """``rho[i][x]`` is the value of the i-th function at point x (absent = 0)."""

    rho: tuple[Mapping[str, object], ...]

    def value(self, i: int, x: str):
        return self.rho[i].get(x, 0)


@dataclass(frozen=True)
class Site:
    points: tuple[str, ...]
    opens: tuple[frozenset, ...]
    field: Field = QQ
    pou: PartitionOfUnity | None = dc_field(default=None, compare=False)

    @classmethod
    def build(
        cls,
        points: Iterable,
        opens: Sequence[Iterable],
        field: Field = QQ,
        rho: Sequence[Mapping] | None = None,
    ) -> "Site":
        """Construct a site, using the least-index partition unless ``rho`` is given."""
        pts = tuple(str(p) for p in points)
        ops = tuple(frozenset(str(p) for p in u) for u in opens)
        if rho is None:
            pou = default_partition(pts, ops, field)
        else:
            pou = PartitionOfUnity(
                tuple({str(x): field.coerce(v) for x, v in r.items()} for r in rho)
            )
        return cls(pts, ops, field, pou)

    @property
    def n_opens(self) -> int:
        return len(self.opens)

    def support(self, tup: Sequence[int]) -> frozenset:
        s = self.opens[tup[0]]
        for i in tup[1:]:
            s = s & self.opens[i]
        return s

    def opens_containing(self, x: str) -> tuple[int, ...]:
        return tuple(i for i, u in enumerate(self.opens) if x in u)

    def anchor(self, x: str) -> int:
        """Least index of an open containing ``x``."""
        for i, u in enumerate(self.opens):
            if x in u:
                return i
        raise SiteError(f"point {x} is not covered")

    def rho(self, i: int, x: str):
        return self.pou.value(i, x)

    def tuples_at(self, x: str, length: int) -> list[tuple[int, ...]]:
        """All index tuples of the given length whose support contains ``x``."""
        idx = self.opens_containing(x)
        return list(product(idx, repeat=length))


def default_partition(points: Sequence[str], opens: Sequence[frozenset], field: Field = QQ) -> PartitionOfUnity:
    """Least-index partition: rho_i(x) = 1 iff i is the first open containing x."""
    rho: list[dict] = [dict() for _ in opens]
    for x in points:
        first = next((i for i, u in enumerate(opens) if x in u), None)
        if first is None:
            raise SiteError("not a cover")
        rho[first][x] = field.one
    return PartitionOfUnity(tuple(rho))


def build_nerve(site: Site, max_length: int) -> list[tuple[int, ...]]:
    """Index tuples of length 1..max_length with nonempty support.

    Repeated indices are included; output is lexicographic within each length,
    shorter tuples first.
    """
    if max_length < 1:
        raise ValueError("max_length must be at least 1")
    out: list[tuple[int, ...]] = []
    frontier = [((i,), u) for i, u in enumerate(site.opens) if u]
    for _ in range(max_length):
        out.extend(t for t, _ in frontier)
        nxt = []
        for t, s in frontier:
            for j, u in enumerate(site.opens):
                s2 = s & u
                if s2:
                    nxt.append((t + (j,), s2))
        frontier = nxt
    return out


def validate_site(site: Site) -> list[str]:
    """Human-readable diagnostics; empty iff the site is valid."""
    diags: list[str] = []
    f = site.field
    pts = set(site.points)
    for i, u in enumerate(site.opens):
        extra = sorted(u - pts)
        if extra:
            diags.append(f"open {i} contains unknown points {extra}")
    for x in site.points:
        if not any(x in u for u in site.opens):
            diags.append(f"not a cover: point {x} lies in no open")
    if site.pou is None:
        diags.append("missing partition of unity")
        return diags
    if len(site.pou.rho) != len(site.opens):
        diags.append("partition of unity has wrong number of functions")
        return diags
    for i, r in enumerate(site.pou.rho):
        for x, v in sorted(r.items()):
            if x not in pts:
                diags.append(f"partition function {i} defined at unknown point {x}")
            elif v != 0 and x not in site.opens[i]:
                diags.append(f"support violation at point {x}, index {i}")
    for x in site.points:
        total = f.reduce(sum((site.pou.value(i, x) for i in range(len(site.opens))), f.zero))
        if total != f.one:
            diags.append(f"partition sum != 1 at {x}")
    return diags
