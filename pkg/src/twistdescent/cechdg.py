"""Bigraded Čech hom-cochains, twisted complexes and their dg-category.

Sign conventions (all implemented literally):

* composition  ``(u·v)_{i0..i(p+r)} = (-1)^{q r} u_{i0..ip} ∘ v_{ip..i(p+r)}``
  for ``u`` of bidegree (p, q) and ``v`` of bidegree (r, s);
* ``δ`` on hom-cochains alternates over the *interior* faces ``k = 1..p``;
* ``δ`` on sheaf cochains alternates over the faces ``k = 1..p+1``;
* a twisted complex satisfies ``δa + a·a = 0``;
* the differential on morphisms is ``dφ = δφ + b·φ - (-1)^{|φ|} φ·a``.

A :class:`HomCochain` stores one matrix per key ``(tuple, q, point, n)``: the
fiber at ``point`` of the component on ``tuple`` of internal degree ``q``,
mapping source degree ``n`` of ``E_{tuple[-1]}`` to degree ``n + q`` of
``F_{tuple[0]}``.  Absent keys are zero; tuples with empty support never
appear.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .bundle import GradedBundle, SheafMorphism, restrict
from .exactla import Field, FieldMismatchError, Matrix
from .site import Site

Family = tuple  # tuple[GradedBundle, ...], one bundle on U_i per open index
Key = tuple  # (tuple[int, ...], q, point, n)


class NotClosedError(ValueError):
    pass


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


class _Accumulator:
    """Sums matrices per key, then drops zeros."""

    def __init__(self, field: Field):
        self.field = field
        self.data: dict = {}

    def add(self, key, m: Matrix, sign: int = 1) -> None:
        if sign < 0:
            m = -m
        cur = self.data.get(key)
        self.data[key] = m if cur is None else cur + m

    def result(self) -> dict:
        return {k: m for k, m in self.data.items() if not m.is_zero()}


class HomCochain:
    """An element of ``⊕_{p,q} C^p(U, Hom^q(E, F))``."""

    __slots__ = ("site", "source", "target", "blocks")

    def __init__(self, site: Site, source: Family, target: Family, blocks: Mapping[Key, Matrix], check: bool = True):
        self.site = site
        self.source = tuple(source)
        self.target = tuple(target)
        if check:
            clean = {}
            f = site.field
            for key, m in blocks.items():
                tup, q, x, n = key
                if m.field != f:
                    raise FieldMismatchError("field mismatch")
                if x not in site.support(tup):
                    raise ValueError(f"block {key} lies outside the support of {tup}")
                shape = (self.target[tup[0]].dim(x, n + q), self.source[tup[-1]].dim(x, n))
                if m.shape != shape:
                    raise ValueError(f"block {key} has shape {m.shape}, expected {shape}")
                if not m.is_zero():
                    clean[(tuple(tup), q, x, n)] = m
            blocks = clean
        self.blocks = dict(sorted(blocks.items()))

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, site: Site, source: Family, target: Family) -> "HomCochain":
        return cls(site, source, target, {}, check=False)

    @classmethod
    def from_components(cls, site: Site, source: Family, target: Family, comps: Mapping) -> "HomCochain":
        """Build from ``{(tuple, q): SheafMorphism}``."""
        blocks = {}
        for (tup, q), m in comps.items():
            if m.shift != q:
                raise ValueError("component degree disagrees with its key")
            for (x, n), mat in m.mats.items():
                blocks[(tuple(tup), q, x, n)] = mat
        return cls(site, source, target, blocks)

    def _new(self, blocks, source=None, target=None) -> "HomCochain":
        return HomCochain(
            self.site,
            self.source if source is None else source,
            self.target if target is None else target,
            blocks,
            check=False,
        )

    # -- inspection ---------------------------------------------------

    @property
    def field(self) -> Field:
        return self.site.field

    def __repr__(self) -> str:
        return f"HomCochain({len(self.blocks)} blocks, bidegrees={sorted(self.bidegrees())})"

    def is_zero(self) -> bool:
        return not self.blocks

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomCochain):
            return NotImplemented
        return self.blocks == other.blocks and self.source == other.source and self.target == other.target

    def block(self, tup, q, x, n) -> Matrix:
        m = self.blocks.get((tuple(tup), q, x, n))
        if m is not None:
            return m
        return Matrix.zeros(self.field, self.target[tup[0]].dim(x, n + q), self.source[tup[-1]].dim(x, n))

    def bidegrees(self) -> set[tuple[int, int]]:
        return {(len(t) - 1, q) for (t, q, _, _) in self.blocks}

    def total_degrees(self) -> set[int]:
        return {p + q for p, q in self.bidegrees()}

    def homogeneous(self, p: int, q: int) -> "HomCochain":
        return self._new({k: m for k, m in self.blocks.items() if len(k[0]) - 1 == p and k[1] == q})

    def of_total_degree(self, d: int) -> "HomCochain":
        return self._new({k: m for k, m in self.blocks.items() if len(k[0]) - 1 + k[1] == d})

    def cech_degree(self, p: int) -> "HomCochain":
        return self._new({k: m for k, m in self.blocks.items() if len(k[0]) - 1 == p})

    def component(self, tup, q) -> SheafMorphism:
        tup = tuple(tup)
        supp = self.site.support(tup)
        src = restrict(self.source[tup[-1]], supp)
        tgt = restrict(self.target[tup[0]], supp)
        mats = {(x, n): m for (t, qq, x, n), m in self.blocks.items() if t == tup and qq == q}
        return SheafMorphism(self.field, src, tgt, q, mats)

    def locations(self) -> list[Key]:
        return list(self.blocks)

    # -- linear structure ---------------------------------------------

    def _check_parallel(self, other: "HomCochain") -> None:
        if self.field != other.field:
            raise FieldMismatchError("field mismatch")
        if self.source != other.source or self.target != other.target:
            raise ValueError("family mismatch")

    def __add__(self, other: "HomCochain") -> "HomCochain":
        self._check_parallel(other)
        acc = _Accumulator(self.field)
        for k, m in self.blocks.items():
            acc.add(k, m)
        for k, m in other.blocks.items():
            acc.add(k, m)
        return self._new(acc.result())

    def __neg__(self) -> "HomCochain":
        return self._new({k: -m for k, m in self.blocks.items()})

    def __sub__(self, other: "HomCochain") -> "HomCochain":
        return self + (-other)

    def scale(self, c) -> "HomCochain":
        c = self.field.coerce(c)
        if c == 0:
            return self._new({})
        return self._new({k: m.scale(c) for k, m in self.blocks.items()})

    def map_blocks(self, fn: Callable[[Key, Matrix], Matrix | None]) -> "HomCochain":
        out = {}
        for k, m in self.blocks.items():
            r = fn(k, m)
            if r is not None and not r.is_zero():
                out[k] = r
        return self._new(out)


@dataclass(frozen=True)
class SheafCochain:
    """An element of ``⊕ C^p(U, E^q)``; ``blocks[(tuple, q, x)]`` is a column vector."""

    site: Site
    family: Family
    blocks: Mapping[tuple, Matrix]

    def __post_init__(self):
        clean = {}
        for (tup, q, x), v in self.blocks.items():
            if x not in self.site.support(tup):
                raise ValueError("section outside support")
            if v.shape != (self.family[tup[0]].dim(x, q), 1):
                raise ValueError(f"section at {(tup, q, x)} has shape {v.shape}")
            if not v.is_zero():
                clean[(tuple(tup), q, x)] = v
        object.__setattr__(self, "blocks", dict(sorted(clean.items())))

    def is_zero(self) -> bool:
        return not self.blocks

    def __add__(self, other: "SheafCochain") -> "SheafCochain":
        acc = _Accumulator(self.site.field)
        for k, m in self.blocks.items():
            acc.add(k, m)
        for k, m in other.blocks.items():
            acc.add(k, m)
        return SheafCochain(self.site, self.family, acc.result())


@dataclass(frozen=True)
class TwistedComplex:
    site: Site
    bundles: Family
    twist: HomCochain

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(self.bundles))
        if len(self.bundles) != self.site.n_opens:
            raise ValueError("one bundle per open is required")
        for i, b in enumerate(self.bundles):
            if b.open != self.site.opens[i]:
                raise ValueError(f"bundle {i} does not live on open {i}")
        if self.twist.source != self.bundles or self.twist.target != self.bundles:
            raise ValueError("twist is not an endomorphism cochain of the bundles")
        bad = [bd for bd in self.twist.bidegrees() if bd[0] + bd[1] != 1]
        if bad:
            raise ValueError(f"twist has pieces of total degree != 1: {sorted(bad)}")

    @property
    def field(self) -> Field:
        return self.site.field

    def local_differential(self, i: int) -> SheafMorphism:
        return self.twist.component((i,), 1)

    def degrees(self) -> list[int]:
        return sorted({n for b in self.bundles for n in b.degrees()})

    def is_zero(self) -> bool:
        return all(b.is_zero() for b in self.bundles)


@dataclass(frozen=True)
class GlobalComplex:
    site: Site
    bundle: GradedBundle
    d: SheafMorphism

    def __post_init__(self):
        if self.bundle.open != frozenset(self.site.points):
            raise ValueError("a global complex lives on all of X")
        if self.d.shift != 1 or self.d.source != self.bundle or self.d.target != self.bundle:
            raise ValueError("differential must be a degree +1 endomorphism of the bundle")

    @property
    def field(self) -> Field:
        return self.site.field

    def d_squared(self) -> SheafMorphism:
        return self.d @ self.d

    def validate(self) -> list[str]:
        return [f"d∘d != 0 at point {x}, degree {n}" for (x, n) in (self.d @ self.d).mats]

    @classmethod
    def zero(cls, site: Site) -> "GlobalComplex":
        b = GradedBundle.zero(site.points)
        return cls(site, b, SheafMorphism.zero(site.field, b, b, 1))


# ---------------------------------------------------------------------------
# Algebra


def compose(u: HomCochain, v: HomCochain) -> HomCochain:
    """Composition ``u·v`` with sign ``(-1)^{q r}``."""
    if u.field != v.field:
        raise FieldMismatchError("field mismatch")
    if v.target != u.source:
        raise ValueError("family mismatch: target of v must be the source of u")
    # index v by (first index, point, target degree)
    index = defaultdict(list)
    for (tup, s, x, n), m in v.blocks.items():
        index[(tup[0], x, n + s)].append((tup, s, n, m))
    acc = _Accumulator(u.field)
    for (tup, q, x, m_deg), um in u.blocks.items():
        for vt, s, n, vm in index.get((tup[-1], x, m_deg), ()):
            r = len(vt) - 1
            acc.add((tup + vt[1:], q + s, x, n), um @ vm, _sign(q * r))
    return HomCochain(u.site, v.source, u.target, acc.result(), check=False)


def act(u: HomCochain, c: SheafCochain) -> SheafCochain:
    """Action ``(u·c) = (-1)^{q r} u_{i0..ip}(c_{ip..})`` by evaluation."""
    if u.source != c.family:
        raise ValueError("family mismatch")
    index = defaultdict(list)
    for (tup, s, x), vec in c.blocks.items():
        index[(tup[0], x, s)].append((tup, vec))
    acc = _Accumulator(u.field)
    for (tup, q, x, n), um in u.blocks.items():
        for ct, vec in index.get((tup[-1], x, n), ()):
            r = len(ct) - 1
            acc.add((tup + ct[1:], n + q, x), um @ vec, _sign(q * r))
    return SheafCochain(u.site, u.target, acc.result())


def delta_hom(u: HomCochain) -> HomCochain:
    """``(δu)_{i0..i(p+1)} = Σ_{k=1}^{p} (-1)^k u_{..î_k..}`` restricted."""
    site = u.site
    acc = _Accumulator(u.field)
    for (tup, q, x, n), m in u.blocks.items():
        p = len(tup) - 1
        if p == 0:
            continue
        around = site.opens_containing(x)
        for k in range(1, p + 1):
            for j in around:
                acc.add((tup[:k] + (j,) + tup[k:], q, x, n), m, _sign(k))
    return u._new(acc.result())


def delta_sheaf(c: SheafCochain) -> SheafCochain:
    """``(δc)_{i0..i(p+1)} = Σ_{k=1}^{p+1} (-1)^k c_{..î_k..}`` restricted."""
    site = c.site
    acc = _Accumulator(site.field)
    for (tup, q, x), v in c.blocks.items():
        p = len(tup) - 1
        around = site.opens_containing(x)
        for k in range(1, p + 2):
            for j in around:
                acc.add((tup[:k] + (j,) + tup[k:], q, x), v, _sign(k))
    return SheafCochain(site, c.family, acc.result())


def mc_residual(t: TwistedComplex) -> HomCochain:
    """``δa + a·a``; zero iff ``t`` is a valid twisted complex."""
    return delta_hom(t.twist) + compose(t.twist, t.twist)


def hom_diff(phi: HomCochain, a: HomCochain, b: HomCochain) -> HomCochain:
    """``dφ = δφ + b·φ - (-1)^{|φ|} φ·a``, applied per total degree."""
    if a.source != phi.source or b.target != phi.target:
        raise ValueError("family mismatch")
    out = HomCochain.zero(phi.site, phi.source, phi.target)
    for d in sorted(phi.total_degrees()):
        piece = phi.of_total_degree(d)
        term = delta_hom(piece) + compose(b, piece)
        right = compose(piece, a)
        term = term + right if d % 2 else term - right
        out = out + term
    return out


def identity_morphism(t: TwistedComplex) -> HomCochain:
    f = t.field
    blocks = {}
    for i, b in enumerate(t.bundles):
        for (x, n), d in b.dims.items():
            blocks[((i,), 0, x, n)] = Matrix.identity(f, d)
    return HomCochain(t.site, t.bundles, t.bundles, blocks, check=False)


def is_closed(phi: HomCochain, src: TwistedComplex, tgt: TwistedComplex) -> bool:
    return hom_diff(phi, src.twist, tgt.twist).is_zero()


# ---------------------------------------------------------------------------
# Shift and cone


def shift(t: TwistedComplex) -> TwistedComplex:
    """``E[1]^n = E^{n+1}``, ``a[1]^{k,1-k} = (-1)^{k-1} a^{k,1-k}``."""
    bundles = tuple(b.shift(1) for b in t.bundles)
    blocks = {}
    for (tup, q, x, n), m in t.twist.blocks.items():
        k = len(tup) - 1
        blocks[(tup, q, x, n - 1)] = m if k % 2 == 1 else -m
    return TwistedComplex(t.site, bundles, HomCochain(t.site, bundles, bundles, blocks, check=False))


def shift_morphism(phi: HomCochain) -> HomCochain:
    """``φ[1]^{p,q} = (-1)^q φ^{p,q}`` between the shifted families."""
    src = tuple(b.shift(1) for b in phi.source)
    tgt = tuple(b.shift(1) for b in phi.target)
    blocks = {(tup, q, x, n - 1): (m if q % 2 == 0 else -m) for (tup, q, x, n), m in phi.blocks.items()}
    return HomCochain(phi.site, src, tgt, blocks, check=False)


def cone_bundles(src: TwistedComplex, tgt: TwistedComplex) -> tuple:
    """``G^n_i = E^{n+1}_i ⊕ F^n_i``."""
    out = []
    for e, f in zip(src.bundles, tgt.bundles):
        dims = defaultdict(int)
        for (x, n), d in e.dims.items():
            dims[(x, n - 1)] += d
        for (x, n), d in f.dims.items():
            dims[(x, n)] += d
        out.append(GradedBundle(e.open, dict(dims)))
    return tuple(out)


def cone_from_table(
    phi: HomCochain,
    src: TwistedComplex,
    tgt: TwistedComplex,
    a_sign: Callable[[int], int],
    phi_sign: Callable[[int], int],
) -> TwistedComplex:
    """Block twist ``c^k = (a_sign(k) a^k, 0; phi_sign(k) φ^{k,-k}, b^k)``.

    No validity check; callers decide which sign table to trust.
    """
    site = phi.site
    f = site.field
    G = cone_bundles(src, tgt)
    E, F = src.bundles, tgt.bundles
    cells: dict = {}

    def cell(key):
        c = cells.get(key)
        if c is None:
            tup, q, x, n = key
            rows = G[tup[0]].dim(x, n + q)
            cols = G[tup[-1]].dim(x, n)
            c = cells[key] = [[f.zero] * cols for _ in range(rows)]
        return c

    def embed(key, m: Matrix, r0: int, c0: int, sign: int) -> None:
        target = cell(key)
        red = f.reduce
        for i, row in enumerate(m.rows):
            trow = target[r0 + i]
            for j, v in enumerate(row):
                if v != 0:
                    trow[c0 + j] = red(trow[c0 + j] + (v if sign > 0 else -v))

    for (tup, q, x, m_deg), m in src.twist.blocks.items():
        k = len(tup) - 1
        # E^{m} -> E^{m+q}: G-degree m-1 -> m-1+q
        embed((tup, q, x, m_deg - 1), m, 0, 0, a_sign(k))
    for (tup, q, x, m_deg), m in phi.blocks.items():
        k = len(tup) - 1
        # E^{m} -> F^{m-k}: G-degree m-1 -> m-k
        row_off = E[tup[0]].dim(x, m_deg - k + 1)
        embed((tup, 1 - k, x, m_deg - 1), m, row_off, 0, phi_sign(k))
    for (tup, q, x, m_deg), m in tgt.twist.blocks.items():
        # F^{m} -> F^{m+q}: G-degree m -> m+q
        row_off = E[tup[0]].dim(x, m_deg + q + 1)
        col_off = E[tup[-1]].dim(x, m_deg + 1)
        embed((tup, q, x, m_deg), m, row_off, col_off, 1)

    blocks = {}
    for key, rows in cells.items():
        tup, q, x, n = key
        mat = Matrix(f, len(rows), G[tup[-1]].dim(x, n), rows)
        if not mat.is_zero():
            blocks[key] = mat
    return TwistedComplex(site, G, HomCochain(site, G, G, blocks, check=False))


def _check_closed_degree_zero(phi: HomCochain, src: TwistedComplex, tgt: TwistedComplex) -> None:
    if phi.source != src.bundles or phi.target != tgt.bundles:
        raise ValueError("family mismatch")
    if phi.total_degrees() - {0}:
        raise NotClosedError("cone requires a morphism of total degree 0")
    if not is_closed(phi, src, tgt):
        raise NotClosedError("cone requires a closed morphism")


def cone(phi: HomCochain, src: TwistedComplex, tgt: TwistedComplex) -> TwistedComplex:
    """Mapping cone of a closed degree-0 morphism ``src -> tgt``.

    ``c^{k,1-k} = ((-1)^{k-1} a^{k,1-k}, 0; φ^{k,-k}, b^{k,1-k})``.  The shifted
    source block carries the shift signs; the morphism block carries none,
    which is what makes ``δc + c·c = 0`` under the composition sign
    ``(-1)^{q r}``.
    """
    _check_closed_degree_zero(phi, src, tgt)
    return cone_from_table(phi, src, tgt, lambda k: _sign(k - 1), lambda k: 1)


# ---------------------------------------------------------------------------
# Twisting functor


def twist_object(E: GlobalComplex) -> TwistedComplex:
    """Restrict to each open: ``a^{0,1}_i = d|``, ``a^{1,0}_{ij} = id``, higher pieces zero."""
    bad = E.validate()
    if bad:
        raise ValueError("not a complex: " + "; ".join(bad))
    site = E.site
    f = site.field
    bundles = tuple(restrict(E.bundle, u) for u in site.opens)
    blocks = {}
    for i, u in enumerate(site.opens):
        for (x, n), m in E.d.mats.items():
            if x in u:
                blocks[((i,), 1, x, n)] = m
    for i, ui in enumerate(site.opens):
        for j, uj in enumerate(site.opens):
            for x in ui & uj:
                for n in E.bundle.degrees():
                    d = E.bundle.dim(x, n)
                    if d:
                        blocks[((i, j), 0, x, n)] = Matrix.identity(f, d)
    tw = HomCochain(site, bundles, bundles, blocks, check=False)
    return TwistedComplex(site, bundles, tw)


def twist_morphism(fmap: SheafMorphism, src: TwistedComplex, tgt: TwistedComplex) -> HomCochain:
    """Image of a global map: only the ``(0, n)`` piece, equal to the restriction."""
    site = src.site
    blocks = {}
    for i, u in enumerate(site.opens):
        for (x, n), m in fmap.mats.items():
            if x in u:
                blocks[((i,), fmap.shift, x, n)] = m
    return HomCochain(site, src.bundles, tgt.bundles, blocks)


def global_hom_diff(psi: SheafMorphism, E: GlobalComplex, F: GlobalComplex) -> SheafMorphism:
    """``dψ = d_F ∘ ψ - (-1)^{|ψ|} ψ ∘ d_E``."""
    left = F.d @ psi
    right = psi @ E.d
    left = SheafMorphism(psi.field, E.bundle, F.bundle, psi.shift + 1, left.mats)
    right = SheafMorphism(psi.field, E.bundle, F.bundle, psi.shift + 1, right.mats)
    return left + right if psi.shift % 2 else left - right
