"""Pointwise homology, weak equivalences and hom-complex cohomology."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field as dc_field
from itertools import product

from .bundle import GradedBundle, SheafMorphism
from .cechdg import GlobalComplex, HomCochain, NotClosedError, TwistedComplex, hom_diff
from .exactla import Matrix, kernel_basis, rank, sparse_rank


class NotAComplexError(ValueError):
    pass


def local_homology(bundle: GradedBundle, d: SheafMorphism) -> dict:
    """``{(x, n): dim H^n}`` for every point of the bundle and every degree with a fiber."""
    if d.shift != 1:
        raise ValueError("differential must have degree +1")
    sq = d @ d
    if not sq.is_zero():
        x, n = next(iter(sq.mats))
        raise NotAComplexError(f"d∘d != 0 at point {x}, degree {n}")
    out = {}
    for x in bundle.points():
        for n in bundle.degrees():
            dim = bundle.dim(x, n)
            if not dim:
                continue
            h = dim - rank(d.block(x, n)) - rank(d.block(x, n - 1))
            out[(x, n)] = h
    return out


def _induced_rank(phi: Matrix, d_src: Matrix, d_tgt_in: Matrix) -> int:
    """Rank of the map induced on homology: dim(φ(Z) + B) - dim B."""
    z = kernel_basis(d_src)
    img = phi @ z
    b_rank = rank(d_tgt_in)
    if img.ncols == 0:
        return 0
    both = Matrix.hstack(phi.field, [img, d_tgt_in], img.nrows)
    return rank(both) - b_rank


@dataclass(frozen=True)
class WeqVerdict:
    ok: bool
    witness: tuple = ()
    table: dict = dc_field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def is_weak_equivalence(phi: HomCochain, src: TwistedComplex, tgt: TwistedComplex) -> WeqVerdict:
    """Does ``φ^{0,0}_i`` induce pointwise homology isomorphisms on every open?

    ``table[(i, x, n)] = (dim H(E), dim H(F), rank of induced map)``; the
    witness lists the entries where these are not all equal.
    """
    if phi.total_degrees() - {0}:
        raise NotClosedError("weak equivalences have total degree 0")
    if not hom_diff(phi, src.twist, tgt.twist).is_zero():
        raise NotClosedError("morphism is not closed")
    table = {}
    bad = []
    for i, u in enumerate(src.site.opens):
        a = src.local_differential(i)
        b = tgt.local_differential(i)
        f0 = phi.component((i,), 0)
        degs = sorted(set(src.bundles[i].degrees()) | set(tgt.bundles[i].degrees()))
        for x in sorted(u):
            for n in degs:
                he = src.bundles[i].dim(x, n) - rank(a.block(x, n)) - rank(a.block(x, n - 1))
                hf = tgt.bundles[i].dim(x, n) - rank(b.block(x, n)) - rank(b.block(x, n - 1))
                r = _induced_rank(f0.block(x, n), a.block(x, n), b.block(x, n - 1))
                table[(i, x, n)] = (he, hf, r)
                if not he == hf == r:
                    bad.append((i, x, n))
    return WeqVerdict(not bad, tuple(bad), table)


# ---------------------------------------------------------------------------
# Hom complexes, materialized per point


def _hom_degree_range(src_bundles, tgt_bundles) -> tuple[int, int] | None:
    es = [n for b in src_bundles for n in b.degrees()]
    fs = [n for b in tgt_bundles for n in b.degrees()]
    if not es or not fs:
        return None
    return min(fs) - max(es), max(fs) - min(es)


class TwistedHomAtPoint:
    """The summand of ``C^•(U, Hom^•(E, F))`` living at one point.

    Basis vectors are matrix units ``(tuple, q, n, r, c)``.
    """

    def __init__(self, src: TwistedComplex, tgt: TwistedComplex, x: str):
        self.src, self.tgt, self.x = src, tgt, x
        self.site = src.site
        self.idx = self.site.opens_containing(x)
        rng = _hom_degree_range(src.bundles, tgt.bundles)
        self.qrange = rng
        self._bases: dict = {}
        # twist blocks at x, indexed for left and right multiplication
        self.b_by_last = defaultdict(list)
        for (tup, s, xx, m), mat in tgt.twist.blocks.items():
            if xx == x:
                self.b_by_last[(tup[-1], m)].append((tup, s, mat))
        self.a_by_first = defaultdict(list)
        for (tup, s, xx, m), mat in src.twist.blocks.items():
            if xx == x:
                self.a_by_first[(tup[0], m + s)].append((tup, s, m, mat))

    def basis(self, N: int) -> list:
        if N in self._bases:
            return self._bases[N][0]
        out = []
        if self.qrange is not None:
            qlo, qhi = self.qrange
            x = self.x
            for p in range(max(0, N - qhi), N - qlo + 1):
                q = N - p
                for tup in product(self.idx, repeat=p + 1):
                    e = self.src.bundles[tup[-1]]
                    f = self.tgt.bundles[tup[0]]
                    for n in e.degrees():
                        rr, cc = f.dim(x, n + q), e.dim(x, n)
                        for r in range(rr):
                            for c in range(cc):
                                out.append((tup, q, n, r, c))
        self._bases[N] = (out, {v: k for k, v in enumerate(out)})
        return out

    def index(self, N: int) -> dict:
        self.basis(N)
        return self._bases[N][1]

    def image(self, N: int, unit) -> dict:
        """``d`` of one matrix unit of total degree ``N`` as ``{basis key: coeff}``."""
        f = self.site.field
        tup, q, n, r, c = unit
        p = len(tup) - 1
        out: dict = defaultdict(lambda: f.zero)
        for k in range(1, p + 1):
            for j in self.idx:
                key = (tup[:k] + (j,) + tup[k:], q, n, r, c)
                out[key] += 1 if k % 2 == 0 else -1
        for btup, s, bm in self.b_by_last.get((tup[0], n + q), ()):
            sign = -1 if (s * p) % 2 else 1
            for r2 in range(bm.nrows):
                v = bm[r2, r]
                if v != 0:
                    out[(btup + tup[1:], q + s, n, r2, c)] += sign * v
        rsign = 1 if N % 2 else -1  # - (-1)^N
        for atup, s, m, am in self.a_by_first.get((tup[-1], n), ()):
            sign = rsign * (-1 if (q * (len(atup) - 1)) % 2 else 1)
            for c2 in range(am.ncols):
                v = am[c, c2]
                if v != 0:
                    out[(tup + atup[1:], q + s, m, r, c2)] += sign * v
        return {k: f.reduce(v) for k, v in out.items() if f.reduce(v) != 0}

    def columns(self, N: int) -> list[dict]:
        idx = self.index(N + 1)
        cols = []
        for unit in self.basis(N):
            img = self.image(N, unit)
            cols.append({idx[k]: v for k, v in img.items()})
        return cols


def twisted_hom_cohomology(src: TwistedComplex, tgt: TwistedComplex, degrees=None) -> dict:
    rng = _hom_degree_range(src.bundles, tgt.bundles)
    if rng is None:
        return {} if degrees is None else {N: 0 for N in degrees}
    degrees = range(rng[0], rng[1] + 1) if degrees is None else degrees
    f = src.field
    out = {}
    pts = [HomPt for HomPt in (TwistedHomAtPoint(src, tgt, x) for x in src.site.points)]
    for N in degrees:
        total = 0
        for hp in pts:
            dim = len(hp.basis(N))
            if not dim:
                continue
            total += dim - sparse_rank(f, hp.columns(N)) - sparse_rank(f, hp.columns(N - 1))
        out[N] = total
    return out


def _global_slots(E: GlobalComplex, F: GlobalComplex, x: str, N: int) -> list:
    slots = []
    for n in E.bundle.degrees():
        for r in range(F.bundle.dim(x, n + N)):
            for c in range(E.bundle.dim(x, n)):
                slots.append((n, r, c))
    return slots


def _global_columns(E: GlobalComplex, F: GlobalComplex, x: str, N: int) -> list[dict]:
    """``dψ = d_F ψ - (-1)^N ψ d_E`` on matrix units of degree ``N`` at ``x``."""
    f = E.field
    idx = {s: k for k, s in enumerate(_global_slots(E, F, x, N + 1))}
    rsign = 1 if N % 2 else -1
    cols = []
    for n, r, c in _global_slots(E, F, x, N):
        col: dict = defaultdict(lambda: f.zero)
        dF = F.d.block(x, n + N)
        for r2 in range(dF.nrows):
            v = dF[r2, r]
            if v != 0:
                col[idx[(n, r2, c)]] += v
        dE = E.d.block(x, n - 1)
        for c2 in range(dE.ncols):
            v = dE[c, c2]
            if v != 0:
                col[idx[(n - 1, r, c2)]] += rsign * v
        cols.append({k: f.reduce(v) for k, v in col.items() if f.reduce(v) != 0})
    return cols


def global_hom_cohomology(E: GlobalComplex, F: GlobalComplex, degrees=None) -> dict:
    rng = _hom_degree_range([E.bundle], [F.bundle])
    if rng is None:
        return {} if degrees is None else {N: 0 for N in degrees}
    degrees = range(rng[0], rng[1] + 1) if degrees is None else degrees
    f = E.field
    out = {}
    for N in degrees:
        total = 0
        for x in E.site.points:
            dim = len(_global_slots(E, F, x, N))
            if dim:
                total += dim - sparse_rank(f, _global_columns(E, F, x, N)) - sparse_rank(f, _global_columns(E, F, x, N - 1))
        out[N] = total
    return out


def hom_complex_cohomology(source, target, degrees=None) -> dict:
    """``{N: dim H^N Hom(source, target)}`` for a twisted or a global pair.

    Without ``degrees``, reports every degree in which the graded hom
    ``Hom^q`` can be nonzero.
    """
    if isinstance(source, TwistedComplex) and isinstance(target, TwistedComplex):
        return twisted_hom_cohomology(source, target, degrees)
    if isinstance(source, GlobalComplex) and isinstance(target, GlobalComplex):
        return global_hom_cohomology(source, target, degrees)
    raise TypeError("hom_complex_cohomology needs two twisted or two global complexes")
