"""Locally free modules on opens of a discrete site and the maps between them.

A :class:`GradedBundle` records the fiber dimension at every (point, degree);
a :class:`SheafMorphism` records one matrix per (point, source degree).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .exactla import Field, FieldMismatchError, Matrix, kernel_basis


@dataclass(frozen=True)
class GradedBundle:
    open: frozenset
    dims: Mapping[tuple[str, int], int]

    def __post_init__(self):
        for (x, n), d in self.dims.items():
            if x not in self.open:
                raise ValueError(f"fiber at {x} outside the open set")
            if d < 0:
                raise ValueError("negative fiber dimension")
        # canonical: drop zero entries
        object.__setattr__(self, "dims", {k: v for k, v in sorted(self.dims.items()) if v})

    @classmethod
    def zero(cls, open_: Iterable) -> "GradedBundle":
        return cls(frozenset(open_), {})

    @classmethod
    def constant(cls, open_: Iterable, ranks: Mapping[int, int]) -> "GradedBundle":
        """Same dimension in each degree at every point of ``open_``."""
        open_ = frozenset(open_)
        return cls(open_, {(x, n): d for x in open_ for n, d in ranks.items() if d})

    def dim(self, x: str, n: int) -> int:
        return self.dims.get((x, n), 0)

    def points(self) -> list[str]:
        return sorted(self.open)

    def degrees(self) -> list[int]:
        return sorted({n for (_, n) in self.dims})

    def window(self) -> tuple[int, int] | None:
        degs = self.degrees()
        return (degs[0], degs[-1]) if degs else None

    def is_zero(self) -> bool:
        return not self.dims

    def shift(self, k: int) -> "GradedBundle":
        """``E[k]^n = E^{n+k}``."""
        return GradedBundle(self.open, {(x, n - k): d for (x, n), d in self.dims.items()})

    def only_degree(self, n: int) -> "GradedBundle":
        return GradedBundle(self.open, {(x, m): d for (x, m), d in self.dims.items() if m == n})


@dataclass(frozen=True)
class SheafMorphism:
    """Module map of degree ``shift``: fiber (x, n) of source to (x, n+shift) of target.

    The source and target may live on different opens (e.g. restrictions to an
    overlap); only points of ``domain`` carry matrices.
    """

    field: Field
    source: GradedBundle
    target: GradedBundle
    shift: int
    mats: Mapping[tuple[str, int], Matrix]

    def __post_init__(self):
        mats = {}
        for (x, n), m in sorted(self.mats.items()):
            if m.field != self.field:
                raise FieldMismatchError("field mismatch")
            shape = (self.target.dim(x, n + self.shift), self.source.dim(x, n))
            if m.shape != shape:
                raise ValueError(f"block at ({x}, {n}) has shape {m.shape}, expected {shape}")
            if x not in self.domain:
                raise ValueError(f"block at {x} outside the common open")
            if not m.is_zero():
                mats[(x, n)] = m
        object.__setattr__(self, "mats", mats)

    @property
    def domain(self) -> frozenset:
        return self.source.open & self.target.open

    @classmethod
    def zero(cls, field: Field, source: GradedBundle, target: GradedBundle, shift: int = 0) -> "SheafMorphism":
        return cls(field, source, target, shift, {})

    @classmethod
    def identity(cls, field: Field, bundle: GradedBundle) -> "SheafMorphism":
        return cls(field, bundle, bundle, 0, {k: Matrix.identity(field, d) for k, d in bundle.dims.items()})

    @classmethod
    def from_function(cls, field, source, target, shift, fn: Callable[[str, int], Matrix]) -> "SheafMorphism":
        mats = {}
        for x in sorted(source.open & target.open):
            for n in source.degrees():
                if source.dim(x, n) and target.dim(x, n + shift):
                    mats[(x, n)] = fn(x, n)
        return cls(field, source, target, shift, mats)

    def block(self, x: str, n: int) -> Matrix:
        m = self.mats.get((x, n))
        if m is not None:
            return m
        return Matrix.zeros(self.field, self.target.dim(x, n + self.shift), self.source.dim(x, n))

    def is_zero(self) -> bool:
        return not self.mats

    def _like(self, mats) -> "SheafMorphism":
        return SheafMorphism(self.field, self.source, self.target, self.shift, mats)

    def __add__(self, other: "SheafMorphism") -> "SheafMorphism":
        self._check_parallel(other)
        keys = set(self.mats) | set(other.mats)
        return self._like({k: self.block(*k) + other.block(*k) for k in keys})

    def __sub__(self, other: "SheafMorphism") -> "SheafMorphism":
        self._check_parallel(other)
        keys = set(self.mats) | set(other.mats)
        return self._like({k: self.block(*k) - other.block(*k) for k in keys})

    def __neg__(self) -> "SheafMorphism":
        return self._like({k: -m for k, m in self.mats.items()})

    def scale(self, c) -> "SheafMorphism":
        return self._like({k: m.scale(c) for k, m in self.mats.items()})

    def pointwise_scale(self, fn: Callable[[str], object]) -> "SheafMorphism":
        """Multiply by a function on points (e.g. a partition function)."""
        return self._like({(x, n): m.scale(fn(x)) for (x, n), m in self.mats.items()})

    def __matmul__(self, other: "SheafMorphism") -> "SheafMorphism":
        """Composition ``self ∘ other``; degree shifts add."""
        return compose(self, other)

    def _check_parallel(self, other: "SheafMorphism") -> None:
        if self.field != other.field:
            raise FieldMismatchError("field mismatch")
        if self.shift != other.shift or self.source.dims != other.source.dims or self.target.dims != other.target.dims:
            raise ValueError("morphisms are not parallel")


def compose(g: SheafMorphism, f: SheafMorphism) -> SheafMorphism:
    """``g ∘ f``, pointwise matrix products over the common domain."""
    if g.field != f.field:
        raise FieldMismatchError("field mismatch")
    dom = f.domain & g.domain
    mats = {}
    for (x, n), fm in f.mats.items():
        if x not in dom:
            continue
        gm = g.mats.get((x, n + f.shift))
        if gm is not None:
            if gm.ncols != fm.nrows:
                raise ValueError("middle fibers disagree")
            mats[(x, n)] = gm @ fm
    src = restrict(f.source, dom)
    tgt = restrict(g.target, dom)
    return SheafMorphism(f.field, src, tgt, f.shift + g.shift, mats)


def restrict(obj, sub: Iterable):
    """Pointwise restriction of a bundle or morphism to ``sub``."""
    sub = frozenset(sub)
    if isinstance(obj, GradedBundle):
        if not sub <= obj.open:
            raise ValueError("restriction to a set not contained in the open")
        return GradedBundle(sub, {(x, n): d for (x, n), d in obj.dims.items() if x in sub})
    if isinstance(obj, SheafMorphism):
        if not sub <= obj.domain:
            raise ValueError("restriction to a set not contained in the open")
        return SheafMorphism(
            obj.field,
            restrict(obj.source, sub),
            restrict(obj.target, sub),
            obj.shift,
            {(x, n): m for (x, n), m in obj.mats.items() if x in sub},
        )
    raise TypeError(f"cannot restrict {type(obj).__name__}")


def extend_by_zero(b: GradedBundle, points: Iterable) -> GradedBundle:
    """Same fibers on ``b.open``, zero fibers on the rest of ``points``."""
    pts = frozenset(points)
    if not b.open <= pts:
        raise ValueError("bundle open not contained in the target space")
    return GradedBundle(pts, dict(b.dims))


@dataclass(frozen=True)
class DirectSum:
    """A direct sum with its block bookkeeping.

    ``offsets[(x, n)][k]`` is the first coordinate of summand ``k`` in the
    fiber of the sum at (x, n).
    """

    bundle: GradedBundle
    summands: tuple[GradedBundle, ...]
    offsets: Mapping[tuple[str, int], tuple[int, ...]]

    def projection(self, field: Field, k: int) -> SheafMorphism:
        s = self.summands[k]

        def blk(x, n):
            off = self.offsets[(x, n)][k]
            d = s.dim(x, n)
            rows = [[field.one if c == off + r else field.zero for c in range(self.bundle.dim(x, n))] for r in range(d)]
            return Matrix(field, d, self.bundle.dim(x, n), rows)

        return SheafMorphism.from_function(field, self.bundle, s, 0, blk)

    def inclusion(self, field: Field, k: int) -> SheafMorphism:
        s = self.summands[k]

        def blk(x, n):
            off = self.offsets[(x, n)][k]
            d = s.dim(x, n)
            rows = [[field.one if r == off + c else field.zero for c in range(d)] for r in range(self.bundle.dim(x, n))]
            return Matrix(field, self.bundle.dim(x, n), d, rows)

        return SheafMorphism.from_function(field, s, self.bundle, 0, blk)


def direct_sum(bs: Sequence[GradedBundle]) -> DirectSum:
    if not bs:
        raise ValueError("empty direct sum")
    open_ = bs[0].open
    if any(b.open != open_ for b in bs):
        raise ValueError("direct sum of bundles on different opens")
    keys = sorted({k for b in bs for k in b.dims})
    dims = {}
    offsets = {}
    for key in keys:
        offs = []
        tot = 0
        for b in bs:
            offs.append(tot)
            tot += b.dims.get(key, 0)
        dims[key] = tot
        offsets[key] = tuple(offs)
    return DirectSum(GradedBundle(open_, dims), tuple(bs), offsets)


def kernel_subbundle(m: SheafMorphism, degree: int | None = None) -> tuple[GradedBundle, SheafMorphism]:
    """Pointwise kernel of ``m`` (in one source degree if given) and its inclusion."""
    f = m.field
    src = m.source
    degs = [degree] if degree is not None else src.degrees()
    bases = {}
    for x in src.points():
        for n in degs:
            if src.dim(x, n) == 0:
                continue
            if x in m.domain:
                k = kernel_basis(m.block(x, n))
            else:
                k = Matrix.identity(f, src.dim(x, n))
            if k.ncols:
                bases[(x, n)] = k
    kb = GradedBundle(src.open, {key: k.ncols for key, k in bases.items()})
    incl = SheafMorphism(f, kb, src, 0, bases)
    return kb, incl
