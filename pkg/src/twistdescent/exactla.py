"""Exact field arithmetic and small dense linear algebra.

Two kinds of field are supported: the rationals (entries are
:class:`fractions.Fraction`) and prime fields ``F_p`` (entries are ``int`` in
``[0, p-1]``).  A :class:`Matrix` carries its field; every operation between
matrices checks that the fields agree.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence


class FieldMismatchError(ValueError):
    pass


class Field:
    """Base class; concrete fields are :data:`QQ` and :func:`GF`."""

    tag: str
    zero: object
    one: object

    def coerce(self, value) -> object:
        raise NotImplementedError

    def reduce(self, value) -> object:
        raise NotImplementedError

    def inv(self, value) -> object:
        raise NotImplementedError

    def to_json(self, value):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"Field({self.tag!r})"


class Rationals(Field):
    tag = "q"
    zero = Fraction(0)
    one = Fraction(1)

    def coerce(self, value) -> Fraction:
        if isinstance(value, str):
            return Fraction(value.strip())
        if isinstance(value, float):
            raise TypeError("floating point values are not exact")
        return Fraction(value)

    def reduce(self, value) -> Fraction:
        return value

    def inv(self, value) -> Fraction:
        if value == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / value

    def to_json(self, value) -> str:
        return f"{value.numerator}/{value.denominator}"


class PrimeField(Field):
    def __init__(self, p: int):
        if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.tag = f"fp:{p}"
        self.zero = 0
        self.one = 1 % p

    def coerce(self, value) -> int:
        if isinstance(value, str):
            value = Fraction(value.strip())
        if isinstance(value, float):
            raise TypeError("floating point values are not exact")
        if isinstance(value, Fraction):
            if value.denominator % self.p == 0:
                raise ZeroDivisionError(f"denominator divisible by {self.p}")
            return value.numerator * pow(value.denominator, -1, self.p) % self.p
        return int(value) % self.p

    def reduce(self, value) -> int:
        return value % self.p

    def inv(self, value) -> int:
        if value % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(value, self.p - 2, self.p)

    def to_json(self, value) -> int:
        return int(value) % self.p

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("fp", self.p))


QQ = Rationals()


@lru_cache(maxsize=None)
def GF(p: int) -> PrimeField:
    return PrimeField(p)


def parse_field(tag: str) -> Field:
    """``"q"`` for the rationals, ``"fp:<prime>"`` for a prime field."""
    tag = tag.strip().lower()
    if tag in ("q", "qq", "rationals"):
        return QQ
    if tag.startswith("fp:"):
        try:
            p = int(tag[3:])
        except ValueError:
            raise ValueError(f"bad field tag {tag!r}") from None
        return GF(p)
    raise ValueError(f"bad field tag {tag!r}")


class Matrix:
    """Immutable dense matrix over an exact field.

    Zero-row and zero-column shapes are legal.
    """

    __slots__ = ("field", "nrows", "ncols", "rows")

    def __init__(self, field: Field, nrows: int, ncols: int, rows: Sequence[Sequence]):
        self.field = field
        self.nrows = nrows
        self.ncols = ncols
        self.rows = tuple(tuple(r) for r in rows)
        if len(self.rows) != nrows or any(len(r) != ncols for r in self.rows):
            raise ValueError(f"ragged or mis-shaped matrix, expected {nrows}x{ncols}")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_rows(cls, field: Field, rows: Sequence[Sequence], ncols: int | None = None) -> "Matrix":
        rows = [[field.coerce(v) for v in r] for r in rows]
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        return cls(field, len(rows), ncols, rows)

    @classmethod
    def zeros(cls, field: Field, nrows: int, ncols: int) -> "Matrix":
        z = field.zero
        return cls(field, nrows, ncols, [[z] * ncols for _ in range(nrows)])

    @classmethod
    def identity(cls, field: Field, n: int) -> "Matrix":
        z, o = field.zero, field.one
        return cls(field, n, n, [[o if i == j else z for j in range(n)] for i in range(n)])

    @classmethod
    def block(cls, field: Field, blocks: Sequence[Sequence["Matrix"]]) -> "Matrix":
        """Assemble a block matrix; every block in a block-row shares nrows."""
        out = []
        ncols = None
        for brow in blocks:
            h = brow[0].nrows
            for b in brow:
                _check_field(field, b)
                if b.nrows != h:
                    raise ValueError("block row height mismatch")
            width = sum(b.ncols for b in brow)
            if ncols is None:
                ncols = width
            elif width != ncols:
                raise ValueError("block column width mismatch")
            for r in range(h):
                row = []
                for b in brow:
                    row.extend(b.rows[r])
                out.append(row)
        return cls(field, len(out), ncols or 0, out)

    @classmethod
    def hstack(cls, field: Field, mats: Sequence["Matrix"], nrows: int) -> "Matrix":
        for m in mats:
            _check_field(field, m)
            if m.nrows != nrows:
                raise ValueError("hstack height mismatch")
        rows = [[v for m in mats for v in m.rows[r]] for r in range(nrows)]
        return cls(field, nrows, sum(m.ncols for m in mats), rows)

    @classmethod
    def vstack(cls, field: Field, mats: Sequence["Matrix"], ncols: int) -> "Matrix":
        for m in mats:
            _check_field(field, m)
            if m.ncols != ncols:
                raise ValueError("vstack width mismatch")
        rows = [r for m in mats for r in m.rows]
        return cls(field, len(rows), ncols, rows)

    # -- basic protocol -----------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def __repr__(self) -> str:
        body = ", ".join("[" + ", ".join(str(v) for v in r) + "]" for r in self.rows)
        return f"Matrix<{self.field.tag}>({self.nrows}x{self.ncols}: [{body}])"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.shape, self.rows))

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def is_zero(self) -> bool:
        z = self.field.zero
        return all(v == z for r in self.rows for v in r)

    def column(self, j: int) -> list:
        return [r[j] for r in self.rows]

    def transpose(self) -> "Matrix":
        return Matrix(self.field, self.ncols, self.nrows, list(zip(*self.rows)) if self.nrows else [[] for _ in range(self.ncols)])

    def submatrix(self, row_range: range, col_range: range) -> "Matrix":
        rows = [[self.rows[i][j] for j in col_range] for i in row_range]
        return Matrix(self.field, len(row_range), len(col_range), rows)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other: "Matrix") -> "Matrix":
        _check_same(self, other)
        red = self.field.reduce
        rows = [[red(a + b) for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        return Matrix(self.field, self.nrows, self.ncols, rows)

    def __sub__(self, other: "Matrix") -> "Matrix":
        _check_same(self, other)
        red = self.field.reduce
        rows = [[red(a - b) for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        return Matrix(self.field, self.nrows, self.ncols, rows)

    def __neg__(self) -> "Matrix":
        red = self.field.reduce
        return Matrix(self.field, self.nrows, self.ncols, [[red(-a) for a in r] for r in self.rows])

    def scale(self, c) -> "Matrix":
        c = self.field.coerce(c)
        red = self.field.reduce
        return Matrix(self.field, self.nrows, self.ncols, [[red(c * a) for a in r] for r in self.rows])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        _check_field(self.field, other)
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        red = self.field.reduce
        z = self.field.zero
        # row-by-row over the nonzero entries of both factors
        sparse = [[(j, v) for j, v in enumerate(r) if v != 0] for r in other.rows]
        rows = []
        for r in self.rows:
            acc = [z] * other.ncols
            for k, a in enumerate(r):
                if a == 0 or not sparse[k]:
                    continue
                if a == 1:
                    for j, v in sparse[k]:
                        acc[j] += v
                else:
                    for j, v in sparse[k]:
                        acc[j] += a * v
            rows.append([red(v) for v in acc])
        return Matrix(self.field, self.nrows, other.ncols, rows)

    def to_json(self) -> list:
        enc = self.field.to_json
        return [[enc(v) for v in r] for r in self.rows]


def _check_field(field: Field, m: Matrix) -> None:
    if m.field != field:
        raise FieldMismatchError("field mismatch")


def _check_same(a: Matrix, b: Matrix) -> None:
    _check_field(a.field, b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# Elimination


def _rref_rows(field: Field, rows: list[list], ncols: int) -> tuple[list[list], list[int]]:
    """In-place Gauss-Jordan on a list of row lists; returns (rows, pivots)."""
    red = field.reduce
    inv = field.inv
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pr = rows[r]
        if pr[c] != 1:
            s = inv(pr[c])
            pr[:] = [red(s * v) for v in pr]
        support = [(j, b) for j, b in enumerate(pr) if b != 0]
        for i in range(nrows):
            if i != r:
                f = rows[i][c]
                if f != 0:
                    ri = rows[i]
                    for j, b in support:
                        ri[j] = red(ri[j] - f * b)
        pivots.append(c)
        r += 1
    return rows, pivots


def rref(m: Matrix) -> tuple[Matrix, int, tuple[int, ...]]:
    """Reduced row-echelon form, rank and pivot columns.

    Pivoting takes the first nonzero entry in column order, so the result is
    reproducible.
    """
    rows = [list(r) for r in m.rows]
    rows, pivots = _rref_rows(m.field, rows, m.ncols)
    return Matrix(m.field, m.nrows, m.ncols, rows), len(pivots), tuple(pivots)


def rank(m: Matrix) -> int:
    return rref(m)[1]


def kernel_basis(m: Matrix) -> Matrix:
    """Columns form a basis of the right null space of ``m``."""
    reduced, r, pivots = rref(m)
    f = m.field
    free = [c for c in range(m.ncols) if c not in set(pivots)]
    cols = []
    for fc in free:
        v = [f.zero] * m.ncols
        v[fc] = f.one
        for i, pc in enumerate(pivots):
            v[pc] = f.reduce(-reduced.rows[i][fc])
        cols.append(v)
    rows = [[cols[j][i] for j in range(len(cols))] for i in range(m.ncols)]
    return Matrix(f, m.ncols, len(cols), rows)


def solve(m: Matrix, rhs: Matrix) -> Matrix | None:
    """Some ``x`` with ``m @ x == rhs`` (free variables zero), or ``None``."""
    _check_field(m.field, rhs)
    if m.nrows != rhs.nrows:
        raise ValueError(f"shape mismatch: {m.shape} vs rhs {rhs.shape}")
    f = m.field
    aug = [list(a) + list(b) for a, b in zip(m.rows, rhs.rows)]
    aug, pivots = _rref_rows(f, aug, m.ncols + rhs.ncols)
    if any(p >= m.ncols for p in pivots):
        return None
    x = [[f.zero] * rhs.ncols for _ in range(m.ncols)]
    for i, pc in enumerate(pivots):
        x[pc] = list(aug[i][m.ncols:])
    return Matrix(f, m.ncols, rhs.ncols, x)


def sparse_rank(field: Field, columns: Iterable[dict]) -> int:
    """Rank of a matrix given as sparse columns ``{row: value}``.

    Incremental column reduction keyed on the largest row index; exact.
    """
    red = field.reduce
    inv = field.inv
    pivots: dict[int, dict] = {}
    for col in columns:
        v = {r: x for r, x in col.items() if x != 0}
        while v:
            low = max(v)
            p = pivots.get(low)
            if p is None:
                s = inv(v[low])
                pivots[low] = {r: red(s * x) for r, x in v.items()}
                break
            f = v[low]
            for r, x in p.items():
                nv = red(v.get(r, 0) - f * x)
                if nv == 0:
                    v.pop(r, None)
                else:
                    v[r] = nv
    return len(pivots)
