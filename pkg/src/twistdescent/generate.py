"""Seeded random sites, complexes and morphisms for tests and demos."""

from __future__ import annotations

import random
from itertools import product

from .bundle import GradedBundle, SheafMorphism, restrict
from .cechdg import (
    GlobalComplex,
    HomCochain,
    TwistedComplex,
    compose,
    hom_diff,
    twist_morphism,
    twist_object,
)
from .exactla import QQ, Field, Matrix, kernel_basis, rank
from .site import Site


def random_scalar(rng: random.Random, field: Field, lo: int = -3, hi: int = 3):
    return field.coerce(rng.randint(lo, hi))


def random_matrix(rng: random.Random, field: Field, r: int, c: int, density: float = 0.7) -> Matrix:
    rows = [[random_scalar(rng, field) if rng.random() < density else field.zero for _ in range(c)] for _ in range(r)]
    return Matrix(field, r, c, rows)


def random_invertible(rng: random.Random, field: Field, n: int) -> Matrix:
    while True:
        m = random_matrix(rng, field, n, n, density=0.8)
        if rank(m) == n:
            return m


def inverse(m: Matrix) -> Matrix:
    from .exactla import solve

    x = solve(m, Matrix.identity(m.field, m.nrows))
    if x is None or m.ncols != m.nrows:
        raise ValueError("matrix is not invertible")
    return x


def random_site(rng: random.Random, field: Field = QQ, n_points: int = 3, n_opens: int = 2, overlap: bool = True) -> Site:
    """Random cover of ``n_points`` points by ``n_opens`` nonempty opens.

    With ``overlap`` some point lies in at least two opens (when there are two).
    """
    pts = [f"x{k}" for k in range(n_points)]
    while True:
        opens = [set(p for p in pts if rng.random() < 0.6) for _ in range(n_opens)]
        for p in pts:
            if not any(p in u for u in opens):
                opens[rng.randrange(n_opens)].add(p)
        shared = any(sum(p in u for u in opens) > 1 for p in pts)
        if all(opens) and (shared or not overlap or n_opens < 2):
            break
    rho = None
    if rng.random() < 0.5:
        rho = _random_partition(rng, field, pts, opens)
    return Site.build(pts, opens, field, rho)


def _random_partition(rng, field, pts, opens):
    rho = [dict() for _ in opens]
    for x in pts:
        idx = [i for i, u in enumerate(opens) if x in u]
        vals = [random_scalar(rng, field) for _ in idx[:-1]]
        vals.append(field.reduce(field.one - sum(vals, field.zero)))
        for i, v in zip(idx, vals):
            rho[i][x] = v
    return rho


def random_point_complex(rng: random.Random, field: Field, lo: int, hi: int, max_rank: int = 3):
    """A random bounded complex of vector spaces: ``(dims, {n: d^n})``.

    A sum of one-term and two-term elementary pieces, conjugated by random
    invertibles so the differentials are dense.
    """
    while True:
        pairs = {n: rng.randint(0, 1) for n in range(lo, hi)}
        singles = {n: rng.randint(0, 1) for n in range(lo, hi + 1)}
        dims = {n: singles[n] + pairs.get(n - 1, 0) + pairs.get(n, 0) for n in range(lo, hi + 1)}
        if max(dims.values()) <= max_rank:
            break
    diffs = {}
    for n in range(lo, hi):
        if not pairs[n]:
            continue
        # basis order in each degree: [target of incoming pair | source of outgoing pair | singles]
        rows = [[field.zero] * dims[n] for _ in range(dims[n + 1])]
        rows[0][pairs.get(n - 1, 0)] = field.one
        diffs[n] = Matrix(field, dims[n + 1], dims[n], rows)
    g = {n: random_invertible(rng, field, dims[n]) for n in range(lo, hi + 1)}
    return dims, {n: g[n + 1] @ d @ inverse(g[n]) for n, d in diffs.items()}


def random_global_complex(rng: random.Random, site: Site, window=(0, 1), max_rank: int = 2) -> GlobalComplex:
    lo, hi = window
    field = site.field
    dims = {}
    mats = {}
    for x in site.points:
        dx, dd = random_point_complex(rng, field, lo, hi, max_rank)
        for n, d in dx.items():
            if d:
                dims[(x, n)] = d
        for n, m in dd.items():
            if not m.is_zero():
                mats[(x, n)] = m
    b = GradedBundle(frozenset(site.points), dims)
    return GlobalComplex(site, b, SheafMorphism(field, b, b, 1, mats))


def _closed_maps_at_point(E: GlobalComplex, F: GlobalComplex, x: str, shift: int):
    """Kernel basis of ``f ↦ d_F f - (-1)^s f d_E`` on degree-``s`` maps at one point."""
    field = E.field
    degs = sorted(set(E.bundle.degrees()) | {n - shift for n in F.bundle.degrees()})
    slots = []  # (n, r, c)
    for n in degs:
        for r in range(F.bundle.dim(x, n + shift)):
            for c in range(E.bundle.dim(x, n)):
                slots.append((n, r, c))
    if not slots:
        return slots, []
    pos = {s: i for i, s in enumerate(slots)}
    sgn = -1 if shift % 2 else 1
    eqs = []
    for n in sorted(set(degs) | {m - 1 for m in degs}):
        rows_out = F.bundle.dim(x, n + shift + 1)
        cols_out = E.bundle.dim(x, n)
        dF = F.d.block(x, n + shift)
        dE = E.d.block(x, n)
        for r in range(rows_out):
            for c in range(cols_out):
                eq = [field.zero] * len(slots)
                # (d_F f_n)[r, c] = Σ_t dF[r, t] f_n[t, c]
                for t in range(F.bundle.dim(x, n + shift)):
                    if dF[r, t] != 0:
                        eq[pos[(n, t, c)]] = field.reduce(eq[pos[(n, t, c)]] + dF[r, t])
                # (f_{n+1} d_E)[r, c] = Σ_t f_{n+1}[r, t] dE[t, c]
                for t in range(E.bundle.dim(x, n + 1)):
                    if dE[t, c] != 0 and (n + 1, r, t) in pos:
                        i = pos[(n + 1, r, t)]
                        eq[i] = field.reduce(eq[i] - sgn * dE[t, c])
                eqs.append(eq)
    if not eqs:
        basis = Matrix.identity(field, len(slots))
    else:
        basis = kernel_basis(Matrix(field, len(eqs), len(slots), eqs))
    return slots, [basis.column(j) for j in range(basis.ncols)]


def random_closed_global_morphism(rng: random.Random, E: GlobalComplex, F: GlobalComplex, shift: int = 0) -> SheafMorphism:
    """Random element of the cycles of the global hom complex in degree ``shift``."""
    field = E.field
    mats = {}
    for x in E.site.points:
        slots, basis = _closed_maps_at_point(E, F, x, shift)
        if not basis:
            continue
        coeffs = [random_scalar(rng, field) for _ in basis]
        vec = [field.reduce(sum((c * b[i] for c, b in zip(coeffs, basis)), field.zero)) for i in range(len(slots))]
        acc = {}
        for (n, r, c), v in zip(slots, vec):
            if (x, n) not in acc:
                acc[(x, n)] = [[field.zero] * E.bundle.dim(x, n) for _ in range(F.bundle.dim(x, n + shift))]
            acc[(x, n)][r][c] = v
        for (xx, n), rows in acc.items():
            mats[(xx, n)] = Matrix(field, F.bundle.dim(x, n + shift), E.bundle.dim(x, n), rows)
    return SheafMorphism(field, E.bundle, F.bundle, shift, mats)


def random_global_morphism(rng: random.Random, E: GlobalComplex, F: GlobalComplex, shift: int = 0) -> SheafMorphism:
    def blk(x, n):
        return random_matrix(rng, E.field, F.bundle.dim(x, n + shift), E.bundle.dim(x, n))

    return SheafMorphism.from_function(E.field, E.bundle, F.bundle, shift, blk)


def random_cochain(
    rng: random.Random,
    site: Site,
    source: tuple,
    target: tuple,
    total: int,
    max_p: int = 2,
    density: float = 0.5,
    bidegree: tuple | None = None,
) -> HomCochain:
    """Random cochain of the given total degree (or one bidegree)."""
    field = site.field
    blocks = {}
    ps = [bidegree[0]] if bidegree else range(max_p + 1)
    n_idx = site.n_opens
    for p in ps:
        q = total - p
        for tup in product(range(n_idx), repeat=p + 1):
            supp = site.support(tup)
            for x in sorted(supp):
                for n in source[tup[-1]].degrees():
                    r = target[tup[0]].dim(x, n + q)
                    c = source[tup[-1]].dim(x, n)
                    if r and c and rng.random() < density:
                        blocks[(tup, q, x, n)] = random_matrix(rng, field, r, c)
    return HomCochain(site, source, target, blocks)


def gauge_cochain(rng: random.Random, t: TwistedComplex) -> HomCochain:
    """Per-index invertible (0,0) cochain ``h`` on the bundles of ``t``."""
    blocks = {}
    for i, b in enumerate(t.bundles):
        for (x, n), d in b.dims.items():
            blocks[((i,), 0, x, n)] = random_invertible(rng, t.field, d)
    return HomCochain(t.site, t.bundles, t.bundles, blocks, check=False)


def invert_gauge(h: HomCochain) -> HomCochain:
    return h._new({k: inverse(m) for k, m in h.blocks.items()})


def gauge(t: TwistedComplex, h: HomCochain) -> TwistedComplex:
    """``a'_I = h_{i0} a_I h_{ip}^{-1}``; isomorphic to ``t`` via ``h``."""
    tw = compose(compose(h, t.twist), invert_gauge(h))
    return TwistedComplex(t.site, t.bundles, tw)


def random_t_image(rng: random.Random, site: Site, window=(0, 1), max_rank: int = 2, gauged: bool = True):
    """``(E, T(E) or a gauge of it, h)`` where ``h: T(E) -> result`` is the gauge."""
    E = random_global_complex(rng, site, window, max_rank)
    t = twist_object(E)
    if not gauged:
        return E, t, None
    h = gauge_cochain(rng, t)
    return E, gauge(t, h), h


def random_closed_morphism(
    rng: random.Random,
    E: GlobalComplex,
    F: GlobalComplex,
    src: TwistedComplex,
    tgt: TwistedComplex,
    h_src: HomCochain | None = None,
    h_tgt: HomCochain | None = None,
    total: int = 0,
    max_p: int = 2,
) -> HomCochain:
    """Closed cochain ``h_tgt T(f) h_src^{-1} + d(ψ)`` of the given total degree."""
    TE, TF = twist_object(E), twist_object(F)
    f = random_closed_global_morphism(rng, E, F, total)
    phi = twist_morphism(f, TE, TF)
    if h_tgt is not None:
        phi = compose(h_tgt, phi)
    if h_src is not None:
        phi = compose(phi, invert_gauge(h_src))
    psi = random_cochain(rng, src.site, src.bundles, tgt.bundles, total - 1, max_p=max_p, density=0.4)
    return phi + hom_diff(psi, src.twist, tgt.twist)


def random_descent_data(rng: random.Random, site: Site, max_p: int = 2, max_q: int = 1, degree: int = 0, zero_q: bool = False):
    """Descent data modulo Q built as ``θ_ji = h_j (1 + τ0 ε_ji) h_i^{-1}``.

    Then ``θ_ki - θ_kj θ_ji = τ_k ϑ_kji`` with ``τ_k = h_k τ0`` and
    ``ϑ_kji = (ε_ki - ε_kj - ε_ji - ε_kj τ0 ε_ji) h_i^{-1}``.
    """
    from .globalize import DescentDataModQ

    field = site.field
    X = site.points
    rp = {x: rng.randint(1, max_p) for x in X}
    rq = {x: 0 if zero_q else rng.randint(0, max_q) for x in X}
    tau0 = {x: random_matrix(rng, field, rp[x], rq[x]) for x in X}
    h = {(i, x): random_invertible(rng, field, rp[x]) for i, u in enumerate(site.opens) for x in u}
    hinv = {k: inverse(m) for k, m in h.items()}
    eps = {}
    for i, ui in enumerate(site.opens):
        for j, uj in enumerate(site.opens):
            for x in ui & uj:
                eps[(j, i, x)] = Matrix.zeros(field, rq[x], rp[x]) if i == j else random_matrix(rng, field, rq[x], rp[x])
    P = tuple(GradedBundle(u, {(x, degree): rp[x] for x in u}) for u in site.opens)
    Q = tuple(GradedBundle(u, {(x, degree): rq[x] for x in u if rq[x]}) for u in site.opens)
    one = {x: Matrix.identity(field, rp[x]) for x in X}
    tau = tuple(
        SheafMorphism(field, Q[i], P[i], 0, {(x, degree): h[(i, x)] @ tau0[x] for x in u if rq[x]})
        for i, u in enumerate(site.opens)
    )
    theta, vartheta = {}, {}
    for i, ui in enumerate(site.opens):
        for j, uj in enumerate(site.opens):
            supp = ui & uj
            if not supp:
                continue
            mats = {(x, degree): h[(j, x)] @ (one[x] + tau0[x] @ eps[(j, i, x)]) @ hinv[(i, x)] for x in supp}
            theta[(j, i)] = SheafMorphism(field, restrict(P[i], supp), restrict(P[j], supp), 0, mats)
            for k, uk in enumerate(site.opens):
                s3 = supp & uk
                if not s3:
                    continue
                vm = {}
                for x in s3:
                    e = eps[(k, i, x)] - eps[(k, j, x)] - eps[(j, i, x)] - eps[(k, j, x)] @ tau0[x] @ eps[(j, i, x)]
                    if rq[x]:
                        vm[(x, degree)] = e @ hinv[(i, x)]
                vartheta[(k, j, i)] = SheafMorphism(field, restrict(P[i], s3), restrict(Q[k], s3), 0, vm)
    return DescentDataModQ(site, P, Q, tau, theta, vartheta)
