"""Constructive descent: gluing modulo Q, higher gluing, globalization of
twisted complexes and descent of morphisms.

Every construction checks the identities it is supposed to satisfy before
returning; a failed identity raises :class:`DescentError` instead of
producing an uncertified answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Mapping

from .bundle import GradedBundle, SheafMorphism, restrict
from .cechdg import (
    GlobalComplex,
    HomCochain,
    NotClosedError,
    TwistedComplex,
    cone,
    global_hom_diff,
    hom_diff,
    mc_residual,
    twist_morphism,
    twist_object,
)
from .exactla import Matrix, kernel_basis, rank
from .homology import WeqVerdict, is_weak_equivalence, local_homology
from .site import PartitionOfUnity, Site


class DescentError(ValueError):
    """A checked identity failed; ``witness`` locates the failure."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def _pou(site: Site, pou: PartitionOfUnity | None) -> PartitionOfUnity:
    return site.pou if pou is None else pou


# ---------------------------------------------------------------------------
# Gluing modulo Q


@dataclass(frozen=True)
class DescentDataModQ:
    """Descent data of ``P_i`` modulo ``Q_i``.

    ``theta[(j, i)]`` maps ``P_i -> P_j`` on ``U_ji``; ``vartheta[(k, j, i)]``
    maps ``P_i -> Q_k`` on ``U_kji``; ``tau[i]`` maps ``Q_i -> P_i``.  Missing
    entries are zero.  All bundles sit in a single degree.
    """

    site: Site
    P: tuple
    Q: tuple
    tau: tuple
    theta: Mapping[tuple, SheafMorphism]
    vartheta: Mapping[tuple, SheafMorphism]

    def theta_at(self, j: int, i: int, x: str, n: int) -> Matrix:
        m = self.theta.get((j, i))
        if m is not None:
            return m.block(x, n)
        return Matrix.zeros(self.site.field, self.P[j].dim(x, n), self.P[i].dim(x, n))

    def vartheta_at(self, k: int, j: int, i: int, x: str, n: int) -> Matrix:
        m = self.vartheta.get((k, j, i))
        if m is not None:
            return m.block(x, n)
        return Matrix.zeros(self.site.field, self.Q[k].dim(x, n), self.P[i].dim(x, n))

    def degrees(self) -> list[int]:
        return sorted({n for b in self.P for n in b.degrees()} | {n for b in self.Q for n in b.degrees()})

    def validate(self) -> list[str]:
        diags = []
        site = self.site
        for x in site.points:
            idx = site.opens_containing(x)
            for n in self.degrees():
                for i in idx:
                    if self.theta_at(i, i, x, n) != Matrix.identity(site.field, self.P[i].dim(x, n)):
                        diags.append(f"theta_{i}{i} != id at point {x}")
                    for j in idx:
                        for k in idx:
                            lhs = self.theta_at(k, i, x, n) - self.theta_at(k, j, x, n) @ self.theta_at(j, i, x, n)
                            rhs = self.tau[k].block(x, n) @ self.vartheta_at(k, j, i, x, n)
                            if lhs != rhs:
                                diags.append(f"cocycle modulo Q fails on ({k}, {j}, {i}) at point {x}")
        return diags


@dataclass(frozen=True)
class DescentResult:
    R: GradedBundle
    psi: tuple  # per index: R|U_i -> P_i
    xi: Mapping[tuple, SheafMorphism]  # (j, i): R|U_ji -> Q_j
    offsets: Mapping[str, tuple]  # point -> ((j, offset), ...)


def glue_modulo(data: DescentDataModQ, pou: PartitionOfUnity | None = None) -> DescentResult:
    """``R = ⊕ P̃_i``, ``ψ_i = Σ_j θ_ij(ρ_j ·)``, ``ξ_ji = Σ_k ρ_k ϑ_jik(·)``."""
    bad = data.validate()
    if bad:
        raise DescentError("invalid descent data: " + bad[0], bad)
    site = data.site
    f = site.field
    pou = _pou(site, pou)
    degs = data.degrees()
    dims, offsets = {}, {}
    for x in site.points:
        offs, tot = [], 0
        for j in site.opens_containing(x):
            offs.append((j, tot))
            tot += sum(data.P[j].dim(x, n) for n in degs)
        offsets[x] = tuple(offs)
    for x in site.points:
        for n in degs:
            d = sum(data.P[j].dim(x, n) for j, _ in offsets[x])
            if d:
                dims[(x, n)] = d
    R = GradedBundle(frozenset(site.points), dims)

    def row_of_blocks(x, n, rows, fn):
        parts = [fn(j).scale(pou.value(j, x)) for j, _ in offsets[x]]
        return Matrix.hstack(f, parts, rows)

    psi = []
    for i, u in enumerate(site.opens):
        mats = {}
        for x in sorted(u):
            for n in degs:
                if R.dim(x, n):
                    mats[(x, n)] = row_of_blocks(x, n, data.P[i].dim(x, n), lambda j: data.theta_at(i, j, x, n))
        psi.append(SheafMorphism(f, restrict(R, u), data.P[i], 0, mats))
    xi = {}
    for i, ui in enumerate(site.opens):
        for j, uj in enumerate(site.opens):
            supp = ui & uj
            if not supp:
                continue
            mats = {}
            for x in sorted(supp):
                for n in degs:
                    if R.dim(x, n):
                        mats[(x, n)] = row_of_blocks(
                            x, n, data.Q[j].dim(x, n), lambda k: data.vartheta_at(j, i, k, x, n)
                        )
            xi[(j, i)] = SheafMorphism(f, restrict(R, supp), restrict(data.Q[j], supp), 0, mats)
    res = DescentResult(R, tuple(psi), xi, offsets)
    bad = check_descent(data, res)
    if bad:
        raise DescentError("gluing modulo Q failed: " + bad[0], bad)
    return res


def check_descent(data: DescentDataModQ, res: DescentResult) -> list[str]:
    """Compatibility ``ψ_j - θ_ji ψ_i = τ_j ξ_ji`` and surjectivity modulo Q."""
    site = data.site
    diags = []
    for x in site.points:
        idx = site.opens_containing(x)
        for n in data.degrees():
            for i in idx:
                pi = res.psi[i].block(x, n)
                for j in idx:
                    lhs = res.psi[j].block(x, n) - data.theta_at(j, i, x, n) @ pi
                    rhs = data.tau[j].block(x, n) @ res.xi[(j, i)].block(x, n)
                    if lhs != rhs:
                        diags.append(f"compatibility fails on ({j}, {i}) at point {x}, degree {n}")
                both = Matrix.hstack(site.field, [pi, data.tau[i].block(x, n)], pi.nrows)
                if rank(both) != data.P[i].dim(x, n):
                    diags.append(f"psi_{i} not surjective modulo Q at point {x}, degree {n}")
    return diags


# ---------------------------------------------------------------------------
# Higher gluing


@dataclass(frozen=True)
class HigherGlue:
    """Result of gluing the degree-``l`` kernels of a twisted complex.

    ``bundle`` lives on X in degree ``l``; ``source`` is its twisting-functor
    image (zero differential); ``psi`` is a closed degree-0 morphism
    ``source -> F`` with pieces ``ψ^{k,-k}``; ``summands[x]`` lists
    ``(j, offset, kernel basis)``.
    """

    level: int
    bundle: GradedBundle
    source: TwistedComplex
    psi: HomCochain
    summands: Mapping[str, tuple]


def _acyclicity_witness(F: TwistedComplex, above: int):
    for i in range(F.site.n_opens):
        h = local_homology(F.bundles[i], F.local_differential(i))
        for (x, n), d in sorted(h.items()):
            if n > above and d:
                return (i, x, n)
    return None


def higher_glue(F: TwistedComplex, l: int, pou: PartitionOfUnity | None = None, anchor_only: bool = False) -> HigherGlue:
    """Glue ``ker b^{0,1}_i`` in degree ``l`` into a bundle on X.

    ``ψ^{k,-k}_{i0..ik} = (-1)^k Σ_j ρ_j b^{k+1,-k}_{i0..ik j}`` on the ``j``-th
    summand.  With ``anchor_only`` only the summand of the least open
    containing each point is used, with the least-index partition.
    """
    w = _acyclicity_witness(F, l)
    if w is not None:
        raise DescentError(f"H^{w[2]} of F_{w[0]} is nonzero at point {w[1]}", w)
    site = F.site
    f = site.field
    pou = _pou(site, pou)
    local_d = [F.local_differential(i) for i in range(site.n_opens)]
    summands = {}
    dims = {}
    for x in site.points:
        parts, tot = [], 0
        idx = (site.anchor(x),) if anchor_only else site.opens_containing(x)
        for j in idx:
            if F.bundles[j].dim(x, l) == 0:
                continue
            k = kernel_basis(local_d[j].block(x, l))
            if k.ncols:
                parts.append((j, tot, k))
                tot += k.ncols
        summands[x] = tuple(parts)
        if tot:
            dims[(x, l)] = tot
    bundle = GradedBundle(frozenset(site.points), dims)

    def weight(j, x):
        if anchor_only:
            return f.one
        return pou.value(j, x)

    # ψ blocks: for every twist block b^{k+1,-k}_{i0..ik j} at (x, l), feed summand j
    blocks = {}
    for (tup, q, x, n), bm in F.twist.blocks.items():
        if n != l or len(tup) < 2:
            continue
        k = len(tup) - 2
        j = tup[-1]
        for jj, off, kb in summands.get(x, ()):
            if jj != j:
                continue
            w_ = weight(j, x)
            if w_ == 0:
                continue
            piece = (bm @ kb).scale(w_ if k % 2 == 0 else -w_)
            key = (tup[:-1], q, x, l)
            cur = blocks.get(key)
            full = _place_columns(f, piece, off, bundle.dim(x, l))
            blocks[key] = full if cur is None else cur + full
    K = tuple(restrict(bundle, u) for u in site.opens)
    src = twist_object(GlobalComplex(site, bundle, SheafMorphism.zero(f, bundle, bundle, 1)))
    psi = HomCochain(site, K, F.bundles, {k: m for k, m in blocks.items() if not m.is_zero()})
    res = HigherGlue(l, bundle, src, psi, summands)
    bad = check_higher_glue(F, res)
    if bad:
        raise DescentError("higher gluing failed: " + bad[0], bad)
    return res


def _place_columns(f, m: Matrix, offset: int, total: int) -> Matrix:
    rows = [[f.zero] * offset + list(r) + [f.zero] * (total - offset - m.ncols) for r in m.rows]
    return Matrix(f, m.nrows, total, rows)


def check_higher_glue(F: TwistedComplex, g: HigherGlue) -> list[str]:
    """Condition 1 (image in the kernel, surjective modulo ``b(F^{l-1})``) and
    condition 2 (``ψ`` closed)."""
    site = F.site
    l = g.level
    diags = []
    for i, u in enumerate(site.opens):
        b0 = F.local_differential(i)
        for x in sorted(u):
            p0 = g.psi.block((i,), 0, x, l)
            if not (b0.block(x, l) @ p0).is_zero():
                diags.append(f"psi^0_{i} leaves the kernel at point {x}")
            want = F.bundles[i].dim(x, l) - rank(b0.block(x, l))
            both = Matrix.hstack(site.field, [p0, b0.block(x, l - 1)], p0.nrows)
            if rank(both) != want:
                diags.append(f"psi^0_{i} not surjective modulo the image at point {x}")
    res = hom_diff(g.psi, g.source.twist, F.twist)
    for (tup, q, x, n) in res.blocks:
        diags.append(f"condition 2 fails on {tup} at point {x}, degree {n}")
    return diags


# ---------------------------------------------------------------------------
# Globalization


@dataclass(frozen=True)
class GlobalizationCertificate:
    E: GlobalComplex
    source: TwistedComplex  # twist_object(E)
    target: TwistedComplex
    phi: HomCochain
    intertwine_residual: HomCochain
    weq: WeqVerdict
    steps: tuple = ()

    @property
    def ok(self) -> bool:
        return self.intertwine_residual.is_zero() and self.weq.ok and not self.E.validate()


def _degree_window(t: TwistedComplex):
    degs = t.degrees()
    return (degs[0], degs[-1]) if degs else None


def _check_kernel_transitions(G: TwistedComplex, m: int) -> None:
    """Base case: ``c^{1,0}_{iα}`` must map ``ker c^{0,1}_α`` isomorphically onto ``ker c^{0,1}_i``."""
    site = G.site
    for x in site.points:
        a = site.anchor(x)
        ka = kernel_basis(G.local_differential(a).block(x, m))
        for i in site.opens_containing(x):
            ki_dim = G.bundles[i].dim(x, m) - rank(G.local_differential(i).block(x, m))
            img = G.twist.block((i, a), 0, x, m) @ ka
            if rank(img) != ka.ncols or ka.ncols != ki_dim:
                raise DescentError(
                    f"kernel transition {i}{a} is not invertible at point {x}, degree {m}", (i, a, x, m)
                )


def _homology_map_table(phi: HomCochain, src: TwistedComplex, tgt: TwistedComplex) -> dict:
    from .homology import _induced_rank

    table = {}
    for i, u in enumerate(src.site.opens):
        a, b = src.local_differential(i), tgt.local_differential(i)
        f0 = phi.component((i,), 0)
        degs = sorted(set(src.bundles[i].degrees()) | set(tgt.bundles[i].degrees()))
        for x in sorted(u):
            for n in degs:
                he = src.bundles[i].dim(x, n) - rank(a.block(x, n)) - rank(a.block(x, n - 1))
                hf = tgt.bundles[i].dim(x, n) - rank(b.block(x, n)) - rank(b.block(x, n - 1))
                table[(i, x, n)] = (he, hf, _induced_rank(f0.block(x, n), a.block(x, n), b.block(x, n - 1)))
    return table


def globalize(F: TwistedComplex, pou: PartitionOfUnity | None = None) -> GlobalizationCertificate:
    """Find a global complex ``E`` and a weak equivalence ``T(E) -> F``.

    Downward induction on the lowest degree of ``E``: at each level the
    mapping cone ``G`` of the current ``φ`` is acyclic above ``m``, its
    degree-``m`` kernels are glued (``higher_glue``) into ``E^m``, and the
    glued map ``ψ`` is split as ``d^m = -p_E ψ^{0,0}``, ``φ^{0,0} = p_F ψ^{0,0}``,
    ``φ^{k,-k} = ψ^{k,-k}``.  The lowest level glues the kernels along
    ``c^{1,0}`` using one anchor open per point.
    """
    res = mc_residual(F)
    if not res.is_zero():
        raise DescentError("input fails the Maurer-Cartan equation", res.locations()[:1])
    site = F.site
    f = site.field
    X = frozenset(site.points)
    win = _degree_window(F)
    if win is None:
        E = GlobalComplex.zero(site)
        TE = twist_object(E)
        phi = HomCochain.zero(site, TE.bundles, F.bundles)
        return GlobalizationCertificate(E, TE, F, phi, hom_diff(phi, TE.twist, F.twist), is_weak_equivalence(phi, TE, F))
    m0, top = win
    dims: dict = {}
    dmats: dict = {}
    phi_blocks: dict = {}
    steps = []

    def current():
        b = GradedBundle(X, dict(dims))
        E = GlobalComplex(site, b, SheafMorphism(f, b, b, 1, dict(dmats)))
        TE = twist_object(E)
        return E, TE, HomCochain(site, TE.bundles, F.bundles, dict(phi_blocks), check=False)

    for m in range(top, m0 - 1, -1):
        E, TE, phi = current()
        G = cone(phi, TE, F)
        if not mc_residual(G).is_zero():
            raise DescentError(f"cone at level {m} fails the Maurer-Cartan equation")
        base = m == m0
        if base:
            _check_kernel_transitions(G, m)
        g = higher_glue(G, m, pou, anchor_only=base)
        # split ψ^{0,0} into its E^{m+1} and F^m parts
        for x in site.points:
            d = g.bundle.dim(x, m)
            if d:
                dims[(x, m)] = d
        for x in site.points:
            if not g.bundle.dim(x, m):
                continue
            e_dim = E.bundle.dim(x, m + 1)
            parts = []
            for i in site.opens_containing(x):
                p0 = g.psi.block((i,), 0, x, m)
                parts.append(p0.submatrix(range(0, e_dim), range(p0.ncols)))
                fpart = p0.submatrix(range(e_dim, p0.nrows), range(p0.ncols))
                if not fpart.is_zero():
                    phi_blocks[((i,), 0, x, m)] = fpart
            if any(p != parts[0] for p in parts[1:]):
                raise DescentError(f"E-components of psi disagree across opens at point {x}, level {m}", (x, m))
            if e_dim and not parts[0].is_zero():
                dmats[(x, m)] = -parts[0]
        for (tup, q, x, n), mat in g.psi.blocks.items():
            if len(tup) > 1:
                # for k >= 1 the cone has no E-part in degree m - k
                phi_blocks[(tup, q, x, n)] = mat
        E, TE, phi = current()
        bad = E.validate()
        if bad:
            raise DescentError(f"level {m}: " + bad[0])
        table = _homology_map_table(phi, TE, F)
        for (i, x, n), (he, hf, r) in table.items():
            if n > m and not he == hf == r:
                raise DescentError(f"level {m}: not a homology isomorphism at open {i}, point {x}, degree {n}", (i, x, n))
            if n == m and r != hf:
                raise DescentError(f"level {m}: not surjective on homology at open {i}, point {x}", (i, x, n))
        steps.append((m, sum(g.bundle.dim(x, m) for x in site.points)))
    E, TE, phi = current()
    resid = hom_diff(phi, TE.twist, F.twist)
    if not resid.is_zero():
        raise DescentError("glued morphism is not closed", resid.locations()[:1])
    weq = is_weak_equivalence(phi, TE, F)
    if not weq.ok:
        raise DescentError("glued morphism is not a weak equivalence", weq.witness)
    return GlobalizationCertificate(E, TE, F, phi, resid, weq, tuple(steps))


# ---------------------------------------------------------------------------
# Morphisms


def _check_t_images(phi: HomCochain, E: GlobalComplex, F: GlobalComplex):
    TE, TF = twist_object(E), twist_object(F)
    if phi.source != TE.bundles or phi.target != TF.bundles:
        raise ValueError("morphism is not between the twisting-functor images")
    return TE, TF


def _single_degree(phi: HomCochain, n: int | None) -> int:
    degs = phi.total_degrees()
    if n is None:
        if len(degs) > 1:
            raise ValueError("morphism is not homogeneous")
        return degs.pop() if degs else 0
    if degs - {n}:
        raise ValueError(f"morphism has pieces outside total degree {n}")
    return n


def _glue_zero_components(site: Site, pou, E: GlobalComplex, F: GlobalComplex, phi: HomCochain, q: int) -> SheafMorphism:
    """``Σ_i ρ_i φ^{0,q}_i`` as a global map of degree ``q``."""
    f = site.field
    mats = {}
    for ((i,), qq, x, n), m in ((k, v) for k, v in phi.blocks.items() if len(k[0]) == 1):
        if qq != q:
            continue
        r = pou.value(i, x)
        if r == 0:
            continue
        cur = mats.get((x, n))
        mats[(x, n)] = m.scale(r) if cur is None else cur + m.scale(r)
    return SheafMorphism(f, E.bundle, F.bundle, q, {k: v for k, v in mats.items() if not v.is_zero()})


def descend_morphism(phi: HomCochain, E: GlobalComplex, F: GlobalComplex, degree: int | None = None, pou=None):
    """Closed ``φ: T(E) -> T(F)`` of degree ``n`` to ``(φ̃, φ̂)`` with ``φ - T(φ̃) = dφ̂``.

    ``φ̃ = Σ_i ρ_i φ^{0,n}_i`` and ``φ̂^{k}_{i0..ik} = Σ_j ρ_j φ^{k+1}_{j i0..ik}``.
    """
    TE, TF = _check_t_images(phi, E, F)
    n = _single_degree(phi, degree)
    if not hom_diff(phi, TE.twist, TF.twist).is_zero():
        raise NotClosedError("morphism is not closed")
    site = E.site
    pou = _pou(site, pou)
    f = site.field
    tilde = _glue_zero_components(site, pou, E, F, phi, n)
    hat: dict = {}
    for (tup, q, x, m), mat in phi.blocks.items():
        if len(tup) < 2:
            continue
        r = pou.value(tup[0], x)
        if r == 0:
            continue
        key = (tup[1:], q, x, m)
        cur = hat.get(key)
        hat[key] = mat.scale(r) if cur is None else cur + mat.scale(r)
    phi_hat = HomCochain(site, TE.bundles, TF.bundles, {k: v for k, v in hat.items() if not v.is_zero()}, check=False)
    if not global_hom_diff(tilde, E, F).is_zero():
        raise DescentError("descended morphism is not closed")
    lhs = phi - twist_morphism(tilde, TE, TF)
    if lhs != hom_diff(phi_hat, TE.twist, TF.twist):
        raise DescentError("homotopy identity fails", (lhs - hom_diff(phi_hat, TE.twist, TF.twist)).locations()[:1])
    return tilde, phi_hat


def descend_coboundary(phi: SheafMorphism, phi_hat0: HomCochain, E: GlobalComplex, F: GlobalComplex, pou=None) -> SheafMorphism:
    """Given ``T(φ) = d(φ̂0)``, return ``ψ̃ = Σ_j ρ_j φ̂0^{0,n-1}_j`` with ``φ = dψ̃``."""
    TE, TF = _check_t_images(phi_hat0, E, F)
    if twist_morphism(phi, TE, TF) != hom_diff(phi_hat0, TE.twist, TF.twist):
        raise DescentError("T(phi) is not the differential of the given cochain")
    site = E.site
    pou = _pou(site, pou)
    psi = _glue_zero_components(site, pou, E, F, phi_hat0, phi.shift - 1)
    if global_hom_diff(psi, E, F) != phi:
        raise DescentError("descended cochain does not bound")
    return psi


@dataclass(frozen=True)
class Roundtrip:
    certificate: GlobalizationCertificate
    comparison: SheafMorphism  # global map E' -> E
    homotopy: HomCochain
    table: dict = dc_field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.certificate.ok and all(a == b == c for a, b, c in self.table.values())


def roundtrip(E: GlobalComplex, pou=None) -> Roundtrip:
    """Globalize ``T(E)`` and descend the certificate's ``φ`` to a global
    quasi-isomorphism ``E' -> E``; ``table[(x, n)]`` compares homology."""
    from .homology import _induced_rank

    cert = globalize(twist_object(E), pou)
    E2 = cert.E
    comp, hat = descend_morphism(cert.phi, E2, E, 0, pou)
    table = {}
    h1 = local_homology(E2.bundle, E2.d)
    h2 = local_homology(E.bundle, E.d)
    degs = sorted(set(E.bundle.degrees()) | set(E2.bundle.degrees()))
    for x in E.site.points:
        for n in degs:
            r = _induced_rank(comp.block(x, n), E2.d.block(x, n), E.d.block(x, n - 1))
            table[(x, n)] = (h1.get((x, n), 0), h2.get((x, n), 0), r)
    out = Roundtrip(cert, comp, hat, table)
    if not out.ok:
        bad = [k for k, v in table.items() if not v[0] == v[1] == v[2]]
        raise DescentError("roundtrip comparison is not a quasi-isomorphism", bad)
    return out
