"""JSON fixtures and reports.

Layout (``format_version`` 1)::

    {"format_version": 1, "field": "q" | "fp:<p>",
     "site": {"points": [...], "opens": [[...], ...], "pou": [{point: value}, ...]},
     "objects": {name: twisted or global object},
     "morphisms": {name: {"source", "target", "degree", "kind", "entries"}}}

A twisted object is ``{"kind": "twisted", "bundles": [bundle per open],
"twist": [{"k", "tuple", "point", "degree", "matrix"}]}``; a global object is
``{"kind": "global", "bundle": bundle, "differential": [{"point", "degree",
"matrix"}]}``.  A bundle is ``{"window": [lo, hi], "dims": {point: [dim for
each degree in the window]}}``.  Twisted morphism entries carry ``k`` (the
Čech degree); the internal degree is ``degree - k``.  A twisted morphism
whose source or target names a global object refers to its twisting-functor
image.  Rationals are written ``"a/b"``, prime-field elements as integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .bundle import GradedBundle, SheafMorphism
from .cechdg import GlobalComplex, HomCochain, TwistedComplex, twist_object
from .exactla import Field, Matrix, Rationals, parse_field
from .site import PartitionOfUnity, Site, validate_site

FORMAT_VERSION = 1


class FixtureError(ValueError):
    """Malformed input (exit status 2 in the CLI)."""


def field_tag(f: Field) -> str:
    return "q" if isinstance(f, Rationals) else f"fp:{f.p}"


def _scalar(f: Field, v):
    try:
        if isinstance(v, str):
            v = Fraction(v.strip())
        return f.coerce(v)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise FixtureError(f"bad scalar {v!r}: {e}") from None


def _matrix(f: Field, rows, nrows: int, ncols: int, where: str) -> Matrix:
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise FixtureError(f"{where}: matrix must be a list of rows")
    if len(rows) != nrows or any(len(r) != ncols for r in rows):
        got = (len(rows), len(rows[0]) if rows else 0)
        raise FixtureError(f"{where}: matrix has shape {got}, expected {(nrows, ncols)}")
    return Matrix(f, nrows, ncols, [[_scalar(f, v) for v in r] for r in rows])


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise FixtureError(f"{where}: missing '{key}'")
    return d[key]


# ---------------------------------------------------------------------------
# decoding


def read_site(doc: dict, f: Field) -> Site:
    s = _req(doc, "site", "fixture")
    points = [str(p) for p in _req(s, "points", "site")]
    opens = [[str(p) for p in u] for u in _req(s, "opens", "site")]
    rho = None
    if "pou" in s:
        rho = [{str(x): _scalar(f, v) for x, v in r.items()} for r in s["pou"]]
        if len(rho) != len(opens):
            raise FixtureError("site: partition of unity needs one function per open")
    try:
        site = Site.build(points, opens, f, rho)
    except ValueError as e:
        raise FixtureError(f"site: {e}") from None
    return site


def read_bundle(obj: dict, open_: frozenset, where: str) -> GradedBundle:
    win = obj.get("window")
    dims = {}
    table = obj.get("dims", {})
    if win:
        lo, hi = win
        for x, ds in table.items():
            if x not in open_:
                raise FixtureError(f"{where}: point {x} is not in the open")
            if len(ds) != hi - lo + 1:
                raise FixtureError(f"{where}: dims for {x} do not match the window")
            for n, d in zip(range(lo, hi + 1), ds):
                if not isinstance(d, int) or d < 0:
                    raise FixtureError(f"{where}: bad dimension {d!r}")
                if d:
                    dims[(x, n)] = d
    elif table:
        raise FixtureError(f"{where}: dims given without a window")
    return GradedBundle(open_, dims)


def read_object(site: Site, name: str, obj: dict):
    f = site.field
    kind = _req(obj, "kind", name)
    X = frozenset(site.points)
    if kind == "global":
        b = read_bundle(_req(obj, "bundle", name), X, f"{name}.bundle")
        mats = {}
        for e in obj.get("differential", []):
            x, n = str(_req(e, "point", name)), int(_req(e, "degree", name))
            mats[(x, n)] = _matrix(f, e["matrix"], b.dim(x, n + 1), b.dim(x, n), f"{name} at ({x}, {n})")
        try:
            return GlobalComplex(site, b, SheafMorphism(f, b, b, 1, mats))
        except ValueError as e:
            raise FixtureError(f"{name}: {e}") from None
    if kind == "twisted":
        bl = obj.get("bundles", [])
        if len(bl) != site.n_opens:
            raise FixtureError(f"{name}: one bundle per open is required")
        bundles = tuple(read_bundle(b, site.opens[i], f"{name}.bundles[{i}]") for i, b in enumerate(bl))
        blocks = _read_entries(site, bundles, bundles, obj.get("twist", []), 1, name)
        try:
            tw = HomCochain(site, bundles, bundles, blocks)
            return TwistedComplex(site, bundles, tw)
        except ValueError as e:
            raise FixtureError(f"{name}: {e}") from None
    raise FixtureError(f"{name}: unknown kind {kind!r}")


def _read_entries(site: Site, src, tgt, entries, total: int, where: str) -> dict:
    f = site.field
    blocks = {}
    for e in entries:
        k = int(_req(e, "k", where))
        tup = tuple(int(i) for i in _req(e, "tuple", where))
        x, n = str(_req(e, "point", where)), int(_req(e, "degree", where))
        if len(tup) != k + 1:
            raise FixtureError(f"{where}: tuple {list(tup)} does not have length k+1")
        if any(i < 0 or i >= site.n_opens for i in tup):
            raise FixtureError(f"{where}: tuple {list(tup)} names an unknown open")
        if x not in site.support(tup):
            raise FixtureError(f"{where}: point {x} is not in the support of {list(tup)}")
        q = total - k
        key = (tup, q, x, n)
        if key in blocks:
            raise FixtureError(f"{where}: duplicate entry for {list(tup)} at ({x}, {n})")
        blocks[key] = _matrix(f, e["matrix"], tgt[tup[0]].dim(x, n + q), src[tup[-1]].dim(x, n), f"{where} {list(tup)} at ({x}, {n})")
    return blocks


@dataclass
class Fixture:
    field: Field
    site: Site
    objects: dict = dc_field(default_factory=dict)
    morphisms: dict = dc_field(default_factory=dict)  # name -> (source, target, degree, kind, value)

    def twisted(self, name: str) -> TwistedComplex:
        o = self.objects[name]
        return twist_object(o) if isinstance(o, GlobalComplex) else o


def load_fixture(doc: dict, field_override: str | None = None) -> Fixture:
    if not isinstance(doc, dict):
        raise FixtureError("fixture must be a JSON object")
    ver = doc.get("format_version", FORMAT_VERSION)
    if ver != FORMAT_VERSION:
        raise FixtureError(f"unsupported format_version {ver}")
    try:
        f = parse_field(field_override or doc.get("field", "q"))
    except ValueError as e:
        raise FixtureError(str(e)) from None
    site = read_site(doc, f)
    fx = Fixture(f, site)
    for name, obj in sorted(doc.get("objects", {}).items()):
        fx.objects[name] = read_object(site, name, obj)
    for name, m in sorted(doc.get("morphisms", {}).items()):
        src, tgt = str(_req(m, "source", name)), str(_req(m, "target", name))
        for o in (src, tgt):
            if o not in fx.objects:
                raise FixtureError(f"{name}: unknown object {o!r}")
        deg = int(m.get("degree", 0))
        kind = m.get("kind", "twisted")
        if kind == "twisted":
            S, T = fx.twisted(src), fx.twisted(tgt)
            blocks = _read_entries(site, S.bundles, T.bundles, m.get("entries", []), deg, name)
            value = HomCochain(site, S.bundles, T.bundles, blocks)
        elif kind == "global":
            S, T = fx.objects[src], fx.objects[tgt]
            if not isinstance(S, GlobalComplex) or not isinstance(T, GlobalComplex):
                raise FixtureError(f"{name}: global morphisms need global objects")
            mats = {}
            for e in m.get("entries", []):
                x, n = str(_req(e, "point", name)), int(_req(e, "degree", name))
                mats[(x, n)] = _matrix(f, e["matrix"], T.bundle.dim(x, n + deg), S.bundle.dim(x, n), name)
            value = SheafMorphism(f, S.bundle, T.bundle, deg, mats)
        else:
            raise FixtureError(f"{name}: unknown kind {kind!r}")
        fx.morphisms[name] = (src, tgt, deg, kind, value)
    return fx


def read_fixture(path: str, field_override: str | None = None) -> Fixture:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise FixtureError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise FixtureError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None
    return load_fixture(doc, field_override)


# ---------------------------------------------------------------------------
# encoding


def site_json(site: Site) -> dict:
    out = {"points": list(site.points), "opens": [sorted(u) for u in site.opens]}
    if site.pou is not None:
        out["pou"] = [{x: site.field.to_json(v) for x, v in sorted(r.items()) if v != 0} for r in site.pou.rho]
    return out


def bundle_json(b: GradedBundle) -> dict:
    win = b.window()
    if win is None:
        return {"window": None, "dims": {}}
    lo, hi = win
    return {"window": [lo, hi], "dims": {x: [b.dim(x, n) for n in range(lo, hi + 1)] for x in b.points()}}


def cochain_entries(c: HomCochain) -> list:
    return [
        {"k": len(t) - 1, "tuple": list(t), "point": x, "degree": n, "matrix": m.to_json()}
        for (t, q, x, n), m in c.blocks.items()
    ]


def object_json(o) -> dict:
    if isinstance(o, GlobalComplex):
        return {
            "kind": "global",
            "bundle": bundle_json(o.bundle),
            "differential": [{"point": x, "degree": n, "matrix": m.to_json()} for (x, n), m in o.d.mats.items()],
        }
    return {"kind": "twisted", "bundles": [bundle_json(b) for b in o.bundles], "twist": cochain_entries(o.twist)}


def morphism_json(source: str, target: str, degree: int, value) -> dict:
    if isinstance(value, SheafMorphism):
        entries = [{"point": x, "degree": n, "matrix": m.to_json()} for (x, n), m in value.mats.items()]
        kind = "global"
    else:
        entries = cochain_entries(value)
        kind = "twisted"
    return {"source": source, "target": target, "degree": degree, "kind": kind, "entries": entries}


def fixture_json(site: Site, objects: dict, morphisms: dict | None = None) -> dict:
    """``morphisms``: name -> (source, target, degree, value)."""
    doc = {
        "format_version": FORMAT_VERSION,
        "field": field_tag(site.field),
        "site": site_json(site),
        "objects": {k: object_json(v) for k, v in objects.items()},
    }
    if morphisms:
        doc["morphisms"] = {k: morphism_json(*v) for k, v in morphisms.items()}
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def location(key) -> dict:
    t, q, x, n = key
    return {"k": len(t) - 1, "tuple": list(t), "point": x, "degree": n}


__all__ = [
    "FixtureError",
    "Fixture",
    "load_fixture",
    "read_fixture",
    "fixture_json",
    "object_json",
    "morphism_json",
    "site_json",
    "bundle_json",
    "dumps",
    "validate_site",
    "location",
]
