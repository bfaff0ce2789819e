"""Command-line front end.

``twistdescent COMMAND [FILE] [NAME...] [--in FILE] [--out FILE] [--field TAG]``

Exit status: 0 success, 1 mathematical failure (nonzero residual, failed
check), 2 input error.  Diagnostics go to stderr as one JSON object.
"""

from __future__ import annotations

import json
import sys

import click

from .cechdg import GlobalComplex, NotClosedError, cone, global_hom_diff, hom_diff, mc_residual, shift, twist_object
from .globalize import DescentError, descend_morphism, globalize, roundtrip
from .homology import is_weak_equivalence, local_homology
from .serialize import (
    FixtureError,
    dumps,
    field_tag,
    fixture_json,
    morphism_json,
    object_json,
    read_fixture,
)
from .site import validate_site

INPUT_ERROR = 2
MATH_ERROR = 1


class MathFailure(Exception):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


def _fail(kind: str, message: str, code: int):
    click.echo(json.dumps({"error": message, "kind": kind}, sort_keys=True), err=True)
    sys.exit(code)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _split(args: tuple, infile: str | None) -> tuple[str, list[str]]:
    args = list(args)
    if infile is None:
        if not args:
            raise FixtureError("no input file given")
        infile = args.pop(0)
    return infile, args


def _pick(names: list[str], pool: dict, what: str, pred=lambda v: True) -> str:
    if names:
        name = names[0]
        if name not in pool:
            raise FixtureError(f"unknown {what} {name!r}")
        return name
    cands = sorted(k for k, v in pool.items() if pred(v))
    if len(cands) != 1:
        raise FixtureError(f"name the {what} to use (candidates: {cands})")
    return cands[0]


def _common(fn):
    fn = click.argument("args", nargs=-1)(fn)
    fn = click.option("--in", "infile", default=None, help="Fixture file.")(fn)
    fn = click.option("--out", "out", default=None, help="Write the report here instead of stdout.")(fn)
    fn = click.option("--field", "field", default=None, help="Field override: q or fp:<prime>.")(fn)
    return fn


def _run(body):
    try:
        text, ok = body()
    except FixtureError as e:
        _fail("input", str(e), INPUT_ERROR)
    except (NotClosedError, DescentError, MathFailure) as e:
        _fail("math", str(e), MATH_ERROR)
    except ValueError as e:
        _fail("input", str(e), INPUT_ERROR)
    return text, ok


def _finish(text: str, ok: bool, out: str | None) -> None:
    _emit(text, out)
    sys.exit(0 if ok else MATH_ERROR)


def _loc(key) -> str:
    t, q, x, n = key
    return f"tuple {tuple(t)} (k={len(t) - 1}) at point {x}, degree {n}"


@click.group()
def main():
    """Exact twisted complexes and Čech descent."""


@main.command()
@_common
def validate(args, infile, out, field):
    """Site diagnostics, Maurer-Cartan residuals and closedness."""

    def body():
        path, _ = _split(args, infile)
        fx = read_fixture(path, field)
        lines = [f"field: {field_tag(fx.field)}"]
        ok = True
        diags = validate_site(fx.site)
        if diags:
            ok = False
            lines += [f"site: {d}" for d in diags]
        else:
            lines.append("site: ok")
        for name, obj in fx.objects.items():
            if isinstance(obj, GlobalComplex):
                bad = obj.validate()
                if bad:
                    ok = False
                    lines += [f"object {name} (global): {d}" for d in bad]
                else:
                    lines.append(f"object {name} (global): d∘d: 0")
                continue
            res = mc_residual(obj)
            if res.is_zero():
                lines.append(f"object {name} (twisted): MC residual: 0")
            else:
                ok = False
                for key in res.locations():
                    lines.append(f"object {name} (twisted): MC residual nonzero on {_loc(key)}")
        for name, (src, tgt, deg, kind, value) in fx.morphisms.items():
            if kind == "global":
                r = global_hom_diff(value, fx.objects[src], fx.objects[tgt])
                closed = r.is_zero()
            else:
                closed = hom_diff(value, fx.twisted(src).twist, fx.twisted(tgt).twist).is_zero()
            lines.append(f"morphism {name} ({src} -> {tgt}, degree {deg}): {'closed' if closed else 'not closed'}")
        lines.append("status: " + ("ok" if ok else "FAILED"))
        return "\n".join(lines) + "\n", ok

    _finish(*_run(body), out)


@main.command()
@_common
def homology(args, infile, out, field):
    """Pointwise homology of every object (per open for twisted ones)."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        rep = {}
        for name, obj in fx.objects.items():
            if names and name not in names:
                continue
            if isinstance(obj, GlobalComplex):
                h = local_homology(obj.bundle, obj.d)
                rep[name] = [{"point": x, "degree": n, "dim": d} for (x, n), d in sorted(h.items())]
            else:
                rows = []
                for i in range(fx.site.n_opens):
                    h = local_homology(obj.bundles[i], obj.local_differential(i))
                    rows += [{"index": i, "point": x, "degree": n, "dim": d} for (x, n), d in sorted(h.items())]
                rep[name] = rows
        return dumps({"homology": rep}), True

    _finish(*_run(body), out)


@main.command()
@_common
def weq(args, infile, out, field):
    """Is the named morphism a weak equivalence?"""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        name = _pick(names, fx.morphisms, "morphism", lambda v: v[3] == "twisted")
        src, tgt, deg, kind, value = fx.morphisms[name]
        if kind != "twisted":
            raise FixtureError("weq needs a twisted morphism")
        v = is_weak_equivalence(value, fx.twisted(src), fx.twisted(tgt))
        rep = {
            "morphism": name,
            "weak_equivalence": v.ok,
            "witness": [{"index": i, "point": x, "degree": n} for i, x, n in v.witness],
            "table": [
                {"index": i, "point": x, "degree": n, "source": a, "target": b, "rank": r}
                for (i, x, n), (a, b, r) in sorted(v.table.items())
            ],
        }
        return dumps(rep), v.ok

    _finish(*_run(body), out)


@main.command("cone")
@_common
def cone_cmd(args, infile, out, field):
    """Mapping cone of a closed degree-0 morphism, as a fixture."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        name = _pick(names, fx.morphisms, "morphism", lambda v: v[3] == "twisted" and v[2] == 0)
        src, tgt, deg, kind, value = fx.morphisms[name]
        c = cone(value, fx.twisted(src), fx.twisted(tgt))
        ok = mc_residual(c).is_zero()
        return dumps(fixture_json(fx.site, {f"cone_{name}": c})), ok

    _finish(*_run(body), out)


@main.command("shift")
@_common
def shift_cmd(args, infile, out, field):
    """Shift of an object (of its twisting-functor image if global)."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        name = _pick(names, fx.objects, "object")
        s = shift(fx.twisted(name))
        return dumps(fixture_json(fx.site, {f"shift_{name}": s})), mc_residual(s).is_zero()

    _finish(*_run(body), out)


@main.command("twist")
@_common
def twist_cmd(args, infile, out, field):
    """Twisting-functor image of a global object."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        name = _pick(names, fx.objects, "global object", lambda v: isinstance(v, GlobalComplex))
        obj = fx.objects[name]
        if not isinstance(obj, GlobalComplex):
            raise FixtureError(f"{name} is not a global object")
        t = twist_object(obj)
        return dumps(fixture_json(fx.site, {f"twist_{name}": t})), mc_residual(t).is_zero()

    _finish(*_run(body), out)


def certificate_json(fx, name: str, cert) -> dict:
    doc = fixture_json(
        fx.site,
        {"E": cert.E, name: cert.target},
        {"phi": ("E", name, 0, cert.phi)},
    )
    doc["certificate"] = {
        "input": name,
        "residuals": {
            "maurer_cartan": len(mc_residual(cert.target).blocks),
            "intertwining": len(cert.intertwine_residual.blocks),
            "d_squared": len(cert.E.validate()),
        },
        "weak_equivalence": cert.weq.ok,
        "homology": [
            {"index": i, "point": x, "degree": n, "source": a, "target": b, "rank": r}
            for (i, x, n), (a, b, r) in sorted(cert.weq.table.items())
        ],
        "steps": [{"level": m, "rank": r} for m, r in cert.steps],
    }
    return doc


@main.command("globalize")
@_common
def globalize_cmd(args, infile, out, field):
    """Global complex weakly equivalent to a twisted complex, with certificate."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        name = _pick(names, fx.objects, "object", lambda v: not isinstance(v, GlobalComplex))
        target = fx.twisted(name)
        res = mc_residual(target)
        if not res.is_zero():
            raise MathFailure(f"{name}: MC residual nonzero on {_loc(res.locations()[0])}")
        cert = globalize(target)
        return dumps(certificate_json(fx, name, cert)), cert.ok

    _finish(*_run(body), out)


@main.command("descend-morphism")
@_common
def descend_cmd(args, infile, out, field):
    """Descend a closed morphism between twisting-functor images."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)

        def between_globals(v):
            return v[3] == "twisted" and isinstance(fx.objects[v[0]], GlobalComplex) and isinstance(fx.objects[v[1]], GlobalComplex)

        name = _pick(names, fx.morphisms, "morphism", between_globals)
        src, tgt, deg, kind, value = fx.morphisms[name]
        if not between_globals(fx.morphisms[name]):
            raise FixtureError("descend-morphism needs a twisted morphism between global objects")
        E, F = fx.objects[src], fx.objects[tgt]
        tilde, hat = descend_morphism(value, E, F, deg)
        rep = {
            "morphism": name,
            "phi_tilde": morphism_json(src, tgt, deg, tilde),
            "phi_hat": morphism_json(src, tgt, deg - 1, hat),
            "identity_residual": 0,
        }
        return dumps(rep), True

    _finish(*_run(body), out)


@main.command("roundtrip")
@_common
def roundtrip_cmd(args, infile, out, field):
    """Globalize the twisting-functor image of a global object and compare."""

    def body():
        path, names = _split(args, infile)
        fx = read_fixture(path, field)
        name = _pick(names, fx.objects, "global object", lambda v: isinstance(v, GlobalComplex))
        E = fx.objects[name]
        if not isinstance(E, GlobalComplex):
            raise FixtureError(f"{name} is not a global object")
        r = roundtrip(E)
        rep = {
            "object": name,
            "globalized": object_json(r.certificate.E),
            "comparison": morphism_json("globalized", name, 0, r.comparison),
            "homology": [
                {"point": x, "degree": n, "globalized": a, "original": b, "rank": c}
                for (x, n), (a, b, c) in sorted(r.table.items())
            ],
            "quasi_isomorphism": r.ok,
        }
        return dumps(rep), r.ok

    _finish(*_run(body), out)


if __name__ == "__main__":  # pragma: no cover
    main()
