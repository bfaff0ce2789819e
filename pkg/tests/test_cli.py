import json
import random
from pathlib import Path

import pytest
from click.testing import CliRunner

from twistdescent.cechdg import identity_morphism, twist_morphism, twist_object
from twistdescent.cli import main
from twistdescent.exactla import GF, QQ
from twistdescent.generate import random_closed_global_morphism, random_closed_morphism, random_global_complex, random_site
from twistdescent.serialize import dumps, fixture_json, load_fixture, read_fixture

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def error_of(res):
    return json.loads(res.stderr)


@pytest.fixture
def morph_fixture(tmp_path):
    rng = random.Random(21)
    site = random_site(rng, QQ, 3, 2)
    E, F = random_global_complex(rng, site, (0, 1)), random_global_complex(rng, site, (0, 1))
    TE, TF = twist_object(E), twist_object(F)
    phi = random_closed_morphism(rng, E, F, TE, TF)
    g = random_closed_global_morphism(rng, E, F)
    doc = fixture_json(
        site,
        {"E": E, "F": F},
        {
            "phi": ("E", "F", 0, phi),
            "one": ("E", "E", 0, identity_morphism(TE)),
            "g": ("E", "F", 0, g),
            "Tg": ("E", "F", 0, twist_morphism(g, TE, TF)),
        },
    )
    p = tmp_path / "morph.json"
    p.write_text(dumps(doc))
    return p


def test_validate_t_image():
    res = run("validate", FIXTURES / "t_image.json")
    assert res.exit_code == 0
    assert "object T (twisted): MC residual: 0" in res.stdout
    assert res.stdout.endswith("status: ok\n")


def test_validate_corrupted_names_location():
    res = run("validate", FIXTURES / "corrupted.json")
    assert res.exit_code == 1
    assert "MC residual nonzero on tuple (0, 1, 0) (k=2) at point x0, degree 1" in res.stdout
    assert "status: FAILED" in res.stdout


def test_globalize_out_file_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("globalize", FIXTURES / "cone2.json", "--out", a).exit_code == 0
    assert run("globalize", "--in", FIXTURES / "cone2.json", "--out", b).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    cert = json.loads(a.read_text())
    assert cert["certificate"]["residuals"] == {"d_squared": 0, "intertwining": 0, "maurer_cartan": 0}
    assert cert["certificate"]["weak_equivalence"] is True


def test_certificate_reloads_as_fixture(tmp_path):
    out = tmp_path / "c.json"
    run("globalize", FIXTURES / "hand_unipotent.json", "--out", out)
    fx = read_fixture(out)
    assert set(fx.objects) == {"E", "U"} and set(fx.morphisms) == {"phi"}
    res = run("weq", out, "phi")
    assert res.exit_code == 0 and json.loads(res.stdout)["weak_equivalence"] is True


def test_globalize_corrupted_fails_math():
    res = run("globalize", FIXTURES / "corrupted.json")
    assert res.exit_code == 1
    assert error_of(res)["kind"] == "math"


@pytest.mark.parametrize(
    "args",
    [
        ("validate", "missing.json"),
        ("validate",),
        ("validate", FIXTURES / "t_image.json", "--field", "fp:8"),
        ("validate", FIXTURES / "t_image.json", "--field", "r"),
        ("globalize", FIXTURES / "t_image.json", "nope"),
        ("twist", FIXTURES / "t_image.json", "T"),
    ],
)
def test_input_errors_exit_2(args):
    res = run(*args)
    assert res.exit_code == 2
    assert error_of(res)["kind"] == "input"


def test_bad_json_and_bad_shapes(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run("validate", p).exit_code == 2
    doc = json.loads((FIXTURES / "hand_transition.json").read_text())
    obj = next(iter(doc["objects"].values()))
    obj["twist"][0]["matrix"] = [[1, 2, 3]]
    p.write_text(json.dumps(doc))
    res = run("validate", p)
    assert res.exit_code == 2 and "shape" in error_of(res)["error"]
    doc = json.loads((FIXTURES / "hand_transition.json").read_text())
    doc["format_version"] = 9
    p.write_text(json.dumps(doc))
    assert run("validate", p).exit_code == 2


def test_field_override():
    res = run("validate", FIXTURES / "t_image.json", "--field", "fp:7")
    assert res.exit_code == 0 and res.stdout.startswith("field: fp:7\n")
    assert load_fixture(json.loads((FIXTURES / "t_image.json").read_text()), "fp:7").field == GF(7)


def test_homology_shift_twist():
    res = run("homology", FIXTURES / "t_image.json", "E")
    assert res.exit_code == 0 and set(json.loads(res.stdout)["homology"]) == {"E"}
    res = run("shift", FIXTURES / "t_image.json", "T")
    assert res.exit_code == 0 and "shift_T" in json.loads(res.stdout)["objects"]
    res = run("twist", FIXTURES / "t_image.json", "E")
    doc = json.loads(res.stdout)
    assert res.exit_code == 0
    # twisting the global object reproduces the shipped twisted object
    T = json.loads((FIXTURES / "t_image.json").read_text())["objects"]["T"]
    assert doc["objects"]["twist_E"] == T


def test_morphism_commands(morph_fixture, tmp_path):
    res = run("validate", morph_fixture)
    assert res.exit_code == 0 and res.stdout.count(": closed") == 4
    res = run("weq", morph_fixture, "one")
    assert res.exit_code == 0 and json.loads(res.stdout)["weak_equivalence"] is True
    res = run("cone", morph_fixture, "phi", "--out", tmp_path / "cone.json")
    assert res.exit_code == 0
    assert run("validate", tmp_path / "cone.json").exit_code == 0
    assert run("globalize", tmp_path / "cone.json").exit_code == 0
    res = run("descend-morphism", morph_fixture, "phi")
    assert res.exit_code == 0 and json.loads(res.stdout)["identity_residual"] == 0
    rep = json.loads(run("descend-morphism", morph_fixture, "Tg").stdout)
    assert rep["phi_hat"]["entries"] == []
    g = json.loads(morph_fixture.read_text())["morphisms"]["g"]
    assert rep["phi_tilde"]["entries"] == g["entries"]
    res = run("roundtrip", morph_fixture, "E")
    assert res.exit_code == 0 and json.loads(res.stdout)["quasi_isomorphism"] is True


def test_weq_on_zero_map_exits_1(tmp_path):
    fx = read_fixture(FIXTURES / "t_image.json")
    T = fx.twisted("T")
    from twistdescent.cechdg import HomCochain

    doc = fixture_json(fx.site, {"T": T}, {"z": ("T", "T", 0, HomCochain.zero(fx.site, T.bundles, T.bundles))})
    p = tmp_path / "z.json"
    p.write_text(dumps(doc))
    res = run("weq", p, "z")
    assert res.exit_code == 1 and json.loads(res.stdout)["witness"]


def test_serialize_roundtrip():
    for f in sorted(FIXTURES.glob("*.json")):
        doc = json.loads(f.read_text())
        fx = load_fixture(doc)
        again = fixture_json(fx.site, fx.objects)
        fx2 = load_fixture(json.loads(dumps(again)))
        for name, obj in fx.objects.items():
            assert fx2.objects[name] == obj


def test_cli_matches_goldens():
    golden = ROOT / "tests" / "golden"
    codes = json.loads((golden / "exit_codes.json").read_text())
    for stem, code in sorted(codes.items()):
        name, cmd = stem.split(".")
        res = run(cmd, FIXTURES / f"{name}.json")
        ext = "txt" if cmd == "validate" else "json"
        assert res.exit_code == code, stem
        assert res.stdout_bytes == (golden / f"{stem}.{ext}").read_bytes(), stem
