"""Regenerate the seeded fixtures in fixtures/ (hand_*.json are written by hand)."""

import random
from fractions import Fraction
import sys
from pathlib import Path

from twistdescent.cechdg import cone, mc_residual, twist_object
from twistdescent.exactla import QQ
from twistdescent.generate import random_closed_morphism, random_site, random_t_image
from twistdescent.serialize import dumps, fixture_json

OUT = Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures")


def t_image():
    rng = random.Random(11)
    site = random_site(rng, QQ, n_points=3, n_opens=2)
    E, T, _ = random_t_image(rng, site, (0, 1), gauged=False)
    return fixture_json(site, {"E": E, "T": T})


def cone2():
    """Cone of a closed morphism with a nonzero (1,-1) piece; first such seed."""
    for seed in range(100):
        rng = random.Random(seed)
        site = random_site(rng, QQ, n_points=3, n_opens=2)
        E, A, hA = random_t_image(rng, site, (0, 1))
        F, B, hB = random_t_image(rng, site, (0, 1))
        phi = random_closed_morphism(rng, E, F, A, B, hA, hB)
        if (0, 0) in phi.bidegrees() and (1, -1) in phi.bidegrees():
            break
    G = cone(phi, A, B)
    assert mc_residual(G).is_zero()
    return fixture_json(site, {"G": G})


def corrupted(doc):
    """Bump one off-diagonal transition entry of the T-image."""
    for e in doc["objects"]["T"]["twist"]:
        if e["k"] == 1 and e["tuple"][0] != e["tuple"][1]:
            v = Fraction(e["matrix"][0][0]) + 1
            e["matrix"][0][0] = f"{v.numerator}/{v.denominator}"
            break
    del doc["objects"]["E"]
    return doc


def main():
    OUT.mkdir(exist_ok=True)
    t = t_image()
    (OUT / "t_image.json").write_text(dumps(t))
    (OUT / "cone2.json").write_text(dumps(cone2()))
    (OUT / "corrupted.json").write_text(dumps(corrupted(t_image())))


if __name__ == "__main__":
    main()
