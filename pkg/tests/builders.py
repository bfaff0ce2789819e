"""Random valid twisted complexes for the tests."""

import random
from itertools import product

from twistdescent.cechdg import HomCochain, TwistedComplex, cone, shift
from twistdescent.exactla import Matrix
from twistdescent.generate import random_closed_morphism, random_site, random_t_image


def t_image_pair(rng, site, window=(0, 1), max_rank=2):
    E, t, h = random_t_image(rng, site, window, max_rank)
    F, s, g = random_t_image(rng, site, window, max_rank)
    return E, t, h, F, s, g


def random_cone(rng, site, window=(0, 1), max_rank=2, max_p=2):
    E, t, h, F, s, g = t_image_pair(rng, site, window, max_rank)
    phi = random_closed_morphism(rng, E, F, t, s, h, g, 0, max_p)
    return cone(phi, t, s), phi, t, s


def random_twisted(rng, site, window=(0, 1), max_rank=2, kind=None):
    """A valid twisted complex of one of three shapes: T-image, shift, cone."""
    kind = kind or rng.choice(["t", "shift", "cone"])
    if kind == "t":
        return random_t_image(rng, site, window, max_rank)[1]
    if kind == "shift":
        return shift(random_t_image(rng, site, window, max_rank)[1])
    return random_cone(rng, site, window, max_rank)[0]


def corrupt(rng, t: TwistedComplex, k=None):
    """Add a nonzero scalar to one entry of one twist block of Čech degree ``k``."""
    site, f = t.site, t.field
    slots = []
    for kk in ([k] if k is not None else range(3)):
        q = 1 - kk
        for tup in product(range(site.n_opens), repeat=kk + 1):
            for x in sorted(site.support(tup)):
                for n in t.degrees():
                    r, c = t.bundles[tup[0]].dim(x, n + q), t.bundles[tup[-1]].dim(x, n)
                    if r and c:
                        slots.append((tup, q, x, n, r, c))
    if not slots:
        return None, None
    tup, q, x, n, r, c = rng.choice(slots)
    key = (tup, q, x, n)
    rows = [list(row) for row in t.twist.block(*key).rows]
    rows[rng.randrange(r)][rng.randrange(c)] += f.coerce(rng.choice([1, 2, -1]))
    blocks = dict(t.twist.blocks)
    blocks[key] = Matrix(f, r, c, [[f.reduce(v) for v in row] for row in rows])
    return TwistedComplex(site, t.bundles, HomCochain(site, t.bundles, t.bundles, blocks)), key
