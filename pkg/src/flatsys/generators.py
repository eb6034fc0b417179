"""Built-in surface generators.

The public names (exposed by the CLI) are ``torus``, ``octagon``,
``example-4-10`` and ``perturbed``.  The module also builds a couple of
extra fixtures used by the test suite: a theta-graph of three cylinders
(carrying a nonsystolic cylinder domain) and two slit tori joined by a
tube (disconnected systolic part).
"""

import math

import numpy as np

from .errors import InvalidSurface
from .surface import ConeSurface


class _Assembler:
    """Collect triangles given by corner coordinates, then glue edges."""

    def __init__(self):
        self.tris = []
        self.glue = {}

    def tri(self, a, b, c):
        ax, ay = a
        bx, by = b
        cx, cy = c
        if (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) <= 0:
            raise InvalidSurface("assembler triangle must be CCW")
        self.tris.append((a, b, c))
        return len(self.tris) - 1

    def join(self, s1, s2):
        if s1 in self.glue or s2 in self.glue:
            raise InvalidSurface(f"slot glued twice: {s1} ~ {s2}")
        self.glue[s1] = s2
        self.glue[s2] = s1

    def build(self):
        n = len(self.tris)
        lengths = np.empty((n, 3))
        for t, (a, b, c) in enumerate(self.tris):
            lengths[t, 0] = math.dist(a, b)
            lengths[t, 1] = math.dist(b, c)
            lengths[t, 2] = math.dist(c, a)
        glue = np.empty((n, 3, 2), dtype=np.int32)
        for t in range(n):
            for e in range(3):
                if (t, e) not in self.glue:
                    raise InvalidSurface(f"unglued slot {t}.{e}")
                glue[t, e] = self.glue[(t, e)]
        return ConeSurface(lengths, glue)


def torus(a=1.0, b=1.0, shear=0.0):
    """Flat torus from the lattice spanned by (a, 0) and (shear, b)."""
    if a <= 0 or b <= 0:
        raise InvalidSurface("torus needs a, b > 0")
    A = _Assembler()
    v00 = (0.0, 0.0)
    v10 = (a, 0.0)
    v01 = (shear, b)
    v11 = (a + shear, b)
    t0 = A.tri(v00, v10, v11)
    t1 = A.tri(v00, v11, v01)
    A.join((t0, 2), (t1, 0))   # diagonal
    A.join((t0, 0), (t1, 1))   # bottom ~ top
    A.join((t0, 1), (t1, 2))   # right ~ left
    return A.build()


def octagon(side=1.0):
    """Regular octagon with opposite sides identified: genus 2, one 6*pi
    cone point."""
    if side <= 0:
        raise InvalidSurface("octagon needs side > 0")
    R = side / (2.0 * math.sin(math.pi / 8.0))
    cs = [(R * math.cos(math.pi / 8 + k * math.pi / 4),
           R * math.sin(math.pi / 8 + k * math.pi / 4)) for k in range(8)]
    A = _Assembler()
    tris = [A.tri(cs[0], cs[i + 1], cs[i + 2]) for i in range(6)]
    for i in range(5):
        A.join((tris[i], 2), (tris[i + 1], 0))
    # octagon side k as a slot
    def side_slot(k):
        if k == 0:
            return (tris[0], 0)
        if k <= 6:
            return (tris[k - 1], 1)
        return (tris[5], 2)
    for k in range(4):
        A.join(side_slot(k), side_slot(k + 4))
    return A.build()


def _cylinder_quads(A, x0, width, h, y0=0.0):
    """Two CCW triangles forming the quad [x0, x0+width] x [y0, y0+h].
    Returns (lower tri, upper tri); lower.e0 = bottom, upper.e1 = top,
    lower.e1 = right side, upper.e2 = left side."""
    b0 = (x0, y0)
    b1 = (x0 + width, y0)
    t1 = (x0 + width, y0 + h)
    t0 = (x0, y0 + h)
    lo = A.tri(b0, b1, t1)
    up = A.tri(b0, t1, t0)
    A.join((lo, 2), (up, 0))
    return lo, up


def example_4_10(h=math.pi / 4.0):
    """Doubled flat four-holed sphere from four circumference-pi cylinders
    of altitude h, bottoms chained along the meridians, folded at the
    poles.  Genus 3, four cone points of total angle 4*pi.

    The gluing reads the cylinder bottoms as covering one meridian pair
    each (meridians of length pi/2 joining the two poles); see the module
    documentation for the ambiguity this resolves.
    """
    if h < math.pi / 4.0 - 1e-12:
        raise InvalidSurface("example-4-10 requires altitude h >= pi/4")
    A = _Assembler()
    half = math.pi / 2.0
    # one copy of X: cylinders k = 0..3, each two quads
    def build_copy():
        quads = []
        for _k in range(4):
            lo1, up1 = _cylinder_quads(A, 0.0, half, h)
            lo2, up2 = _cylinder_quads(A, half, half, h)
            # internal verticals of the cylinder
            A.join((lo1, 1), (up2, 2))   # x = pi/2
            A.join((up1, 2), (lo2, 1))   # x = 0 ~ x = pi
            quads.append((lo1, up1, lo2, up2))
        # chain the bottoms: arc b_k ~ arc a_{k+1}
        for k in range(4):
            lo2 = quads[k][2]
            lo1n = quads[(k + 1) % 4][0]
            A.join((lo2, 0), (lo1n, 0))
        return quads

    # mirror copy: same construction with reversed corner order is
    # equivalent to reusing the builder and flipping each top gluing.
    qA = build_copy()
    qB = build_copy()
    # glue tops: cylinder k of A to cylinder k of B, pointwise in x.
    # top arcs: up.e1 runs right-to-left, so A-arc ~ B-arc directly gives
    # the orientation-reversing identification of the double.
    for k in range(4):
        A.join((qA[k][1], 1), (qB[k][1], 1))   # arc x in [0, pi/2]
        A.join((qA[k][3], 1), (qB[k][3], 1))   # arc x in [pi/2, pi]
    return A.build()


def theta_cylinders(c=1.0, h1=0.8, h2=0.8, h3=0.7):
    """Two systolic cylinders of circumference c and a nonsystolic one of
    circumference 2c, wedged along two vertices.  Genus 2, two 4*pi cone
    points; the wide cylinder is a flat nonsystolic domain."""
    A = _Assembler()
    lo_a, up_a = _cylinder_quads(A, 0.0, c, h1)
    A.join((lo_a, 1), (up_a, 2))
    lo_b, up_b = _cylinder_quads(A, 0.0, c, h2)
    A.join((lo_b, 1), (up_b, 2))
    # wide cylinder: two columns of width c
    lo1, up1 = _cylinder_quads(A, 0.0, c, h3)
    lo2, up2 = _cylinder_quads(A, c, c, h3)
    A.join((lo1, 1), (up2, 2))
    A.join((up1, 2), (lo2, 1))
    # bottoms
    A.join((lo_a, 0), (lo1, 0))
    A.join((lo_b, 0), (lo2, 0))
    # tops
    A.join((up_a, 1), (up1, 1))
    A.join((up_b, 1), (up2, 1))
    return A.build()


def tube_tori(H=1.3, x0=0.2, x1=0.8, y0=0.5, tube_h=0.9):
    """Two 1 x H slit tori joined by a cylinder glued into the slits.

    The tube has circumference 2*(x1-x0) > 1, so it is a nonsystolic flat
    cylinder domain, and the two horizontal systolic bands are disjoint:
    the systolic part is disconnected.
    """
    if not (0 < x0 < x1 < 1) or H <= 1.0:
        raise InvalidSurface("tube_tori needs 0 < x0 < x1 < 1 and H > 1")
    s = x1 - x0
    if 2 * s <= 1.0:
        raise InvalidSurface("tube circumference 2*(x1-x0) must exceed 1")
    A = _Assembler()

    def slit_torus():
        a = (0.0, 0.0)
        b = (1.0, 0.0)
        c = (1.0, H)
        d = (0.0, H)
        p = (x0, y0)
        q = (x1, y0)
        t1 = A.tri(a, b, q)
        t2 = A.tri(b, c, q)
        t3 = A.tri(c, d, q)
        t4 = A.tri(d, a, p)
        t5 = A.tri(q, d, p)
        t6 = A.tri(a, q, p)
        A.join((t1, 0), (t3, 0))   # bottom ~ top
        A.join((t4, 0), (t2, 0))   # left ~ right
        A.join((t1, 2), (t6, 0))   # AQ
        A.join((t1, 1), (t2, 2))   # BQ
        A.join((t2, 1), (t3, 2))   # CQ
        A.join((t3, 1), (t5, 0))   # DQ
        A.join((t5, 1), (t4, 2))   # DP
        A.join((t4, 1), (t6, 2))   # AP
        upper = (t5, 2)            # P -> Q, upper side of the slit
        lower = (t6, 1)            # Q -> P, lower side
        return upper, lower

    up1, lo1 = slit_torus()
    up2, lo2 = slit_torus()
    # tube: circumference 2s, height tube_h, two columns of width s
    lo_a, up_a = _cylinder_quads(A, 0.0, s, tube_h)
    lo_b, up_b = _cylinder_quads(A, s, s, tube_h)
    A.join((lo_a, 1), (up_b, 2))
    A.join((up_a, 2), (lo_b, 1))
    A.join((lo_a, 0), up1)
    A.join((lo_b, 0), lo1)
    A.join((up_a, 1), up2)
    A.join((up_b, 1), lo2)
    return A.build()


def perturbed(base=None, insertions=(), seed=None):
    """Base surface with extra singularity pairs created by inverse kite
    surgery.  ``insertions`` is a list of dicts accepted by
    :func:`flatsys.kites.insert_kite`; with ``seed`` given, that many
    random admissible insertions are generated instead."""
    from . import kites
    s = base if base is not None else octagon(1.0)
    if seed is not None:
        rng = np.random.default_rng(seed)
        count = insertions if isinstance(insertions, int) else 1
        s = kites.random_insertions(s, count, rng)
        return s
    for spec in insertions:
        s = kites.insert_kite(s, **spec)["surface"] if isinstance(
            kites.insert_kite(s, **spec), dict) else kites.insert_kite(s, **spec)
    return s


def generate(spec):
    """Build a surface from a GeneratorSpec-style mapping
    ``{"name": ..., <parameters>}``."""
    name = spec["name"]
    params = {k: v for k, v in spec.items() if k != "name"}
    if name == "torus":
        return torus(**params)
    if name == "octagon":
        return octagon(**params)
    if name in ("example-4-10", "example_4_10"):
        return example_4_10(**params)
    if name == "perturbed":
        return perturbed(**params)
    if name == "theta":
        return theta_cylinders(**params)
    if name == "tube-tori":
        return tube_tori(**params)
    raise InvalidSurface(f"unknown generator {name!r}")
