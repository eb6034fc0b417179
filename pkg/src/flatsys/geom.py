"""Small planar geometry helpers shared by the kernel modules.

Everything works in per-triangle local charts: a triangle with side
lengths (l01, l12, l20) is placed with corner 0 at the origin, corner 1
on the positive x-axis and corner 2 in the upper half plane.  Rigid
motions are orientation preserving and stored as (c, s, tx, ty) with
rotation matrix [[c, -s], [s, c]].
"""

import math

TWO_PI = 2.0 * math.pi

# Default metric tolerance for the whole kernel.
EPS = 1e-9
# Angular slack used by the unfolding search.
EPS_ANG = 1e-12

IDENTITY = (1.0, 0.0, 0.0, 0.0)


def tri_angles(l01, l12, l20):
    """Interior angles (at corners 0, 1, 2) from the three side lengths."""
    a0 = _law_of_cosines(l01, l20, l12)
    a1 = _law_of_cosines(l12, l01, l20)
    a2 = math.pi - a0 - a1
    if a2 < 0.0:
        a2 = _law_of_cosines(l20, l12, l01)
    return a0, a1, a2


def _law_of_cosines(a, b, opposite):
    c = (a * a + b * b - opposite * opposite) / (2.0 * a * b)
    c = min(1.0, max(-1.0, c))
    return math.acos(c)


def tri_coords(l01, l12, l20):
    """Local CCW coordinates of the three corners."""
    a0 = _law_of_cosines(l01, l20, l12)
    return (
        (0.0, 0.0),
        (l01, 0.0),
        (l20 * math.cos(a0), l20 * math.sin(a0)),
    )


def heron(l01, l12, l20):
    a, b, c = sorted((l01, l12, l20), reverse=True)
    # Kahan's numerically stable form.
    t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(t, 0.0))


def side_lengths(p, q, r):
    return (dist(p, q), dist(q, r), dist(r, p))


def dist(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


# -- rigid motions ----------------------------------------------------------

def apply(m, p):
    c, s, tx, ty = m
    x, y = p
    return (c * x - s * y + tx, s * x + c * y + ty)


def compose(m2, m1):
    """Motion doing m1 first, then m2."""
    c2, s2, t2x, t2y = m2
    c1, s1, t1x, t1y = m1
    return (
        c2 * c1 - s2 * s1,
        s2 * c1 + c2 * s1,
        c2 * t1x - s2 * t1y + t2x,
        s2 * t1x + c2 * t1y + t2y,
    )


def invert(m):
    c, s, tx, ty = m
    return (c, -s, -(c * tx + s * ty), -(-s * tx + c * ty))


def rotation(angle, tx=0.0, ty=0.0):
    return (math.cos(angle), math.sin(angle), tx, ty)


def motion_from_segment(a0, a1, b0, b1):
    """Motion sending segment (a0, a1) onto (b0, b1) (same length).

    Computed from dot/cross products rather than angles, so axis-aligned
    gluings come out exact.
    """
    da = (a1[0] - a0[0], a1[1] - a0[1])
    db = (b1[0] - b0[0], b1[1] - b0[1])
    c = da[0] * db[0] + da[1] * db[1]
    s = da[0] * db[1] - da[1] * db[0]
    n = math.hypot(c, s)
    c /= n
    s /= n
    tx = b0[0] - (c * a0[0] - s * a0[1])
    ty = b0[1] - (s * a0[0] + c * a0[1])
    return (c, s, tx, ty)


def motion_is_identity(m, tol=EPS):
    c, s, tx, ty = m
    return abs(c - 1.0) < tol and abs(s) < tol and abs(tx) < tol and abs(ty) < tol


# -- segments ---------------------------------------------------------------

def cross(ax, ay, bx, by):
    return ax * by - ay * bx


def seg_intersection(p0, p1, q0, q1):
    """Intersection params (t, u) of p0+t(p1-p0) = q0+u(q1-q0), or None."""
    dx1, dy1 = p1[0] - p0[0], p1[1] - p0[1]
    dx2, dy2 = q1[0] - q0[0], q1[1] - q0[1]
    den = cross(dx1, dy1, dx2, dy2)
    if abs(den) < 1e-15 * (abs(dx1) + abs(dy1) + abs(dx2) + abs(dy2) + 1e-300):
        return None
    ex, ey = q0[0] - p0[0], q0[1] - p0[1]
    t = cross(ex, ey, dx2, dy2) / den
    u = cross(ex, ey, dx1, dy1) / den
    return t, u


def point_seg_dist(p, a, b):
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    if L2 <= 0.0:
        return dist(p, a)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def angle_of(p):
    return math.atan2(p[1], p[0])


def unroll(angle, near):
    """Shift ``angle`` by a multiple of 2*pi to land closest to ``near``."""
    k = round((near - angle) / TWO_PI)
    return angle + k * TWO_PI


def poly_area(points):
    s = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def clip_convex(subject, clip):
    """Sutherland-Hodgman clip of polygon ``subject`` by CCW convex ``clip``."""
    out = list(subject)
    n = len(clip)
    for i in range(n):
        if not out:
            return []
        a = clip[i]
        b = clip[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        inside = [cross(ex, ey, p[0] - a[0], p[1] - a[1]) >= -1e-13 for p in out]
        nxt = []
        m = len(out)
        for j in range(m):
            k = (j + 1) % m
            if inside[j]:
                nxt.append(out[j])
            if inside[j] != inside[k]:
                hit = seg_intersection(out[j], out[k], a, b)
                if hit is not None:
                    t = min(1.0, max(0.0, hit[0]))
                    px = out[j][0] + t * (out[k][0] - out[j][0])
                    py = out[j][1] + t * (out[k][1] - out[j][1])
                    nxt.append((px, py))
        out = nxt
    return out
