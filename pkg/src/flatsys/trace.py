"""Straight-line tracing on a cone surface.

The tracer walks a geodesic segment across triangle charts without
mutating the mesh: it records edge crossings and vertex passages in
order, continues straight through flat vertices, and stops at cone
points.  Strip sweeps (flat-band detection) are built on top of it in
:mod:`flatsys.structure`.
"""

import math

from . import geom
from .errors import GeometryError
from .geom import EPS, TWO_PI


class TraceResult:
    __slots__ = ("events", "end", "traveled", "stopped_at_cone", "start")

    def __init__(self, start):
        self.start = start
        self.events = []      # ("cross", tri, edge) | ("vertex", v, dist, tri, corner, dir)
        self.end = None       # (tri, (x, y), dir)
        self.traveled = 0.0
        self.stopped_at_cone = None

    def crossings(self):
        return [(ev[1], ev[2]) for ev in self.events if ev[0] == "cross"]

    def vertex_hits(self):
        return [ev[1:] for ev in self.events if ev[0] == "vertex"]


def _continue_straight(s, v, t, c, d):
    """Wedge and direction continuing straight through flat vertex v,
    arrived at corner (t, c) with direction d."""
    back = (-d[0], -d[1])
    beta = s.direction_angle(t, c, back)
    theta = float(s.cone_angles[v])
    out = (beta + math.pi) % theta
    return s.wedge_at_angle(v, out)


def trace(s, t, xy, d, length, max_steps=100000):
    """Trace a straight segment of the given length from (t, xy, d).

    Returns a TraceResult; the walk stops early at cone points
    (``stopped_at_cone`` records the vertex).
    """
    eps = EPS * max(1.0, float(s.lengths.max()))
    res = TraceResult((int(t), tuple(xy), tuple(d)))
    pos = (float(xy[0]), float(xy[1]))
    remaining = float(length)
    t = int(t)
    for _ in range(max_steps):
        n = math.hypot(d[0], d[1])
        d = (d[0] / n, d[1] / n)
        best = None
        for e in range(3):
            A = tuple(s.coords[t, e])
            B = tuple(s.coords[t, (e + 1) % 3])
            hit = geom.seg_intersection(pos, (pos[0] + d[0], pos[1] + d[1]), A, B)
            if hit is None:
                continue
            rho, u = hit
            if rho <= eps:
                continue
            elen = geom.dist(A, B)
            if -100 * eps / elen <= u <= 1.0 + 100 * eps / elen:
                if best is None or rho < best[0]:
                    best = (rho, e, u, A, B, elen)
        if best is None:
            raise GeometryError("trace lost its exit edge")
        rho, e, u, A, B, elen = best
        if remaining <= rho - eps:
            res.end = (t, (pos[0] + remaining * d[0], pos[1] + remaining * d[1]), d)
            res.traveled += remaining
            return res
        corner = None
        if u * elen < 100 * eps:
            corner = e
        elif (1.0 - u) * elen < 100 * eps:
            corner = (e + 1) % 3
        if corner is not None:
            v = int(s.corner_vertex[t, corner])
            cpos = tuple(s.coords[t, corner])
            step = geom.dist(pos, cpos)
            res.traveled += step
            remaining -= step
            res.events.append(("vertex", v, res.traveled, t, corner, d))
            if remaining <= eps:
                res.end = (t, cpos, d)
                return res
            theta = float(s.cone_angles[v])
            if abs(theta - TWO_PI) > 1e-9:
                res.stopped_at_cone = v
                res.end = (t, cpos, d)
                return res
            t2, c2, d2 = _continue_straight(s, v, t, corner, d)
            t, pos, d = t2, tuple(s.coords[t2, c2]), d2
            continue
        hitpt = (A[0] + u * (B[0] - A[0]), A[1] + u * (B[1] - A[1]))
        step = geom.dist(pos, hitpt)
        res.traveled += step
        remaining -= step
        res.events.append(("cross", t, e))
        m = geom.invert(s.motion_across(t, e))
        pos = geom.apply(m, hitpt)
        c0, s0, _, _ = m
        d = (c0 * d[0] - s0 * d[1], s0 * d[0] + c0 * d[1])
        t = int(s.glue[t, e, 0])
    raise GeometryError("trace exceeded its step budget")


def trace_ray_from_vertex(s, v, angle, budget):
    """Trace the ray leaving vertex v at the given angle coordinate."""
    t, c, d = s.wedge_at_angle(v, angle)
    pos = tuple(s.coords[t, c])
    return trace(s, t, pos, d, budget)


def ray_hits_to_sc(s, v, angle, tr):
    """Saddle connection records for cone-vertex passages of a traced ray."""
    from .unfold import SaddleConnection
    out = []
    cone = set(s.cone_points())
    t0, c0, _ = s.wedge_at_angle(v, angle)
    crossings = []
    for ev in tr.events:
        if ev[0] == "cross":
            crossings.append((ev[1], ev[2]))
            continue
        _, u, dist, t, corner, d = ev
        if u in cone and dist > 1e-12:
            back = (-d[0], -d[1])
            ang_to = s.direction_angle(t, corner, back) % float(s.cone_angles[u])
            out.append(SaddleConnection(v, u, dist,
                                        angle % float(s.cone_angles[v]), ang_to,
                                        list(crossings), (t0, c0), (t, corner)))
    return out
