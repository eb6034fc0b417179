"""Lazy universal cover of a cone surface.

Copies of triangles are created on demand while crossing edges.  When the
full fan of corners around a vertex lift is present, crossing the last
open slot reuses the existing copy instead of creating a fresh one, so
the complex built is (a growing piece of) the universal cover and a loop
downstairs is contractible iff its lift returns to the starting copy.
"""

import heapq
import math

from . import geom
from .errors import BudgetExceeded, InvalidSurface
from .geom import EPS


class _Copy:
    __slots__ = ("tri", "nbr", "placement", "depth")

    def __init__(self, tri, placement, depth=0):
        self.tri = tri
        self.nbr = [None, None, None]   # (copy id, partner edge) or None
        self.placement = placement
        self.depth = depth


class Cover:
    def __init__(self, surface, root_tri=0, root_motion=geom.IDENTITY, max_copies=1_000_000):
        self.s = surface
        self.max_copies = max_copies
        self.copies = [_Copy(int(root_tri), root_motion)]
        self._deg = [len(f) for f in surface.vertex_fans()]

    # -- fan rotation ------------------------------------------------------------

    def _ccw(self, ci, c):
        """Step CCW around the vertex lift at corner (ci, c); None if open."""
        slot = (c + 2) % 3
        nbr = self.copies[ci].nbr[slot]
        if nbr is None:
            return None
        cj, ej = nbr
        return cj, ej

    def _cw(self, ci, c):
        nbr = self.copies[ci].nbr[c]
        if nbr is None:
            return None
        cj, ej = nbr
        return cj, (ej + 1) % 3

    def _glue(self, ci, e, cj, ej):
        self.copies[ci].nbr[e] = (cj, ej)
        self.copies[cj].nbr[ej] = (ci, e)

    def cross(self, ci, e):
        """Copy reached by crossing edge e of copy ci (creating it if needed)."""
        cp = self.copies[ci]
        if cp.nbr[e] is not None:
            return cp.nbr[e][0]
        s = self.s
        t2 = int(s.glue[cp.tri, e, 0])
        e2 = int(s.glue[cp.tri, e, 1])
        # fan closure around the edge's start corner (rotating CCW)
        v = int(s.corner_vertex[cp.tri, e])
        cur = (ci, e)
        for _ in range(self._deg[v] - 1):
            nxt = self._ccw(*cur)
            if nxt is None:
                cur = None
                break
            cur = nxt
        if cur is not None and cur != (ci, e):
            cj, cc = cur
            slot = (cc + 2) % 3
            if self.copies[cj].tri == t2 and slot == e2 and self.copies[cj].nbr[slot] is None:
                self._glue(ci, e, cj, slot)
                return cj
        # fan closure around the edge's end corner (rotating CW)
        v2 = int(s.corner_vertex[cp.tri, (e + 1) % 3])
        cur = (ci, (e + 1) % 3)
        for _ in range(self._deg[v2] - 1):
            nxt = self._cw(*cur)
            if nxt is None:
                cur = None
                break
            cur = nxt
        if cur is not None and cur != (ci, (e + 1) % 3):
            cj, cc = cur
            slot = cc
            if self.copies[cj].tri == t2 and slot == e2 and self.copies[cj].nbr[slot] is None:
                self._glue(ci, e, cj, slot)
                return cj
        # free extension
        if len(self.copies) >= self.max_copies:
            raise BudgetExceeded(
                f"universal cover exceeded {self.max_copies} copies", self.max_copies)
        placement = geom.compose(cp.placement, s.motion_across(cp.tri, e))
        nc = _Copy(t2, placement, cp.depth + 1)
        self.copies.append(nc)
        cj = len(self.copies) - 1
        self._glue(ci, e, cj, e2)
        return cj

    def rotate_to(self, ci, c, target_tri, target_corner):
        """Rotate CCW around the vertex lift at (ci, c) until the corner sits
        over (target_tri, target_corner) downstairs."""
        v = int(self.s.corner_vertex[self.copies[ci].tri, c])
        cur = (ci, c)
        for _ in range(self._deg[v] + 1):
            cj, cc = cur
            if self.copies[cj].tri == target_tri and cc == target_corner:
                return cur
            slot = (cc + 2) % 3
            nj = self.cross(cj, slot)
            cur = (nj, self.copies[cj].nbr[slot][1])
        raise InvalidSurface("fan rotation did not reach the target corner")


class HomotopyCertificate:
    def __init__(self, verdict, motion, copies_visited):
        self.verdict = verdict
        self.motion = motion
        self.copies_visited = copies_visited

    @property
    def contractible(self):
        return self.verdict == "contractible"

    def to_json(self):
        return {
            "schema": 1,
            "verdict": self.verdict,
            "motion": list(self.motion),
            "copies_visited": self.copies_visited,
        }


def _edge_endpoints(s, t, e):
    return int(s.corner_vertex[t, e]), int(s.corner_vertex[t, (e + 1) % 3])


def lift_edge_path(s, slots, cover=None):
    """Lift a closed edge path given as a list of slots (t, e), each
    traversed from corner e to corner e+1.  Returns a HomotopyCertificate.
    """
    if not slots:
        return HomotopyCertificate("contractible", geom.IDENTITY, 0)
    for i, (t, e) in enumerate(slots):
        t2, e2 = slots[(i + 1) % len(slots)]
        if _edge_endpoints(s, t, e)[1] != _edge_endpoints(s, t2, e2)[0]:
            raise InvalidSurface("edge path is not connected")
    if cover is None:
        cover = Cover(s, root_tri=slots[0][0])
    ci = 0
    corner = (ci, slots[0][1])
    for i, (t, e) in enumerate(slots):
        # we stand at the start corner of (t, e) in copy `corner`
        ci, cc = corner
        corner = (ci, (cc + 1) % 3)
        t2, e2 = slots[(i + 1) % len(slots)]
        # rotate to the next edge's start corner
        v = int(s.corner_vertex[t, (e + 1) % 3])
        cur = corner
        found = False
        for _ in range(cover._deg[v] + 1):
            cj, ck = cur
            if cover.copies[cj].tri == t2 and ck == e2:
                corner = cur
                found = True
                break
            slot = (ck + 2) % 3
            nj = cover.cross(cj, slot)
            cur = (nj, cover.copies[cj].nbr[slot][1])
        if not found:
            raise InvalidSurface("lift rotation failed")
    closed = corner[0] == 0 and corner[1] == slots[0][1]
    final = cover.copies[corner[0]].placement
    if closed:
        return HomotopyCertificate("contractible", geom.IDENTITY, len(cover.copies))
    return HomotopyCertificate("noncontractible", final, len(cover.copies))


def lift_loop_chain(s, legs, cover=None):
    """Lift a closed geodesic chain.

    ``legs`` is a list of (start_tri, start_corner, crossings,
    end_tri, end_corner): each leg starts at a vertex corner, crosses the
    listed slots, and ends at a vertex corner of the final triangle.
    Returns a HomotopyCertificate.
    """
    if cover is None:
        cover = Cover(s, root_tri=legs[0][0])
    ci = 0
    start_corner = (ci, legs[0][1])
    corner = start_corner
    for i, (t0, c0, crossings, t1, c1) in enumerate(legs):
        ci, cc = corner
        if cover.copies[ci].tri != t0 or cc != c0:
            raise InvalidSurface("leg does not start where the previous ended")
        for (t, e) in crossings:
            if cover.copies[ci].tri != t:
                raise InvalidSurface("crossing sequence inconsistent with lift")
            ci = cover.cross(ci, e)
        if cover.copies[ci].tri != t1:
            raise InvalidSurface("leg did not end on the expected triangle")
        nxt = legs[(i + 1) % len(legs)]
        corner = cover.rotate_to(ci, c1, nxt[0], nxt[1])
    closed = corner == start_corner
    final = cover.copies[corner[0]].placement
    if closed:
        return HomotopyCertificate("contractible", geom.IDENTITY, len(cover.copies))
    return HomotopyCertificate("noncontractible", final, len(cover.copies))


def is_contractible(s, loop):
    """Contractibility of a closed path.

    ``loop`` may be a list of slots (t, e) forming an edge path, or an
    object with a ``lift_legs(surface)`` method (geodesic loops).
    """
    if hasattr(loop, "lift_legs"):
        return lift_loop_chain(s, loop.lift_legs(s))
    return lift_edge_path(s, list(loop))


# -- shortest noncontractible edge cycle ------------------------------------------


def unique_edges(s):
    out = []
    for t in range(s.n):
        for e in range(3):
            t2, e2 = int(s.glue[t, e, 0]), int(s.glue[t, e, 1])
            if (t, e) <= (t2, e2):
                va, vb = _edge_endpoints(s, t, e)
                out.append((t, e, va, vb, float(s.lengths[t, e])))
    return out


def noncontractible_edge_bound(s, sources=None):
    """Length of the shortest noncontractible cycle in the 1-skeleton,
    found by Dijkstra trees plus one non-tree edge, certified by lifting.

    With ``sources`` restricted, bounds the shortest such cycle through
    any of the given vertices.
    """
    edges = unique_edges(s)
    adj = {v: [] for v in range(s.num_vertices)}
    for (t, e, va, vb, L) in edges:
        t2, e2 = int(s.glue[t, e, 0]), int(s.glue[t, e, 1])
        adj[va].append((vb, L, (t, e)))
        adj[vb].append((va, L, (t2, e2)))
    best = math.inf
    best_path = None
    if sources is None:
        sources = range(s.num_vertices)
    for src in sources:
        dist = {src: 0.0}
        parent = {src: None}   # slot traversed to arrive at the node
        pq = [(0.0, src)]
        while pq:
            d, v = heapq.heappop(pq)
            if d > dist.get(v, math.inf):
                continue
            for (w, L, slot) in adj[v]:
                nd = d + L
                if nd < dist.get(w, math.inf) - 1e-15:
                    dist[w] = nd
                    parent[w] = (v, slot)
                    heapq.heappush(pq, (nd, w))

        def path_to(v):
            slots = []
            while parent[v] is not None:
                u, slot = parent[v]
                slots.append(slot)
                v = u
            slots.reverse()
            return slots

        cands = []
        for (t, e, va, vb, L) in edges:
            if va not in dist or vb not in dist:
                continue
            cand = dist[va] + L + dist[vb]
            cands.append((cand, t, e, va, vb))
        cands.sort()
        for cand, t, e, va, vb in cands:
            if cand >= best - 1e-15:
                break
            t2, e2 = int(s.glue[t, e, 0]), int(s.glue[t, e, 1])
            fwd = path_to(va) + [(t, e)]
            back = path_to(vb)
            rev = []
            for (tt, ee) in reversed(back):
                gt, ge = int(s.glue[tt, ee, 0]), int(s.glue[tt, ee, 1])
                rev.append((gt, ge))
            loop = fwd + rev
            if not loop:
                continue
            cert = lift_edge_path(s, loop)
            if not cert.contractible:
                if cand < best:
                    best = cand
                    best_path = loop
                break
    if not math.isfinite(best):
        raise InvalidSurface("no noncontractible edge cycle found")
    return best, best_path


# -- metric ball of copies ---------------------------------------------------------


class UnfoldingTree:
    """Copies of triangles whose developed image meets a metric disk."""

    def __init__(self, surface, base, radius, copies, placements, parents):
        self.surface = surface
        self.base = base
        self.radius = radius
        self.copies = copies          # list of (copy index, triangle id)
        self.placements = placements  # motions into the base chart
        self.parents = parents

    def __len__(self):
        return len(self.copies)

    def base_vertex_lifts(self, v):
        """Developed positions of lifts of vertex v among the collected copies."""
        out = []
        for (ci, t), m in zip(self.copies, self.placements):
            for c in range(3):
                if int(self.surface.corner_vertex[t, c]) == v:
                    out.append(geom.apply(m, tuple(self.surface.coords[t, c])))
        return out


def _tri_dist(pts):
    """Distance from the origin to a placed triangle (0 when inside)."""
    if _point_in_tri((0.0, 0.0), pts):
        return 0.0
    return min(geom.point_seg_dist((0.0, 0.0), pts[i], pts[(i + 1) % 3])
               for i in range(3))


def _point_in_tri(p, pts):
    sgn = 0
    for i in range(3):
        a, b = pts[i], pts[(i + 1) % 3]
        c = geom.cross(b[0] - a[0], b[1] - a[1], p[0] - a[0], p[1] - a[1])
        if c > 1e-12:
            s = 1
        elif c < -1e-12:
            s = -1
        else:
            continue
        if sgn == 0:
            sgn = s
        elif s != sgn:
            return False
    return True


def unfold_ball(s, base, radius, max_copies=1_000_000):
    """Collect all triangle copies whose developed image meets the open
    disk of the given radius around the base point.

    ``base`` is (tri, (x, y)) in the triangle's chart, or ("vertex", v).
    """
    if radius < 0:
        raise InvalidSurface("radius must be nonnegative")
    if base[0] == "vertex":
        v = base[1]
        fan = s.vertex_fans()[v]
        t0, c0, _ = fan[0]
        p = tuple(s.coords[t0, c0])
        motion = (1.0, 0.0, -p[0], -p[1])
        root_tri = t0
    else:
        t0, xy = base
        motion = (1.0, 0.0, -float(xy[0]), -float(xy[1]))
        root_tri = int(t0)
    cover = Cover(s, root_tri=root_tri, root_motion=motion, max_copies=max_copies)
    placed = {0: motion}
    out_copies = []
    out_place = []
    out_parent = []
    pq = [(0.0, 0, -1)]
    seen = set()
    while pq:
        d, ci, par = heapq.heappop(pq)
        if ci in seen:
            continue
        seen.add(ci)
        if d >= radius:
            continue
        cp = cover.copies[ci]
        out_copies.append((ci, cp.tri))
        out_place.append(cp.placement)
        out_parent.append(par)
        for e in range(3):
            cj = cover.cross(ci, e)
            if cj in seen:
                continue
            pts = tuple(geom.apply(cover.copies[cj].placement,
                                   tuple(s.coords[cover.copies[cj].tri, c]))
                        for c in range(3))
            heapq.heappush(pq, (_tri_dist(pts), cj, ci))
    return UnfoldingTree(s, base, radius, out_copies, out_place, out_parent)
