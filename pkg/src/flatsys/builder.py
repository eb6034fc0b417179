"""Mutable mesh editor used by overlay and the cut-and-paste surgeries.

A :class:`MeshBuilder` starts from a :class:`~flatsys.surface.ConeSurface`
and supports inserting straight segments as mesh edges (splitting faces
as the segment is traced), breaking and creating gluings, deleting
faces, and freezing the result back into an immutable surface.

Sub-faces produced by splits keep the coordinate chart of their ancestor
triangle, so a direction expressed in an original chart stays valid in
every descendant of that triangle.
"""

import math

import numpy as np

from . import geom
from .errors import GeometryError, InvalidSurface
from .geom import EPS, TWO_PI
from .surface import ConeSurface


class _Face:
    __slots__ = ("id", "pts", "labels", "glue", "tags", "orig")

    def __init__(self, fid, pts, labels, glue, tags, orig):
        self.id = fid
        self.pts = pts
        self.labels = labels
        self.glue = glue
        self.tags = tags
        self.orig = orig

    def edge(self, e):
        return self.pts[e], self.pts[(e + 1) % 3]

    def edge_len(self, e):
        a, b = self.edge(e)
        return geom.dist(a, b)

    def corner_angle(self, c):
        p = self.pts[c]
        u = self.pts[(c + 1) % 3]
        v = self.pts[(c + 2) % 3]
        a = math.atan2(v[1] - p[1], v[0] - p[0]) - math.atan2(u[1] - p[1], u[0] - p[0])
        while a < 0.0:
            a += TWO_PI
        return a

    def area(self):
        return abs(geom.poly_area(self.pts))


class ChainPoint:
    __slots__ = ("label", "dist")

    def __init__(self, label, dist):
        self.label = label
        self.dist = dist

    def __repr__(self):
        return f"ChainPoint({self.label}, {self.dist:.9f})"


class SplitRecord:
    __slots__ = ("label", "f_near", "f_far", "g_near", "g_far")

    def __init__(self, label, f_near, f_far, g_near, g_far):
        self.label = label
        self.f_near = f_near   # half containing the start corner of the edge
        self.f_far = f_far
        self.g_near = g_near   # partner halves (None when boundary)
        self.g_far = g_far


class MeshBuilder:
    def __init__(self, surface):
        self.surface = surface
        self.faces = {}
        self.next_fid = surface.n
        self.next_label = surface.num_vertices
        self.label_origin = {v: v for v in range(surface.num_vertices)}
        self.label_tags = {}
        self.eps = EPS * max(1.0, float(surface.lengths.max()))
        for t in range(surface.n):
            pts = tuple(tuple(surface.coords[t, c]) for c in range(3))
            labels = tuple(int(surface.corner_vertex[t, c]) for c in range(3))
            glue = [(int(surface.glue[t, e, 0]), int(surface.glue[t, e, 1]))
                    for e in range(3)]
            self.faces[t] = _Face(t, pts, labels, glue,
                                  [frozenset(), frozenset(), frozenset()], t)

    # -- allocation ----------------------------------------------------------

    def _new_fid(self):
        fid = self.next_fid
        self.next_fid += 1
        return fid

    def new_label(self, tags=frozenset()):
        lab = self.next_label
        self.next_label += 1
        self.label_origin[lab] = None
        if tags:
            self.label_tags[lab] = set(tags)
        return lab

    def tag_label(self, lab, tag):
        self.label_tags.setdefault(lab, set()).add(tag)

    # -- structural edits ------------------------------------------------------

    def transition(self, fid, e):
        """Motion mapping the glued partner's chart into fid's chart."""
        f = self.faces[fid]
        if f.glue[e] is None:
            raise GeometryError(f"edge {fid}.{e} is boundary")
        g, e2 = f.glue[e]
        a0, a1 = f.edge(e)
        b0, b1 = self.faces[g].edge(e2)
        return geom.motion_from_segment(b1, b0, a0, a1)

    def split_edge(self, fid, e, u, label=None):
        """Split edge e of face fid (and its glued partner) at parameter u.

        The parameter runs from corner e toward corner e+1.  Returns a
        :class:`SplitRecord`.
        """
        if not (1e-12 < u < 1.0 - 1e-12):
            raise GeometryError(f"degenerate edge split parameter {u}")
        f = self.faces[fid]
        partner = f.glue[e]
        if label is None:
            label = self.new_label()
        f1, f2 = self._split_one(fid, e, u, label)
        if partner is not None:
            g, e2 = partner
            g1, g2 = self._split_one(g, e2, 1.0 - u, label)
            self.faces[f1].glue[0] = (g2, 0)
            self.faces[g2].glue[0] = (f1, 0)
            self.faces[f2].glue[0] = (g1, 0)
            self.faces[g1].glue[0] = (f2, 0)
        else:
            g1 = g2 = None
        return SplitRecord(label, f1, f2, g1, g2)

    def _split_one(self, fid, e, u, label):
        f = self.faces.pop(fid)
        X, Y = f.edge(e)
        Z = f.pts[(e + 2) % 3]
        M = (X[0] + u * (Y[0] - X[0]), X[1] + u * (Y[1] - X[1]))
        lx = f.labels[e]
        ly = f.labels[(e + 1) % 3]
        lz = f.labels[(e + 2) % 3]
        te = f.tags[e]
        f1 = _Face(self._new_fid(), (X, M, Z), (lx, label, lz),
                   [None, None, f.glue[(e + 2) % 3]],
                   [te, frozenset(), f.tags[(e + 2) % 3]], f.orig)
        f2 = _Face(self._new_fid(), (M, Y, Z), (label, ly, lz),
                   [None, f.glue[(e + 1) % 3], None],
                   [te, f.tags[(e + 1) % 3], frozenset()], f.orig)
        self.faces[f1.id] = f1
        self.faces[f2.id] = f2
        f1.glue[1] = (f2.id, 2)
        f2.glue[2] = (f1.id, 1)
        if f1.glue[2] is not None:
            g, ge = f1.glue[2]
            self.faces[g].glue[ge] = (f1.id, 2)
        if f2.glue[1] is not None:
            g, ge = f2.glue[1]
            self.faces[g].glue[ge] = (f2.id, 1)
        return f1.id, f2.id

    def split_face(self, fid, pt, label=None):
        """Insert an interior vertex, 3-splitting the face.  Returns label."""
        f = self.faces.pop(fid)
        if label is None:
            label = self.new_label()
        A, B, C = f.pts
        la, lb, lc = f.labels
        faces = []
        for P, Q, lp, lq, e in ((A, B, la, lb, 0), (B, C, lb, lc, 1), (C, A, lc, la, 2)):
            nf = _Face(self._new_fid(), (P, Q, pt), (lp, lq, label),
                       [f.glue[e], None, None],
                       [f.tags[e], frozenset(), frozenset()], f.orig)
            faces.append(nf)
            self.faces[nf.id] = nf
            if f.glue[e] is not None:
                g, ge = f.glue[e]
                self.faces[g].glue[ge] = (nf.id, 0)
        for i in range(3):
            a, b = faces[i], faces[(i + 1) % 3]
            a.glue[1] = (b.id, 2)
            b.glue[2] = (a.id, 1)
        return label

    def delete_faces(self, fids):
        for fid in fids:
            f = self.faces.pop(fid)
            for e in range(3):
                if f.glue[e] is not None:
                    g, ge = f.glue[e]
                    if g in self.faces:
                        self.faces[g].glue[ge] = None

    def cut_slot(self, fid, e):
        f = self.faces[fid]
        if f.glue[e] is not None:
            g, ge = f.glue[e]
            self.faces[g].glue[ge] = None
            f.glue[e] = None

    def glue_slots(self, a, b):
        (fa, ea), (fb, eb) = a, b
        la = self.faces[fa].edge_len(ea)
        lb = self.faces[fb].edge_len(eb)
        if abs(la - lb) > 100 * self.eps:
            raise GeometryError(f"cannot glue slots of lengths {la} and {lb}")
        if self.faces[fa].glue[ea] is not None or self.faces[fb].glue[eb] is not None:
            raise GeometryError("slot already glued")
        self.faces[fa].glue[ea] = (fb, eb)
        self.faces[fb].glue[eb] = (fa, ea)

    def add_tag(self, fid, e, tag):
        f = self.faces[fid]
        f.tags[e] = f.tags[e] | {tag}
        if f.glue[e] is not None:
            g, ge = f.glue[e]
            gf = self.faces[g]
            gf.tags[ge] = gf.tags[ge] | {tag}

    # -- queries ----------------------------------------------------------------

    def corners_of_label(self, label):
        out = []
        for fid in sorted(self.faces):
            f = self.faces[fid]
            for c in range(3):
                if f.labels[c] == label:
                    out.append((fid, c))
        return out

    def vertex_angle(self, label):
        return sum(self.faces[fid].corner_angle(c)
                   for fid, c in self.corners_of_label(label))

    def locate_wedge(self, label, orig_tri, direction):
        """Face/corner at ``label`` whose wedge contains ``direction``
        (a vector in the chart of original triangle ``orig_tri``)."""
        for fid, c in self.corners_of_label(label):
            f = self.faces[fid]
            if f.orig != orig_tri:
                continue
            if self._wedge_contains(f, c, direction):
                return fid, c
        raise GeometryError(
            f"no wedge at label {label} over chart {orig_tri} contains the direction")

    @staticmethod
    def _wedge_contains(f, c, d):
        p = f.pts[c]
        u = f.pts[(c + 1) % 3]
        v = f.pts[(c + 2) % 3]
        c1 = geom.cross(u[0] - p[0], u[1] - p[1], d[0], d[1])
        c2 = geom.cross(d[0], d[1], v[0] - p[0], v[1] - p[1])
        tol = -1e-11 * max(1.0, geom.dist(p, u), geom.dist(p, v))
        return c1 >= tol and c2 >= tol

    def boundary_slots(self, tag=None):
        out = []
        for fid in sorted(self.faces):
            f = self.faces[fid]
            for e in range(3):
                if f.glue[e] is None and (tag is None or tag in f.tags[e]):
                    out.append((fid, e))
        return out

    def flood(self, seeds, blocked):
        """Face ids reachable from ``seeds`` without crossing edges for
        which ``blocked(face, e)`` is true."""
        reached = set(seeds)
        stack = list(seeds)
        while stack:
            fid = stack.pop()
            f = self.faces[fid]
            for e in range(3):
                if f.glue[e] is None or blocked(f, e):
                    continue
                g = f.glue[e][0]
                if g not in reached:
                    reached.add(g)
                    stack.append(g)
        return reached

    # -- straight walking ---------------------------------------------------------

    def _continue_through_vertex(self, fid, ci, d):
        """Continue a straight segment through the (flat) vertex at corner
        (fid, ci) arrived at with direction d.  Returns (fid', ci', d')."""
        label = self.faces[fid].labels[ci]
        theta = self.vertex_angle(label)
        if abs(theta - TWO_PI) > 1e-7:
            raise GeometryError(
                f"segment passes through cone point (label {label}, "
                f"angle {theta:.9f})")
        f = self.faces[fid]
        p = f.pts[ci]
        u = f.pts[(ci + 1) % 3]
        s1 = math.atan2(u[1] - p[1], u[0] - p[0])
        beta = math.atan2(-d[1], -d[0]) - s1
        while beta < -1e-9:
            beta += TWO_PI
        beta = max(0.0, beta)
        need = math.pi
        cur_fid, cur_c = fid, ci
        for _ in range(10000):
            f = self.faces[cur_fid]
            wedge = f.corner_angle(cur_c)
            avail = wedge - beta
            if avail >= need - 1e-12:
                p = f.pts[cur_c]
                u = f.pts[(cur_c + 1) % 3]
                s1 = math.atan2(u[1] - p[1], u[0] - p[0])
                out = s1 + beta + need
                return cur_fid, cur_c, (math.cos(out), math.sin(out))
            need -= avail
            g = f.glue[(cur_c + 2) % 3]
            if g is None:
                raise GeometryError("vertex continuation hit a boundary")
            cur_fid, cur_c = g
            beta = 0.0
        raise GeometryError("vertex continuation did not terminate")

    def insert_segment(self, start, length, tag, expect_label=None):
        """Insert a straight segment of the given length as mesh edges.

        ``start`` is ``(label, orig_tri, direction)`` anchored at a vertex,
        or ``("free", fid, xy, direction)`` for an interior start point.

        Returns the chain of :class:`ChainPoint` along the segment.
        """
        if start[0] == "free":
            _, fid, xy, direction = start
            orig = self.faces[fid].orig
            lab = self.split_face(fid, xy)
            f0, c0 = self.locate_wedge(lab, orig, direction)
        else:
            lab, orig_tri, direction = start
            f0, c0 = self.locate_wedge(lab, orig_tri, direction)
        chain = [ChainPoint(lab, 0.0)]
        self._walk(f0, c0, direction, float(length), tag, chain)
        if expect_label is not None and chain[-1].label != expect_label:
            raise GeometryError(
                f"segment ended at label {chain[-1].label}, expected {expect_label}")
        return chain

    def _walk(self, fid, ci, d, remaining, tag, chain, max_steps=100000):
        eps = self.eps
        for _ in range(max_steps):
            f = self.faces[fid]
            p = f.pts[ci]
            nd = math.hypot(d[0], d[1])
            d = (d[0] / nd, d[1] / nd)
            u1 = f.pts[(ci + 1) % 3]
            u2 = f.pts[(ci + 2) % 3]
            s1 = (u1[0] - p[0], u1[1] - p[1])
            s2 = (u2[0] - p[0], u2[1] - p[1])
            l1 = math.hypot(*s1)
            l2 = math.hypot(*s2)
            along1 = (abs(geom.cross(s1[0], s1[1], d[0], d[1])) / l1 < 1e-9
                      and s1[0] * d[0] + s1[1] * d[1] > 0.0)
            along2 = (abs(geom.cross(s2[0], s2[1], d[0], d[1])) / l2 < 1e-9
                      and s2[0] * d[0] + s2[1] * d[1] > 0.0)
            if along1 or along2:
                if along1:
                    e, elen, far_c = ci, l1, (ci + 1) % 3
                else:
                    e, elen, far_c = (ci + 2) % 3, l2, (ci + 2) % 3
                if remaining >= elen - eps:
                    self.add_tag(fid, e, tag)
                    remaining -= elen
                    chain.append(ChainPoint(f.labels[far_c], chain[-1].dist + elen))
                    if remaining <= eps:
                        return
                    fid, ci, d = self._continue_through_vertex(fid, far_c, d)
                    continue
                t = remaining / elen
                if e != ci:
                    t = 1.0 - t     # edge (ci+2) runs corner ci+2 -> corner ci
                rec = self.split_edge(fid, e, t)
                end = self._pt_along(p, d, remaining)
                self._tag_chord(p, end, tag)
                chain.append(ChainPoint(rec.label, chain[-1].dist + remaining))
                return
            if not self._wedge_contains(f, ci, d):
                raise GeometryError("walk direction left its wedge")
            # generic: the ray exits through the opposite edge
            e = (ci + 1) % 3
            A, B = f.edge(e)
            hit = geom.seg_intersection(p, (p[0] + d[0], p[1] + d[1]), A, B)
            if hit is None or hit[0] <= eps:
                raise GeometryError("walk lost its exit edge")
            rho, u = hit
            if remaining <= rho - eps:
                end = self._pt_along(p, d, remaining)
                lab = self.split_face(fid, end)
                self._tag_chord(p, end, tag)
                chain.append(ChainPoint(lab, chain[-1].dist + remaining))
                return
            ulen = geom.dist(A, B)
            if u * ulen < 100 * eps or (1.0 - u) * ulen < 100 * eps:
                far_c = (ci + 1) % 3 if u * ulen < 100 * eps else (ci + 2) % 3
                q = f.pts[far_c]
                elen = geom.dist(p, q)
                e_tag = ci if far_c == (ci + 1) % 3 else (ci + 2) % 3
                self.add_tag(fid, e_tag, tag)
                remaining -= elen
                chain.append(ChainPoint(f.labels[far_c], chain[-1].dist + elen))
                if remaining <= eps:
                    return
                fid, ci, d = self._continue_through_vertex(fid, far_c, d)
                continue
            if f.glue[e] is None:
                raise GeometryError("segment leaves the surface through a boundary")
            hitpt = (A[0] + u * (B[0] - A[0]), A[1] + u * (B[1] - A[1]))
            rho = geom.dist(p, hitpt)
            rec = self.split_edge(fid, e, u)
            self._tag_chord(p, hitpt, tag)
            chain.append(ChainPoint(rec.label, chain[-1].dist + rho))
            remaining -= rho
            if remaining <= eps:
                return
            fid, ci, d = self._cross_split(rec, d)
        raise GeometryError("walk exceeded its step budget")

    def _cross_split(self, rec, d):
        """Continue across a freshly split edge into the far side."""
        if rec.g_near is None:
            raise GeometryError("cannot continue across a boundary")
        m = self.transition(rec.f_near, 0)
        c, s, _, _ = geom.invert(m)
        dg = (c * d[0] - s * d[1], s * d[0] + c * d[1])
        # new vertex is corner 1 of g_near and corner 0 of g_far
        for fid, ci in ((rec.g_near, 1), (rec.g_far, 0)):
            if self._wedge_contains(self.faces[fid], ci, dg):
                return fid, ci, dg
        raise GeometryError("continued direction not found on the far side")

    def _tag_chord(self, a, b, tag):
        for nfid in sorted(self.faces):
            nf = self.faces[nfid]
            for ne in range(3):
                pa, pb = nf.edge(ne)
                if (self._close(pa, a) and self._close(pb, b)) or \
                   (self._close(pa, b) and self._close(pb, a)):
                    self.add_tag(nfid, ne, tag)
                    return
        raise GeometryError("chord edge not found after split")

    def _close(self, a, b):
        return abs(a[0] - b[0]) <= 50 * self.eps and abs(a[1] - b[1]) <= 50 * self.eps

    @staticmethod
    def _pt_along(p, d, t):
        return (p[0] + t * d[0], p[1] + t * d[1])

    # -- freezing --------------------------------------------------------------------

    def freeze(self):
        """Build the surface; returns (surface, label -> vertex id map)."""
        fids = sorted(self.faces)
        index = {fid: i for i, fid in enumerate(fids)}
        n = len(fids)
        lengths = np.empty((n, 3))
        glue = np.empty((n, 3, 2), dtype=np.int32)
        for fid in fids:
            f = self.faces[fid]
            i = index[fid]
            for e in range(3):
                lengths[i, e] = f.edge_len(e)
                if f.glue[e] is None:
                    raise InvalidSurface(f"boundary slot left open at {fid}.{e}")
                g, ge = f.glue[e]
                glue[i, e] = (index[g], ge)
        s = ConeSurface(lengths, glue)
        label_to_vertex = {}
        for fid in fids:
            f = self.faces[fid]
            i = index[fid]
            for c in range(3):
                v = int(s.corner_vertex[i, c])
                lab = f.labels[c]
                prev = label_to_vertex.get(lab)
                if prev is None or v < prev:
                    label_to_vertex[lab] = v
        return s, label_to_vertex

    def new_face(self, pts, labels, orig=-1):
        """Add a free-standing face (used when gluing in new material)."""
        if geom.poly_area(pts) <= 0:
            raise GeometryError("new face must be CCW")
        nf = _Face(self._new_fid(), tuple(pts), tuple(labels),
                   [None, None, None],
                   [frozenset(), frozenset(), frozenset()], orig)
        self.faces[nf.id] = nf
        return nf.id
