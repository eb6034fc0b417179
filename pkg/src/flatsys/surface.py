"""Closed oriented piecewise flat surfaces with conical singularities.

A surface is a set of metric triangles (three side lengths each) plus a
fixed-point-free involution gluing oriented triangle edges in pairs.
Edge k of a triangle joins its local corners k and (k+1)%3; a gluing
identifies the two edges with opposite orientations.  Everything else
(vertex classes, cone angles, genus, area) is derived.

Surfaces are immutable; surgeries build new ones through
:mod:`flatsys.builder`.
"""

import math

import numpy as np

from . import geom
from .errors import InvalidSurface, ParseError
from .geom import EPS, TWO_PI


class SingularityClass:
    """Classification of one vertex by its total angle."""

    __slots__ = ("vertex", "angle", "kind", "npc")

    def __init__(self, vertex, angle):
        self.vertex = vertex
        self.angle = angle
        if abs(angle - TWO_PI) <= EPS:
            self.kind = "regular"
        elif angle < 3.0 * math.pi:
            self.kind = "small"
        else:
            self.kind = "large"
        self.npc = angle >= TWO_PI - EPS

    def __repr__(self):
        return f"SingularityClass(v={self.vertex}, angle={self.angle:.6f}, {self.kind})"


class ValidationReport:
    def __init__(self, valid, genus, area, residual, npc, violations, theory_scope):
        self.valid = valid
        self.genus = genus
        self.area = area
        self.residual = residual
        self.npc = npc
        self.violations = violations
        self.theory_scope = theory_scope

    def to_json(self):
        return {
            "schema": 1,
            "valid": self.valid,
            "genus": self.genus,
            "area": self.area,
            "residual": self.residual,
            "npc": self.npc,
            "violations": self.violations,
            "theory_scope": self.theory_scope,
        }


class ConeSurface:
    """Immutable glued-triangle surface.

    Parameters
    ----------
    lengths : (n, 3) array
        Side lengths; column k is the length of edge k (corners k, k+1).
    glue : (n, 3, 2) int array
        ``glue[t, e] = (t', e')`` pairs oriented edges; must be an
        involution without fixed points.
    """

    def __init__(self, lengths, glue, check=True):
        self.lengths = np.asarray(lengths, dtype=np.float64).reshape(-1, 3)
        self.glue = np.asarray(glue, dtype=np.int32).reshape(-1, 3, 2)
        self.n = len(self.lengths)
        if check:
            self._check_structure()
        self._derive()
        self._fan_cache = None
        self._arrays_cache = None
        self._motion_cache = {}

    # -- construction-time checks -------------------------------------------

    def _check_structure(self):
        if self.n == 0:
            raise InvalidSurface("empty surface")
        if np.any(self.lengths <= 0.0):
            t, e = np.argwhere(self.lengths <= 0.0)[0]
            raise InvalidSurface(f"nonpositive length at triangle {t} edge {e}")
        for t in range(self.n):
            l0, l1, l2 = self.lengths[t]
            if l0 + l1 <= l2 or l1 + l2 <= l0 or l2 + l0 <= l1:
                raise InvalidSurface(f"triangle inequality fails in triangle {t}")
        seen = {}
        for t in range(self.n):
            for e in range(3):
                t2, e2 = self.glue[t, e]
                if not (0 <= t2 < self.n and 0 <= e2 < 3):
                    raise InvalidSurface(f"gluing of {t}.{e} out of range")
                if (t2, e2) == (t, e):
                    raise InvalidSurface(f"edge {t}.{e} glued to itself")
                if tuple(self.glue[t2, e2]) != (t, e):
                    raise InvalidSurface(f"gluing is not an involution at {t}.{e}")
                seen[(t, e)] = (t2, e2)
        for (t, e), (t2, e2) in seen.items():
            a = self.lengths[t, e]
            b = self.lengths[t2, e2]
            if abs(a - b) > EPS * max(1.0, a, b):
                raise InvalidSurface(
                    f"glued edges {t}.{e} and {t2}.{e2} have lengths {a} != {b}"
                )
        # connectivity
        stack = [0]
        reached = {0}
        while stack:
            t = stack.pop()
            for e in range(3):
                t2 = int(self.glue[t, e, 0])
                if t2 not in reached:
                    reached.add(t2)
                    stack.append(t2)
        if len(reached) != self.n:
            raise InvalidSurface("surface is not connected")

    # -- derived data ---------------------------------------------------------

    def _derive(self):
        n = self.n
        self.corner_angle = np.empty((n, 3))
        self.coords = np.empty((n, 3, 2))
        self.tri_area = np.empty(n)
        for t in range(n):
            l0, l1, l2 = self.lengths[t]
            self.corner_angle[t] = geom.tri_angles(l0, l1, l2)
            self.coords[t] = geom.tri_coords(l0, l1, l2)
            self.tri_area[t] = geom.heron(l0, l1, l2)
        self.area = float(self.tri_area.sum())

        # vertex classes: union-find on corners
        parent = list(range(3 * n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(i, j):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

        for t in range(n):
            for e in range(3):
                t2, e2 = self.glue[t, e]
                union(3 * t + e, 3 * int(t2) + (int(e2) + 1) % 3)
                union(3 * t + (e + 1) % 3, 3 * int(t2) + int(e2))

        roots = sorted({find(i) for i in range(3 * n)})
        index = {r: i for i, r in enumerate(roots)}
        self.corner_vertex = np.empty((n, 3), dtype=np.int32)
        for t in range(n):
            for c in range(3):
                self.corner_vertex[t, c] = index[find(3 * t + c)]
        self.num_vertices = len(roots)
        self.cone_angles = np.zeros(self.num_vertices)
        for t in range(n):
            for c in range(3):
                self.cone_angles[self.corner_vertex[t, c]] += self.corner_angle[t, c]

        V = self.num_vertices
        E = 3 * n // 2
        F = n
        chi = V - E + F
        if chi % 2 != 0:
            raise InvalidSurface("odd Euler characteristic; gluing is not a surface")
        self.genus = (2 - chi) // 2
        if self.genus < 0:
            raise InvalidSurface("negative genus; gluing is non-orientable or broken")

    # -- basic queries --------------------------------------------------------

    def cone_angle(self, v):
        if not (0 <= v < self.num_vertices):
            raise InvalidSurface(f"unknown vertex id {v}")
        return float(self.cone_angles[v])

    def is_npc(self):
        return bool(np.all(self.cone_angles >= TWO_PI - EPS))

    def gauss_bonnet_residual(self):
        return float(abs(np.sum(self.cone_angles - TWO_PI) - 4.0 * math.pi * (self.genus - 1)))

    def cone_points(self):
        """Vertices whose total angle differs from 2*pi (beyond tolerance)."""
        return [v for v in range(self.num_vertices)
                if abs(self.cone_angles[v] - TWO_PI) > EPS]

    def classify_singularities(self):
        return [SingularityClass(v, float(self.cone_angles[v]))
                for v in self.cone_points()]

    def scale(self, lam):
        if lam <= 0:
            raise InvalidSurface("scale factor must be positive")
        return ConeSurface(self.lengths * lam, self.glue, check=False)

    def min_edge_length(self):
        return float(self.lengths.min())

    # -- charts ---------------------------------------------------------------

    def motion_across(self, t, e):
        """Motion mapping the chart of glue[t,e] into the chart of t."""
        key = (t, e)
        m = self._motion_cache.get(key)
        if m is None:
            t2, e2 = self.glue[t, e]
            a0 = tuple(self.coords[t, e])
            a1 = tuple(self.coords[t, (e + 1) % 3])
            b0 = tuple(self.coords[t2, e2])
            b1 = tuple(self.coords[t2, (e2 + 1) % 3])
            # reversed orientation: start of e matches end of e'
            m = geom.motion_from_segment(b1, b0, a0, a1)
            self._motion_cache[key] = m
        return m

    def vertex_fans(self):
        """For each vertex: CCW-ordered list of (tri, corner, angle offset).

        Offsets accumulate the interior corner angles, starting at 0 on
        the side of the first corner's outgoing edge.
        """
        if self._fan_cache is not None:
            return self._fan_cache
        fans = [None] * self.num_vertices
        corner_of = {}
        for t in range(self.n):
            for c in range(3):
                corner_of.setdefault(int(self.corner_vertex[t, c]), []).append((t, c))
        for v, corners in corner_of.items():
            start = min(corners)
            fan = []
            t, c = start
            offset = 0.0
            while True:
                fan.append((t, c, offset))
                offset += float(self.corner_angle[t, c])
                t2, e2 = self.glue[t, (c + 2) % 3]
                t, c = int(t2), int(e2)
                if (t, c) == start:
                    break
            if abs(offset - self.cone_angles[v]) > 1e-7 * max(1.0, offset):
                raise InvalidSurface(f"vertex fan of {v} does not close")
            fans[v] = fan
        self._fan_cache = fans
        return fans

    def fan_index(self):
        """Map (tri, corner) -> angular offset of that wedge at its vertex."""
        idx = {}
        for v, fan in enumerate(self.vertex_fans()):
            for t, c, off in fan:
                idx[(t, c)] = (v, off)
        return idx

    def direction_angle(self, t, c, d):
        """Angle coordinate at the vertex of corner (t, c) of direction d.

        ``d`` is a vector in the chart of t anchored at corner c; the
        result is the offset of the wedge plus the angle of d measured
        from the side (c -> c+1).
        """
        _, off = self.fan_index()[(t, c)]
        pc = self.coords[t, c]
        pn = self.coords[t, (c + 1) % 3]
        base = math.atan2(pn[1] - pc[1], pn[0] - pc[0])
        a = math.atan2(d[1], d[0]) - base
        while a < -1e-12:
            a += TWO_PI
        return off + a

    def wedge_at_angle(self, v, alpha):
        """Corner (t, c) whose wedge contains angle coordinate alpha, plus
        the direction vector in that chart."""
        theta = self.cone_angles[v]
        alpha = alpha % theta
        fan = self.vertex_fans()[v]
        for t, c, off in fan:
            w = self.corner_angle[t, c]
            if alpha <= off + w + 1e-12:
                pc = self.coords[t, c]
                pn = self.coords[t, (c + 1) % 3]
                base = math.atan2(pn[1] - pc[1], pn[0] - pc[0])
                a = base + (alpha - off)
                return t, c, (math.cos(a), math.sin(a))
        t, c, off = fan[-1]
        pc = self.coords[t, c]
        pn = self.coords[t, (c + 1) % 3]
        base = math.atan2(pn[1] - pc[1], pn[0] - pc[0])
        a = base + (alpha - off)
        return t, c, (math.cos(a), math.sin(a))

    # -- arrays for the accelerated kernels ------------------------------------

    def kernel_arrays(self):
        if self._arrays_cache is None:
            glue_t = np.ascontiguousarray(self.glue[:, :, 0].astype(np.int32))
            glue_e = np.ascontiguousarray(self.glue[:, :, 1].astype(np.int32))
            vert = np.ascontiguousarray(self.corner_vertex.astype(np.int32))
            cone = np.zeros(self.num_vertices, dtype=np.uint8)
            for v in self.cone_points():
                cone[v] = 1
            xy = np.ascontiguousarray(self.coords)
            self._arrays_cache = (xy, glue_t, glue_e, vert, cone)
        return self._arrays_cache

    # -- io ---------------------------------------------------------------------

    def to_cfs(self):
        lines = ["cfs 1"]
        for t in range(self.n):
            l0, l1, l2 = (float(x) for x in self.lengths[t])
            lines.append(f"t {t} {l0!r} {l1!r} {l2!r}")
        for t in range(self.n):
            for e in range(3):
                t2, e2 = self.glue[t, e]
                if (t, e) < (int(t2), int(e2)):
                    lines.append(f"g {t}.{e} {t2}.{e2}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return (f"ConeSurface(triangles={self.n}, genus={self.genus}, "
                f"area={self.area:.6f}, vertices={self.num_vertices})")


# -- parsing -------------------------------------------------------------------


def parse_surface(text):
    """Parse the CFS text format into a ConeSurface."""
    tris = {}
    gluings = []
    header_seen = False
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not header_seen:
            if parts != ["cfs", "1"]:
                raise ParseError("missing or unsupported `cfs 1` header", line=ln)
            header_seen = True
            continue
        if parts[0] == "t":
            if len(parts) != 5:
                raise ParseError("expected: t <id> <l01> <l12> <l20>", line=ln)
            try:
                tid = int(parts[1])
                ls = [float(x) for x in parts[2:5]]
            except ValueError as exc:
                raise ParseError(str(exc), line=ln) from None
            if tid in tris:
                raise ParseError(f"duplicate triangle id {tid}", line=ln)
            tris[tid] = ls
        elif parts[0] == "g":
            if len(parts) != 3:
                raise ParseError("expected: g <t>.<e> <t'>.<e'>", line=ln)
            try:
                sides = []
                for token in parts[1:]:
                    a, b = token.split(".")
                    sides.append((int(a), int(b)))
            except ValueError as exc:
                raise ParseError(str(exc), line=ln) from None
            gluings.append((sides[0], sides[1], ln))
        else:
            raise ParseError(f"unknown directive {parts[0]!r}", line=ln, column=1)
    if not tris:
        raise ParseError("no triangles")
    n = len(tris)
    if sorted(tris) != list(range(n)):
        raise ParseError("triangle ids must be 0..n-1")
    lengths = np.array([tris[t] for t in range(n)])
    glue = np.full((n, 3, 2), -1, dtype=np.int32)
    for (t, e), (t2, e2), ln in gluings:
        for tt, ee in ((t, e), (t2, e2)):
            if not (0 <= tt < n and 0 <= ee < 3):
                raise ParseError(f"gluing references unknown edge {tt}.{ee}", line=ln)
        if glue[t, e, 0] != -1 or glue[t2, e2, 0] != -1:
            raise ParseError(f"edge glued twice: {t}.{e} ~ {t2}.{e2}", line=ln)
        if (t, e) == (t2, e2):
            raise ParseError(f"edge {t}.{e} glued to itself", line=ln)
        glue[t, e] = (t2, e2)
        glue[t2, e2] = (t, e)
    missing = np.argwhere(glue[:, :, 0] < 0)
    if len(missing):
        t, e = missing[0]
        raise ParseError(f"unglued edge {t}.{e}")
    return ConeSurface(lengths, glue)


def validate(s):
    """Check every surface invariant; failures go into the report."""
    violations = []
    for t in range(s.n):
        for e in range(3):
            t2, e2 = s.glue[t, e]
            a, b = s.lengths[t, e], s.lengths[t2, e2]
            if abs(a - b) > EPS * max(1.0, a, b):
                violations.append(f"length mismatch {t}.{e} vs {int(t2)}.{int(e2)}")
    residual = s.gauss_bonnet_residual()
    if residual >= EPS:
        violations.append(f"Gauss-Bonnet residual {residual:.3e}")
    npc = True
    for v in range(s.num_vertices):
        if s.cone_angles[v] < TWO_PI - EPS:
            npc = False
            violations.append(
                f"vertex {v} has angle {s.cone_angles[v]:.9f} < 2*pi")
    if s.genus < 1:
        violations.append(f"genus {s.genus} < 1")
    scope = "ok" if s.genus >= 2 else "outside theory scope (genus < 2)"
    return ValidationReport(
        valid=not violations,
        genus=int(s.genus),
        area=float(s.area),
        residual=residual,
        npc=npc,
        violations=violations,
        theory_scope=scope,
    )
