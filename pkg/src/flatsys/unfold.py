"""Saddle connections, geodesic loops and exact systoles.

The systole method: (i) bound the search by the shortest noncontractible
cycle in the 1-skeleton (certified by lifting to the universal cover);
(ii) enumerate all saddle connections up to the bound with the window
propagation kernel; (iii) search the finite transition graph of oriented
saddle connections for the shortest closed chain that is geodesic at
every cone point (both rotation angles >= pi); (iv) on surfaces without
cone points (flat tori) use the translation lattice instead.

A feasible chain can never bound a disk (the boundary turning would have
to reach 2*pi while every vertex contributes at most ~0 against it, and
enclosed cone points only lower it further), so feasible cycles are
noncontractible by construction; witnesses are additionally certified by
an explicit lift.
"""

import math

from . import accel, geom
from .cover import Cover, lift_loop_chain, noncontractible_edge_bound, unfold_ball
from .errors import InvalidSurface, KernelDefect
from .geom import EPS, TWO_PI

ANGLE_SLACK = 1e-9


class SaddleConnection:
    """Oriented geodesic segment between cone points, no cone point inside."""

    __slots__ = ("v_from", "v_to", "length", "ang_from", "ang_to",
                 "crossings", "start_corner", "end_corner", "index")

    def __init__(self, v_from, v_to, length, ang_from, ang_to, crossings,
                 start_corner, end_corner):
        self.v_from = v_from
        self.v_to = v_to
        self.length = length
        self.ang_from = ang_from      # direction at v_from, in its angle coordinate
        self.ang_to = ang_to          # back-direction at v_to, in its angle coordinate
        self.crossings = tuple(crossings)
        self.start_corner = start_corner   # (tri, corner) wedge containing the start
        self.end_corner = end_corner       # (tri, corner) wedge containing the arrival
        self.index = None

    def key(self):
        return (round(self.length, 10), self.v_from, round(self.ang_from, 8),
                self.v_to, round(self.ang_to, 8))

    def reversed_on(self, s):
        rev = []
        for (t, e) in reversed(self.crossings):
            rev.append((int(s.glue[t, e, 0]), int(s.glue[t, e, 1])))
        return SaddleConnection(self.v_to, self.v_from, self.length,
                                self.ang_to, self.ang_from, rev,
                                self.end_corner, self.start_corner)

    def to_json(self):
        return {
            "from": self.v_from, "to": self.v_to, "length": self.length,
            "angle_from": self.ang_from, "angle_to": self.ang_to,
            "crossings": [list(c) for c in self.crossings],
        }

    def __repr__(self):
        return (f"SC({self.v_from}->{self.v_to}, L={self.length:.9f}, "
                f"a={self.ang_from:.6f}/{self.ang_to:.6f})")


class GeodesicLoop:
    """Closed geodesic: a cyclic chain of saddle connections, or the core
    of a flat cylinder (flat surfaces only)."""

    def __init__(self, kind, length, scs=None, rotations=None, holonomy=None,
                 base=None):
        self.kind = kind                  # "cone-polygon" | "cylinder-core"
        self.length = length
        self.scs = scs or []
        self.rotations = rotations or []  # (R, L) at the start vertex of each sc
        self.holonomy = holonomy
        self.base = base

    @property
    def vertices(self):
        return [sc.v_from for sc in self.scs]

    def canonical_key(self, s):
        if self.kind != "cone-polygon":
            h = self.holonomy
            k = (round(abs(h[0]), 9), round(abs(h[1]), 9))
            return ("core", round(self.length, 9), k)
        keys = [sc.key() for sc in self.scs]
        rev = [sc.reversed_on(s).key() for sc in reversed(self.scs)]
        cands = []
        n = len(keys)
        for arr in (keys, rev):
            for r in range(n):
                cands.append(tuple(arr[r:] + arr[:r]))
        return ("poly", min(cands))

    def lift_legs(self, s):
        legs = []
        for sc in self.scs:
            legs.append((sc.start_corner[0], sc.start_corner[1],
                         list(sc.crossings), sc.end_corner[0], sc.end_corner[1]))
        return legs

    def flat_sides(self):
        """(left_flat, right_flat): whether all rotation angles on one side
        are exactly pi (the loop can be pushed off that way)."""
        if self.kind == "cylinder-core":
            return True, True
        left = all(abs(L - math.pi) <= 1e-7 for (_R, L) in self.rotations)
        right = all(abs(R - math.pi) <= 1e-7 for (R, _L) in self.rotations)
        return left, right

    def to_json(self):
        return {
            "schema": 1,
            "kind": self.kind,
            "length": self.length,
            "vertices": self.vertices,
            "rotations": [[r, l] for (r, l) in self.rotations],
            "crossings": [[list(c) for c in sc.crossings] for sc in self.scs],
            "holonomy": list(self.holonomy) if self.holonomy else None,
        }

    def __repr__(self):
        return f"GeodesicLoop({self.kind}, L={self.length:.9f}, v={self.vertices})"


# -- saddle connection enumeration ------------------------------------------------


def _hits_to_records(s, v, prop, root_hits, budget, cone_only=True, seen=None):
    cone = set(s.cone_points())
    theta_v = float(s.cone_angles[v])
    out = []
    if seen is None:
        seen = set()
    for (u, a, r, _root, side, (t, c)) in root_hits:
        if cone_only and u not in cone:
            continue
        if r > budget + 1e-12:
            continue
        a = a % theta_v
        key = (u, round(a, 9), round(r, 9))
        if key in seen:
            continue
        seen.add(key)
        if side == "lo":
            end_c = (c + 1) % 3
            pc = s.coords[t, c]
            pe = s.coords[t, end_c]
        else:
            end_c = (c + 2) % 3
            pc = s.coords[t, c]
            pe = s.coords[t, end_c]
        back = (pc[0] - pe[0], pc[1] - pe[1])
        ang_to = s.direction_angle(t, end_c, back) % float(s.cone_angles[u])
        out.append(SaddleConnection(v, u, r, a, ang_to, [], (t, c), (t, end_c)))
    if prop.nodes is None:
        return out
    (node_tri, node_entry, node_parent, node_root, node_place,
     node_lo, node_hi) = prop.nodes
    fan = s.vertex_fans()[v]
    for (ni, corner) in prop.hits:
        t = int(node_tri[ni])
        u = int(s.corner_vertex[t, corner])
        if cone_only and u not in cone:
            continue
        m = tuple(node_place[ni])
        q = geom.apply(m, tuple(s.coords[t, corner]))
        r = math.hypot(q[0], q[1])
        if r > budget + 1e-12 or r < 1e-12:
            continue
        a = geom.unroll(math.atan2(q[1], q[0]),
                        0.5 * (node_lo[ni] + node_hi[ni])) % theta_v
        key = (u, round(a, 9), round(r, 9))
        if key in seen:
            continue
        seen.add(key)
        # arrival back-direction in the hit triangle's chart
        ux, uy = -q[0] / r, -q[1] / r
        c0, s0, _, _ = m
        local = (c0 * ux + s0 * uy, -s0 * ux + c0 * uy)
        ang_to = s.direction_angle(t, corner, local) % float(s.cone_angles[u])
        root = int(node_root[ni])
        start_corner = (fan[root][0], fan[root][1])
        out.append(SaddleConnection(v, u, r, a, ang_to,
                                    prop.crossing_sequence(ni),
                                    start_corner, (t, corner)))
    return out


def saddle_connections(s, budget, max_nodes=400_000, oriented=False):
    """All saddle connections of length <= budget.

    With ``oriented=False`` each unoriented segment is reported once,
    sorted by (length, crossing sequence).
    """
    if budget <= 0:
        raise InvalidSurface("budget must be positive")
    from .trace import ray_hits_to_sc, trace_ray_from_vertex
    cone = s.cone_points()
    recs = []
    for v in cone:
        prop, root_hits = accel.propagate_from_vertex(s, v, budget, max_nodes)
        seen = set()
        recs.extend(_hits_to_records(s, v, prop, root_hits, budget, seen=seen))
        for phi in prop.rays:
            tr = trace_ray_from_vertex(s, v, phi, budget * (1 + 1e-12) + 1e-12)
            for rec in ray_hits_to_sc(s, v, phi, tr):
                key = (rec.v_to, round(rec.ang_from, 9), round(rec.length, 9))
                if key not in seen and rec.length <= budget + 1e-12:
                    seen.add(key)
                    recs.append(rec)
    for i, r in enumerate(recs):
        r.index = i
    if oriented:
        return recs
    seen = {}
    for r in recs:
        k = min(r.key(), r.reversed_on(s).key())
        if k not in seen:
            seen[k] = r
    out = sorted(seen.values(), key=lambda r: (r.length, r.crossings))
    return out


# -- feasibility and cycles ---------------------------------------------------------


def junction_angles(s, sc_in, sc_out):
    """Rotation angles (R, L) when sc_out follows sc_in at sc_in.v_to."""
    v = sc_in.v_to
    theta = float(s.cone_angles[v])
    r = (sc_out.ang_from - sc_in.ang_to) % theta
    return r, theta - r


def junction_feasible(s, sc_in, sc_out, slack=ANGLE_SLACK):
    r, l = junction_angles(s, sc_in, sc_out)
    return r >= math.pi - slack and l >= math.pi - slack


class _ScGraph:
    def __init__(self, s, scs):
        self.s = s
        self.scs = list(scs)
        for i, sc in enumerate(self.scs):
            sc.index = i
        self.by_from = {}
        for i, sc in enumerate(self.scs):
            self.by_from.setdefault(sc.v_from, []).append(i)
        self._adj = {}

    def adj(self, i):
        a = self._adj.get(i)
        if a is None:
            sc = self.scs[i]
            a = [j for j in self.by_from.get(sc.v_to, ())
                 if junction_feasible(self.s, sc, self.scs[j])]
            self._adj[i] = a
        return a


def _min_cycle(s, graph, budget):
    """Minimum-length feasible closed chain, as a list of sc indices."""
    import heapq
    best = math.inf
    best_cycle = None
    order = sorted(range(len(graph.scs)), key=lambda i: graph.scs[i].length)
    for start in order:
        s0 = graph.scs[start]
        if s0.length >= best - 1e-15 or s0.length > budget + 1e-12:
            continue
        dist = {start: s0.length}
        parent = {start: None}
        pq = [(s0.length, start)]
        while pq:
            d, i = heapq.heappop(pq)
            if d > dist.get(i, math.inf) + 1e-15 or d >= best - 1e-15:
                continue
            for j in graph.adj(i):
                if j == start:
                    if junction_feasible(s, graph.scs[i], s0) and d < best:
                        best = d
                        cyc = [i]
                        while parent[cyc[-1]] is not None:
                            cyc.append(parent[cyc[-1]])
                        cyc.reverse()
                        best_cycle = cyc
                    continue
                nd = d + graph.scs[j].length
                if nd > budget + 1e-12 or nd >= best - 1e-15:
                    continue
                if nd < dist.get(j, math.inf) - 1e-15:
                    dist[j] = nd
                    parent[j] = i
                    heapq.heappush(pq, (nd, j))
    return best, best_cycle


def enumerate_cycles(s, graph, budget):
    """All feasible closed chains with total length <= budget (canonical
    representatives, deterministic order)."""
    results = {}

    def dfs(start, path, length):
        i = path[-1]
        for j in graph.adj(i):
            if j == start:
                if junction_feasible(s, graph.scs[i], graph.scs[start]):
                    loop = _chain_to_loop(s, graph, path)
                    key = loop.canonical_key(s)
                    if key not in results:
                        results[key] = loop
                continue
            nl = length + graph.scs[j].length
            if nl <= budget + 1e-12 and len(path) < 64:
                dfs(start, path + [j], nl)

    order = sorted(range(len(graph.scs)),
                   key=lambda i: (graph.scs[i].length, graph.scs[i].key()))
    for start in order:
        if graph.scs[start].length <= budget + 1e-12:
            dfs(start, [start], graph.scs[start].length)
    return sorted(results.values(), key=lambda l: (l.length, l.canonical_key(s)))


def _chain_to_loop(s, graph, chain):
    scs = [graph.scs[i] for i in chain]
    rotations = []
    for k, sc in enumerate(scs):
        prev = scs[k - 1]
        r, l = junction_angles(s, prev, sc)
        rotations.append((r, l))
    length = sum(sc.length for sc in scs)
    return GeodesicLoop("cone-polygon", length, scs=scs, rotations=rotations)


# -- systole ---------------------------------------------------------------------------


def _flat_systole(s, max_nodes):
    bound, _ = noncontractible_edge_bound(s)
    tree = unfold_ball(s, ("vertex", 0), bound * 1.0000001 + 10 * EPS,
                       max_copies=max_nodes)
    best = math.inf
    hol = None
    for p in tree.base_vertex_lifts(0):
        d = math.hypot(p[0], p[1])
        if d > 1e-9 and d < best:
            best = d
            hol = p
    if not math.isfinite(best):
        raise KernelDefect("no lattice displacement found on flat surface",
                           {"bound": bound})
    # When the certified edge-loop bound is tight, prefer it: it is a sum
    # of stored edge lengths and therefore better conditioned (the unit
    # square torus comes out exactly 1.0).
    if abs(bound - best) <= 1e-12 * max(1.0, bound):
        best = bound
    loop = GeodesicLoop("cylinder-core", best, holonomy=hol, base=("vertex", 0))
    return best, loop


def systole(s, tol=EPS, max_nodes=400_000):
    """Exact systole (within tol) and a witness geodesic loop."""
    cached = getattr(s, "_systole_cache", None)
    if cached is not None:
        return cached
    if not s.is_npc():
        raise InvalidSurface("systole requires a nonpositively curved surface")
    cone = s.cone_points()
    if not cone:
        if s.genus != 1:
            raise InvalidSurface(
                "surface of genus >= 2 without cone points is inconsistent")
        res = _flat_systole(s, max_nodes)
        s._systole_cache = res
        return res
    if s.genus < 1:
        raise InvalidSurface("systole requires genus >= 1")
    bound, _ = noncontractible_edge_bound(s)
    budget = bound * (1 + 1e-12) + tol
    scs = saddle_connections(s, budget, max_nodes=max_nodes, oriented=True)
    graph = _ScGraph(s, scs)
    best, chain = _min_cycle(s, graph, budget)
    if chain is None:
        raise KernelDefect("no feasible geodesic cycle within the certified bound",
                           {"bound": bound, "saddle_connections": len(scs)})
    # deterministic representative among ties
    ties = enumerate_cycles(s, graph, best + 1e-12)
    ties = [l for l in ties if abs(l.length - best) <= 1e-11 * max(1.0, best)]
    witness = min(ties, key=lambda l: l.canonical_key(s)) if ties \
        else _chain_to_loop(s, graph, chain)
    cert = lift_loop_chain(s, witness.lift_legs(s))
    if cert.contractible:
        raise KernelDefect("witness loop lifted closed; systole search is wrong",
                           {"length": best})
    res = (best, witness)
    s._systole_cache = res
    return res


def systolic_ratio(s):
    value, _ = systole(s)
    return s.area / (value * value)


# -- based systole ----------------------------------------------------------------------


def _point_visibility(s, t, xy, budget, max_nodes):
    """Segments from an interior point: returns (to_cone, to_self).

    ``to_cone``: list of (vertex, angle, dist, back-angle at the vertex).
    ``to_self``: list of dist for straight returns to other lifts of xy.
    """
    from .trace import trace as _trace
    prop, root_hits = accel.propagate_from_point(s, t, xy, budget, max_nodes)
    cone = set(s.cone_points())
    to_cone = []
    seen = set()
    for (u, a, r, _root, _side, (tt, cc)) in root_hits:
        if u in cone and r <= budget:
            pc = s.coords[tt, cc]
            back = (float(xy[0]) - pc[0], float(xy[1]) - pc[1])
            ang_to = s.direction_angle(tt, cc, back)
            key = (u, round(a, 9), round(r, 9))
            if key not in seen:
                seen.add(key)
                to_cone.append((u, a, r, ang_to, (tt, cc)))
    for phi in prop.rays:
        tr = _trace(s, t, xy, (math.cos(phi), math.sin(phi)), budget)
        for ev in tr.events:
            if ev[0] != "vertex":
                continue
            _, u, dist, te, ce, d = ev
            if u in cone and dist > 1e-12:
                back = (-d[0], -d[1])
                ang_to = s.direction_angle(te, ce, back)
                key = (u, round(phi, 9), round(dist, 9))
                if key not in seen:
                    seen.add(key)
                    to_cone.append((u, phi, dist, ang_to, (te, ce)))
    to_self = []
    if prop.nodes is not None:
        (node_tri, node_entry, node_parent, node_root, node_place,
         node_lo, node_hi) = prop.nodes
        for ni in range(len(node_tri)):
            tt = int(node_tri[ni])
            m = tuple(node_place[ni])
            if tt == t:
                q = geom.apply(m, (float(xy[0]), float(xy[1])))
                r = math.hypot(q[0], q[1])
                if 1e-9 < r <= budget:
                    a = geom.unroll(math.atan2(q[1], q[0]),
                                    0.5 * (node_lo[ni] + node_hi[ni]))
                    if node_lo[ni] - 1e-9 <= a <= node_hi[ni] + 1e-9:
                        to_self.append(r)
        for (ni, corner) in prop.hits:
            tt = int(node_tri[ni])
            u = int(s.corner_vertex[tt, corner])
            if u not in cone:
                continue
            m = tuple(node_place[ni])
            q = geom.apply(m, tuple(s.coords[tt, corner]))
            r = math.hypot(q[0], q[1])
            if r > budget or r < 1e-12:
                continue
            a = geom.unroll(math.atan2(q[1], q[0]),
                            0.5 * (node_lo[ni] + node_hi[ni]))
            key = (u, round(a, 9), round(r, 9))
            if key in seen:
                continue
            seen.add(key)
            ux, uy = -q[0] / r, -q[1] / r
            c0, s0, _, _ = m
            local = (c0 * ux + s0 * uy, -s0 * ux + c0 * uy)
            ang_to = s.direction_angle(tt, corner, local)
            to_cone.append((u, a, r, ang_to, (tt, corner)))
    return to_cone, to_self


def based_systole(s, x, tol=EPS, max_nodes=400_000):
    """Least length of a noncontractible loop based at x.

    ``x`` is ("vertex", v) or (tri, (x, y)).
    """
    import heapq
    if not s.is_npc():
        raise InvalidSurface("based systole requires an NPC surface")
    sys_val, _ = systole(s, tol=tol, max_nodes=max_nodes)
    if x[0] == "vertex":
        v = int(x[1])
        # shortest noncontractible edge cycle through v bounds the search
        budget, _ = noncontractible_edge_bound(s, sources=[v])
        budget += 10 * EPS
        from .trace import ray_hits_to_sc, trace_ray_from_vertex
        prop, root_hits = accel.propagate_from_vertex(s, v, budget, max_nodes)
        cone = set(s.cone_points())
        seen = set()
        legs = _hits_to_records(s, v, prop, root_hits, budget,
                                cone_only=False, seen=seen)
        for phi in prop.rays:
            tr = trace_ray_from_vertex(s, v, phi, budget * (1 + 1e-12) + 1e-12)
            for rec in ray_hits_to_sc(s, v, phi, tr):
                key = (rec.v_to, round(rec.ang_from, 9), round(rec.length, 9))
                if key not in seen and rec.length <= budget + 1e-12:
                    seen.add(key)
                    legs.append(rec)
        out_legs = [r for r in legs if r.v_to in cone]
        self_hits = [r.length for r in legs if r.v_to == v]
        # direct straight returns to v count as based loops
        best = min(self_hits, default=math.inf)
    else:
        t, xy = x
        corners = [tuple(s.coords[int(t), c]) for c in range(3)]
        dcs = [geom.dist(xy, c) for c in corners]
        k = dcs.index(min(dcs))
        w = int(s.corner_vertex[int(t), k])
        bound_w, _ = noncontractible_edge_bound(s, sources=[w])
        budget = 2.0 * dcs[k] + bound_w + 10 * EPS
        to_cone, to_self = _point_visibility(s, int(t), xy, budget, max_nodes)
        out_legs = [SaddleConnection(-1, u, r, a, ang_to, [], None, tc)
                    for (u, a, r, ang_to, tc) in to_cone]
        best = min(to_self, default=math.inf)
    # chains through cone points
    scs = saddle_connections(s, budget, max_nodes=max_nodes, oriented=True)
    graph = _ScGraph(s, scs)
    in_legs = out_legs   # same segments traversed backwards
    # two-leg loops: out to c, feasibility at c, back
    for lo in out_legs:
        for li in in_legs:
            if lo.v_to != li.v_to:
                continue
            theta = float(s.cone_angles[lo.v_to])
            r = (li.ang_to - lo.ang_to) % theta
            if min(r, theta - r) >= math.pi - ANGLE_SLACK:
                tot = lo.length + li.length
                if tot < best:
                    best = tot
    # longer chains: Dijkstra over sc states seeded by out legs
    dist = {}
    pq = []
    for lo in out_legs:
        for j in graph.by_from.get(lo.v_to, ()):
            sc = graph.scs[j]
            theta = float(s.cone_angles[lo.v_to])
            r = (sc.ang_from - lo.ang_to) % theta
            if min(r, theta - r) < math.pi - ANGLE_SLACK:
                continue
            d = lo.length + sc.length
            if d < dist.get(j, math.inf):
                dist[j] = d
                heapq.heappush(pq, (d, j))
    while pq:
        d, i = heapq.heappop(pq)
        if d > dist.get(i, math.inf) + 1e-15 or d >= best:
            continue
        sc = graph.scs[i]
        for li in in_legs:
            if li.v_to != sc.v_to:
                continue
            theta = float(s.cone_angles[sc.v_to])
            r = (li.ang_to - sc.ang_to) % theta
            if min(r, theta - r) >= math.pi - ANGLE_SLACK:
                tot = d + li.length
                if tot < best:
                    best = tot
        for j in graph.adj(i):
            nd = d + graph.scs[j].length
            if nd < dist.get(j, math.inf) - 1e-15 and nd < best:
                dist[j] = nd
                heapq.heappush(pq, (nd, j))
    if not math.isfinite(best):
        raise KernelDefect("based systole search found no loop", {"budget": budget})
    return best
