"""Visibility (window) propagation through the unfolding.

This is the hot kernel of the package: starting from a base point it
enumerates, by a stack DFS over triangle copies, every straight segment
from the base to a vertex lift within a length budget.  Windows of
directions narrow as edges are crossed; a cone point splits its window
and caps the blocked boundary ray, while flat vertices let rays pass.

The inner loop is written in array style so it can run either as plain
Python/numpy or compiled by numba.  Select with the environment variable
``FLATSYS_BACKEND``:

* ``auto`` (default): numba when importable, else python
* ``numba``: force the jitted kernel
* ``python``: force the plain interpreter (reference path)
"""

import math
import os

import numpy as np

from . import geom
from .errors import BudgetExceeded

_BACKEND = os.environ.get("FLATSYS_BACKEND", "auto").lower()
if _BACKEND not in ("auto", "numba", "python"):
    raise RuntimeError(f"FLATSYS_BACKEND must be auto|numba|python, got {_BACKEND!r}")

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False
    if _BACKEND == "numba":
        raise

USE_NUMBA = _HAVE_NUMBA and _BACKEND != "python"

TWO_PI = 2.0 * math.pi
BIG = 1e300


def _propagate_impl(tri_xy, glue_t, glue_e, vert_id, vert_cone, trans,
                    init_tri, init_entry, init_root, init_place,
                    init_lo, init_hi, init_locap, init_hicap,
                    budget, max_nodes, eps_ang, eps_len):
    cap = max_nodes
    node_tri = np.empty(cap, np.int32)
    node_entry = np.empty(cap, np.int8)
    node_parent = np.empty(cap, np.int32)
    node_root = np.empty(cap, np.int32)
    node_place = np.empty((cap, 4), np.float64)
    node_lo = np.empty(cap, np.float64)
    node_hi = np.empty(cap, np.float64)
    node_locap = np.empty(cap, np.float64)
    node_hicap = np.empty(cap, np.float64)
    hit_node = np.empty(cap, np.int32)
    hit_corner = np.empty(cap, np.int8)
    ray_angle = np.empty(cap, np.float64)
    stack = np.empty(cap, np.int32)

    nn = 0
    sp = 0
    nhits = 0
    nrays = 0
    status = 0

    ninit = init_tri.shape[0]
    for i in range(ninit):
        node_tri[nn] = init_tri[i]
        node_entry[nn] = init_entry[i]
        node_parent[nn] = -1
        node_root[nn] = init_root[i]
        for k in range(4):
            node_place[nn, k] = init_place[i, k]
        node_lo[nn] = init_lo[i]
        node_hi[nn] = init_hi[i]
        node_locap[nn] = init_locap[i]
        node_hicap[nn] = init_hicap[i]
        stack[sp] = nn
        sp += 1
        nn += 1

    qx = np.empty(3, np.float64)
    qy = np.empty(3, np.float64)
    ang = np.empty(3, np.float64)

    while sp > 0:
        sp -= 1
        i = stack[sp]
        t = node_tri[i]
        entry = node_entry[i]
        c0 = node_place[i, 0]
        s0 = node_place[i, 1]
        tx = node_place[i, 2]
        ty = node_place[i, 3]
        lo = node_lo[i]
        hi = node_hi[i]
        mid = 0.5 * (lo + hi)
        for k in range(3):
            x = tri_xy[t, k, 0]
            y = tri_xy[t, k, 1]
            px = c0 * x - s0 * y + tx
            py = s0 * x + c0 * y + ty
            qx[k] = px
            qy[k] = py
            a = math.atan2(py, px)
            a += TWO_PI * math.floor((mid - a) / TWO_PI + 0.5)
            ang[k] = a
        far = (entry + 2) % 3
        rf = math.hypot(qx[far], qy[far])
        af = ang[far]
        vf = vert_id[t, far]
        if rf <= budget + eps_len and lo - eps_ang <= af <= hi + eps_ang:
            ok = True
            if af <= lo + eps_ang and rf > node_locap[i] + eps_len:
                ok = False
            if af >= hi - eps_ang and rf > node_hicap[i] + eps_len:
                ok = False
            if ok:
                hit_node[nhits] = i
                hit_corner[nhits] = far
                nhits += 1
        farcap = rf if vert_cone[vf] == 1 else BIG

        for which in range(2):
            if which == 0:
                e = (entry + 1) % 3
                ca = (entry + 1) % 3
                cb = far
            else:
                e = (entry + 2) % 3
                ca = far
                cb = entry
            a1 = ang[ca]
            a2 = ang[cb]
            if a1 <= a2:
                int_lo = a1
                int_hi = a2
                lo_is_far = ca == far
                hi_is_far = cb == far
            else:
                int_lo = a2
                int_hi = a1
                lo_is_far = cb == far
                hi_is_far = ca == far
            w_lo = lo
            w_hi = hi
            w_locap = node_locap[i]
            w_hicap = node_hicap[i]
            if int_lo > w_lo + eps_ang:
                w_lo = int_lo
                w_locap = farcap if lo_is_far else BIG
            elif int_lo > w_lo - eps_ang and lo_is_far and farcap < w_locap:
                w_locap = farcap
            if int_hi < w_hi - eps_ang:
                w_hi = int_hi
                w_hicap = farcap if hi_is_far else BIG
            elif int_hi < w_hi + eps_ang and hi_is_far and farcap < w_hicap:
                w_hicap = farcap
            if w_hi - w_lo < -eps_ang:
                continue
            pinned = (w_hi - w_lo) <= eps_ang
            # min distance from origin to the window-restricted edge
            ax = qx[e]
            ay = qy[e]
            bx = qx[(e + 1) % 3]
            by = qy[(e + 1) % 3]
            dx = bx - ax
            dy = by - ay
            L2 = dx * dx + dy * dy
            tpar = -(ax * dx + ay * dy) / L2
            if tpar < 0.0:
                tpar = 0.0
            elif tpar > 1.0:
                tpar = 1.0
            cx = ax + tpar * dx
            cy = ay + tpar * dy
            d0 = math.hypot(cx, cy)
            a0 = math.atan2(cy, cx)
            a0 += TWO_PI * math.floor((0.5 * (w_lo + w_hi) - a0) / TWO_PI + 0.5)
            if w_lo - eps_ang <= a0 <= w_hi + eps_ang:
                dmin = d0
            else:
                dmin = BIG
                for bidx in range(2):
                    phi = w_lo if bidx == 0 else w_hi
                    ux = math.cos(phi)
                    uy = math.sin(phi)
                    den = dx * uy - dy * ux
                    if abs(den) < 1e-300:
                        continue
                    tt = (ax * uy - ay * ux) / -den
                    if -1e-12 <= tt <= 1.0 + 1e-12:
                        hx = ax + tt * dx
                        hy = ay + tt * dy
                        rr = hx * ux + hy * uy
                        if rr > 0.0 and rr < dmin:
                            dmin = rr
            if dmin > budget + eps_len:
                continue
            if pinned:
                # window collapsed to a single ray: the DFS would pivot
                # around the pinning vertex forever.  Blocked rays die;
                # open ones are traced exactly by the caller.
                capmin = w_locap if w_locap < w_hicap else w_hicap
                if capmin > dmin + eps_len and nrays < cap:
                    ray_angle[nrays] = 0.5 * (w_lo + w_hi)
                    nrays += 1
                continue
            if nn >= cap:
                status = 1
                sp = 0
                break
            nt = glue_t[t, e]
            ne = glue_e[t, e]
            m0 = trans[t, e, 0]
            m1 = trans[t, e, 1]
            m2 = trans[t, e, 2]
            m3 = trans[t, e, 3]
            node_tri[nn] = nt
            node_entry[nn] = ne
            node_parent[nn] = i
            node_root[nn] = node_root[i]
            node_place[nn, 0] = c0 * m0 - s0 * m1
            node_place[nn, 1] = s0 * m0 + c0 * m1
            node_place[nn, 2] = c0 * m2 - s0 * m3 + tx
            node_place[nn, 3] = s0 * m2 + c0 * m3 + ty
            node_lo[nn] = w_lo
            node_hi[nn] = w_hi
            node_locap[nn] = w_locap
            node_hicap[nn] = w_hicap
            stack[sp] = nn
            sp += 1
            nn += 1

    return (status, nn, nhits,
            node_tri[:nn].copy(), node_entry[:nn].copy(), node_parent[:nn].copy(),
            node_root[:nn].copy(), node_place[:nn].copy(),
            node_lo[:nn].copy(), node_hi[:nn].copy(),
            hit_node[:nhits].copy(), hit_corner[:nhits].copy(),
            ray_angle[:nrays].copy())


if USE_NUMBA:
    _propagate = njit(cache=True)(_propagate_impl)
else:
    _propagate = _propagate_impl


def backend_name():
    return "numba" if USE_NUMBA else "python"


class Propagation:
    """Result of a visibility search from one base point."""

    __slots__ = ("surface", "nodes", "hits", "root_prefix", "rays")

    def __init__(self, surface, nodes, hits, root_prefix, rays=()):
        self.surface = surface
        self.nodes = nodes
        self.hits = hits
        self.root_prefix = root_prefix
        self.rays = list(rays)

    def crossing_sequence(self, node_idx):
        (node_tri, node_entry, node_parent, node_root, *_rest) = self.nodes
        seq = []
        i = int(node_idx)
        while i >= 0:
            p = int(node_parent[i])
            if p >= 0:
                t = int(node_tri[p])
                # the edge of the parent crossed to reach node i
                t2 = int(node_tri[i])
                e2 = int(node_entry[i])
                gt = int(self.surface.glue[t2, e2, 0])
                ge = int(self.surface.glue[t2, e2, 1])
                seq.append((gt, ge))
            else:
                root = int(node_root[i])
                seq.extend(reversed(self.root_prefix[root]))
            i = p
        seq.reverse()
        return seq


def _transitions(s):
    n = s.n
    trans = np.empty((n, 3, 4), np.float64)
    for t in range(n):
        for e in range(3):
            trans[t, e] = s.motion_across(t, e)
    return trans


def _run(s, inits, prefixes, budget, max_nodes):
    tri_xy, glue_t, glue_e, vert, cone = s.kernel_arrays()
    trans = getattr(s, "_trans_cache", None)
    if trans is None:
        trans = _transitions(s)
        s._trans_cache = trans
    if not inits:
        return Propagation(s, None, [], prefixes)
    init_tri = np.array([i[0] for i in inits], np.int32)
    init_entry = np.array([i[1] for i in inits], np.int8)
    init_root = np.array([i[2] for i in inits], np.int32)
    init_place = np.array([i[3] for i in inits], np.float64)
    init_lo = np.array([i[4] for i in inits], np.float64)
    init_hi = np.array([i[5] for i in inits], np.float64)
    init_locap = np.array([i[6] for i in inits], np.float64)
    init_hicap = np.array([i[7] for i in inits], np.float64)
    eps_len = 1e-9 * max(1.0, float(s.lengths.max()))
    res = _propagate(tri_xy, glue_t, glue_e, vert, cone, trans,
                     init_tri, init_entry, init_root, init_place,
                     init_lo, init_hi, init_locap, init_hicap,
                     float(budget), int(max_nodes), geom.EPS_ANG, eps_len)
    status = res[0]
    if status == 1:
        raise BudgetExceeded(
            f"unfolding search exceeded {max_nodes} triangle copies", max_nodes)
    nodes = res[3:10]
    hits = list(zip(res[10].tolist(), res[11].tolist()))
    rays = sorted(set(round(a, 12) for a in res[12].tolist()))
    return Propagation(s, nodes, hits, prefixes, rays)


def propagate_from_vertex(s, v, budget, max_nodes=400_000):
    """Visibility search from vertex ``v``.

    Returns (propagation, root_hits) where root_hits are the segments that
    run along the initial wedge sides (found without entering the DFS).
    """
    fan = s.vertex_fans()[v]
    cone_flags = {u: True for u in s.cone_points()}
    inits = []
    prefixes = []
    root_hits = []
    for (t, c, off) in fan:
        pc = tuple(s.coords[t, c])
        p1 = tuple(s.coords[t, (c + 1) % 3])
        p2 = tuple(s.coords[t, (c + 2) % 3])
        wedge = float(s.corner_angle[t, c])
        base = math.atan2(p1[1] - pc[1], p1[0] - pc[0])
        phi = off - base
        rot = (math.cos(phi), math.sin(phi), 0.0, 0.0)
        m = (rot[0], rot[1],
             -(rot[0] * pc[0] - rot[1] * pc[1]),
             -(rot[1] * pc[0] + rot[0] * pc[1]))
        # direct hits along the wedge sides
        l_lo = geom.dist(pc, p1)
        l_hi = geom.dist(pc, p2)
        v_lo = int(s.corner_vertex[t, (c + 1) % 3])
        v_hi = int(s.corner_vertex[t, (c + 2) % 3])
        root = len(prefixes)
        if l_lo <= budget:
            root_hits.append((v_lo, off, l_lo, root, "lo", (t, c)))
        if l_hi <= budget:
            root_hits.append((v_hi, off + wedge, l_hi, root, "hi", (t, c)))
        locap = l_lo if cone_flags.get(v_lo) else BIG
        hicap = l_hi if cone_flags.get(v_hi) else BIG
        e = (c + 1) % 3
        nt = int(s.glue[t, e, 0])
        ne = int(s.glue[t, e, 1])
        place = geom.compose(m, s.motion_across(t, e))
        inits.append((nt, ne, root, place, off, off + wedge, locap, hicap))
        prefixes.append([(t, e)])
    prop = _run(s, inits, prefixes, budget, max_nodes)
    return prop, root_hits


def propagate_from_point(s, t, xy, budget, max_nodes=400_000):
    """Visibility search from an interior point of triangle ``t``."""
    cone_flags = {u: True for u in s.cone_points()}
    m = (1.0, 0.0, -float(xy[0]), -float(xy[1]))
    corners = [geom.apply(m, tuple(s.coords[t, k])) for k in range(3)]
    raw = [math.atan2(p[1], p[0]) for p in corners]
    dists = [math.hypot(p[0], p[1]) for p in corners]
    inits = []
    prefixes = []
    root_hits = []
    # continuous angle assignment around the point
    a0 = raw[0]
    angs = [a0]
    for k in (1, 2):
        d = raw[k] - angs[-1]
        while d < 0:
            d += TWO_PI
        angs.append(angs[-1] + d)
    for k in range(3):
        vid = int(s.corner_vertex[t, k])
        if dists[k] <= budget:
            root_hits.append((vid, angs[k], dists[k], -1, "corner", (t, k)))
    for e in range(3):
        lo = angs[e]
        hi = angs[(e + 1) % 3] if e < 2 else angs[0] + TWO_PI
        v_lo = int(s.corner_vertex[t, e])
        v_hi = int(s.corner_vertex[t, (e + 1) % 3])
        locap = dists[e] if cone_flags.get(v_lo) else BIG
        hicap = dists[(e + 1) % 3] if cone_flags.get(v_hi) else BIG
        nt = int(s.glue[t, e, 0])
        ne = int(s.glue[t, e, 1])
        place = geom.compose(m, s.motion_across(t, e))
        root = len(prefixes)
        inits.append((nt, ne, root, place, lo, hi, locap, hicap))
        prefixes.append([(t, e)])
    prop = _run(s, inits, prefixes, budget, max_nodes)
    return prop, root_hits
