"""Numba kernels shared by the detectors and the Monte Carlo driver.

Colours are read through ``_color``: a site's colour is valid when
``cstamp[i] == cur``; otherwise its Philox block is generated on the spot.
Materialised configurations set every stamp to ``cur`` up front, so the same
kernels serve both the exact detectors and the lazy Monte Carlo path, where
only explored sites are ever coloured.

Flow state per site (valid when ``fstamp[v] == fcur``):
``thr[v]`` whether the unit capacity of ``v`` is used, ``nxt[v]``/``prv[v]``
the successor/predecessor on its flow path (a site index, or SOURCE, SINK,
NONE).
"""

import numba as nb
import numpy as np

from .rng import fill_block

NONE = -1
SOURCE = -2
SINK = -3
STAMP_LIMIT = 2**31 - 1


@nb.njit(cache=True, inline="always")
def _color(i, col, cstamp, cur, k0, k1, p, nsites):
    if cstamp[i] != cur:
        b = i >> 2
        fill_block(col, b, k0, k1, p, nsites)
        hi = min(4 * b + 4, nsites)
        for t in range(4 * b, hi):
            cstamp[t] = cur
    return col[i]


class Scratch:
    """Per-annulus work arrays, reused across samples via stamps."""

    def __init__(self, nsites: int):
        self.nsites = nsites
        self.col = np.zeros(nsites, dtype=np.uint8)
        self.cstamp = np.zeros(nsites, dtype=np.int32)
        self.vstamp = np.zeros(2 * nsites, dtype=np.int32)
        self.parent = np.zeros(2 * nsites, dtype=np.int32)
        self.queue = np.zeros(2 * nsites + 2, dtype=np.int32)
        self.fstamp = np.zeros(nsites, dtype=np.int32)
        self.thr = np.zeros(nsites, dtype=np.uint8)
        self.nxt = np.zeros(nsites, dtype=np.int32)
        self.prv = np.zeros(nsites, dtype=np.int32)
        self.path = np.zeros(2 * nsites + 2, dtype=np.int32)
        # counters: [colour stamp, visit stamp, flow stamp]
        self.ctr = np.zeros(3, dtype=np.int64)

    def refresh(self, headroom: int = 1 << 24):
        """Zero the stamps before the int32 counters could overflow."""
        if self.ctr.max() + headroom >= STAMP_LIMIT:
            self.cstamp[:] = 0
            self.vstamp[:] = 0
            self.fstamp[:] = 0
            self.ctr[:] = 0

    def load(self, colors: np.ndarray):
        """Install a materialised configuration; returns its colour stamp."""
        self.refresh()
        self.ctr[0] += 1
        self.col[:] = colors
        self.cstamp[:] = self.ctr[0]
        return self.ctr[0]


@nb.njit(cache=True)
def one_arm(nbr, order, inner_idx, outer, want, col, cstamp, cur, k0, k1, p,
            vstamp, vcur, queue):
    """Search for a ``want``-coloured inner-to-outer crossing.

    Depth-first with the most outward neighbour explored first, so crossings
    are usually found long before the whole cluster is visited.
    """
    nsites = nbr.shape[0]
    top = 0
    for t in range(inner_idx.shape[0]):
        v = inner_idx[t]
        if _color(v, col, cstamp, cur, k0, k1, p, nsites) == want:
            if outer[v]:
                return True
            vstamp[v] = vcur
            queue[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = queue[top]
        for t in range(6):
            d = order[v, t]
            w = nbr[v, d]
            if w < 0 or vstamp[w] == vcur:
                continue
            if _color(w, col, cstamp, cur, k0, k1, p, nsites) != want:
                continue
            if outer[w]:
                return True
            vstamp[w] = vcur
            queue[top] = w
            top += 1
    return False


@nb.njit(cache=True, inline="always")
def _get_thr(v, thr, fstamp, fcur):
    return thr[v] if fstamp[v] == fcur else 0


@nb.njit(cache=True, inline="always")
def _get_link(v, arr, fstamp, fcur):
    return arr[v] if fstamp[v] == fcur else NONE


@nb.njit(cache=True, inline="always")
def _touch(v, thr, nxt, prv, fstamp, fcur):
    if fstamp[v] != fcur:
        fstamp[v] = fcur
        thr[v] = 0
        nxt[v] = NONE
        prv[v] = NONE


@nb.njit(cache=True)
def _augment_once(nbr, order, inner_idx, outer, want, col, cstamp, cur, k0, k1, p,
                  vstamp, vcur, parent, queue, thr, nxt, prv, fstamp, fcur, path):
    """One augmenting path in the vertex-split residual graph.

    Node ``2v`` is the in-half of site ``v`` and ``2v+1`` its out-half.  The
    search is depth-first, outward neighbours first; any augmenting path will
    do since capacities are unit.  Returns True when the flow grew by one.
    """
    nsites = nbr.shape[0]
    top = 0
    last = -1
    for t in range(inner_idx.shape[0]):
        v = inner_idx[t]
        if _color(v, col, cstamp, cur, k0, k1, p, nsites) != want:
            continue
        if _get_link(v, prv, fstamp, fcur) == SOURCE:
            continue
        node = 2 * v
        if vstamp[node] == vcur:
            continue
        vstamp[node] = vcur
        parent[node] = SOURCE
        queue[top] = node
        top += 1
    while top > 0 and last < 0:
        top -= 1
        u = queue[top]
        v = u >> 1
        if (u & 1) == 0:
            pv = _get_link(v, prv, fstamp, fcur)
            if pv >= 0:
                node = 2 * pv + 1
                if vstamp[node] != vcur:
                    vstamp[node] = vcur
                    parent[node] = u
                    queue[top] = node
                    top += 1
            if _get_thr(v, thr, fstamp, fcur) == 0:
                node = u + 1
                if vstamp[node] != vcur:
                    vstamp[node] = vcur
                    parent[node] = u
                    queue[top] = node
                    top += 1
        else:
            nv = _get_link(v, nxt, fstamp, fcur)
            if outer[v] and nv != SINK:
                last = u
                break
            if _get_thr(v, thr, fstamp, fcur) == 1:
                node = u - 1
                if vstamp[node] != vcur:
                    vstamp[node] = vcur
                    parent[node] = u
                    queue[top] = node
                    top += 1
            for t in range(6):
                w = nbr[v, order[v, t]]
                if w < 0 or w == nv:
                    continue
                node = 2 * w
                if vstamp[node] == vcur:
                    continue
                if _color(w, col, cstamp, cur, k0, k1, p, nsites) != want:
                    continue
                vstamp[node] = vcur
                parent[node] = u
                queue[top] = node
                top += 1
    if last < 0:
        return False
    # collect nodes from the sink side back to the source
    m = 0
    u = last
    while u != SOURCE:
        path[m] = u
        m += 1
        u = parent[u]
    first = path[m - 1] >> 1
    _touch(first, thr, nxt, prv, fstamp, fcur)
    prv[first] = SOURCE
    for t in range(m - 1, 0, -1):
        a = path[t]
        b = path[t - 1]
        va = a >> 1
        vb = b >> 1
        _touch(va, thr, nxt, prv, fstamp, fcur)
        _touch(vb, thr, nxt, prv, fstamp, fcur)
        if va == vb:
            thr[va] = 1 if (a & 1) == 0 else 0
        elif (a & 1) == 1:
            nxt[va] = vb
            prv[vb] = va
        else:
            # in-half of va to out-half of vb: cancel the flow vb -> va
            if nxt[vb] == va:
                nxt[vb] = NONE
            if prv[va] == vb:
                prv[va] = NONE
    lastv = path[0] >> 1
    _touch(lastv, thr, nxt, prv, fstamp, fcur)
    nxt[lastv] = SINK
    return True


@nb.njit(cache=True)
def max_flow(nbr, order, inner_idx, outer, want, cap, col, cstamp, cur, k0, k1, p,
             vstamp, ctr, parent, queue, thr, nxt, prv, fstamp, path):
    """Number of vertex-disjoint ``want`` crossings, stopping once ``cap`` is hit.

    ``ctr[1]`` and ``ctr[2]`` are the visit and flow stamp counters.
    """
    ctr[2] += 1
    fcur = ctr[2]
    flow = 0
    while flow < cap:
        ctr[1] += 1
        if not _augment_once(nbr, order, inner_idx, outer, want, col, cstamp, cur, k0, k1, p,
                             vstamp, ctr[1], parent, queue, thr, nxt, prv, fstamp, fcur,
                             path):
            break
        flow += 1
    return flow


@nb.njit(cache=True)
def arm_outcome(nbr, order, inner_idx, outer, jb, want_white, conj, col, cstamp, cur,
                k0, k1, p, vstamp, ctr, parent, queue, thr, nxt, prv, fstamp, path):
    """Black crossing count capped at ``jb`` and the white one-arm indicator.

    With ``conj`` set, the evaluation short-circuits as soon as the
    conjunction ``count >= jb and white`` is known to fail; skipped parts are
    reported as -1.
    """
    count = -1
    white = -1
    if jb == 1 or (jb > 1 and conj):
        ctr[1] += 1
        if not one_arm(nbr, order, inner_idx, outer, 1, col, cstamp, cur, k0, k1, p,
                       vstamp, ctr[1], queue):
            count = 0
        elif jb == 1:
            count = 1
        if count == 0 and conj:
            return count, white
    if want_white:
        ctr[1] += 1
        white = 1 if one_arm(nbr, order, inner_idx, outer, 0, col, cstamp, cur, k0, k1, p,
                             vstamp, ctr[1], queue) else 0
        if white == 0 and conj:
            return count, white
    if jb > 1 and count < 0:
        count = max_flow(nbr, order, inner_idx, outer, 1, jb, col, cstamp, cur, k0, k1, p,
                         vstamp, ctr, parent, queue, thr, nxt, prv, fstamp, path)
    return count, white


@nb.njit(cache=True)
def mc_chunk(nbr, order, inner_idx, outer, jb, want_white, conj, seed, stream0, count, p,
             col, cstamp, vstamp, ctr, parent, queue, thr, nxt, prv, fstamp, path):
    """Arm outcomes for streams ``stream0 .. stream0+count-1`` under one seed."""
    out_b = np.empty(count, dtype=np.int8)
    out_w = np.empty(count, dtype=np.int8)
    k0 = np.uint64(seed)
    for s in range(count):
        k1 = np.uint64(stream0) + np.uint64(s)
        ctr[0] += 1
        b, w = arm_outcome(nbr, order, inner_idx, outer, jb, want_white, conj, col, cstamp,
                           ctr[0], k0, k1, p, vstamp, ctr, parent, queue, thr, nxt,
                           prv, fstamp, path)
        out_b[s] = b
        out_w[s] = w
    return out_b, out_w


@nb.njit(cache=True)
def enumerate_outcomes(nbr, order, inner_idx, outer, jb, col, cstamp, vstamp, ctr, parent,
                       queue, thr, nxt, prv, fstamp, path):
    """Arm outcomes for every colouring of a tiny annulus (bit i = site i)."""
    nsites = nbr.shape[0]
    total = 1 << nsites
    out_b = np.empty(total, dtype=np.int8)
    out_w = np.empty(total, dtype=np.int8)
    k0 = np.uint64(0)
    for m in range(total):
        ctr[0] += 1
        cur = ctr[0]
        for i in range(nsites):
            col[i] = (m >> i) & 1
            cstamp[i] = cur
        b, w = arm_outcome(nbr, order, inner_idx, outer, jb, True, False, col, cstamp, cur,
                           k0, k0, 0.5, vstamp, ctr, parent, queue, thr, nxt, prv,
                           fstamp, path)
        out_b[m] = b
        out_w[m] = w
    return out_b, out_w


@nb.njit(cache=True)
def min_circuit_weight(nbr, cross, ray_idx, weight):
    """Minimum total site weight over circuits surrounding the hole.

    Runs a 0-1 breadth-first search on the two-sheet cover (sheet flips at
    each cut crossing) from every site on the positive real axis to its copy
    on the other sheet.  A closed walk with odd winding contains a simple
    surrounding circuit of no larger weight, and every surrounding circuit
    passes through the positive real axis.  Returns -1 if no circuit exists.
    """
    nsites = nbr.shape[0]
    nn = 2 * nsites
    best = -1
    dist = np.empty(nn, dtype=np.int64)
    done = np.zeros(nn, dtype=np.uint8)
    qa = np.empty(7 * nn + 2, dtype=np.int64)
    qb = np.empty(7 * nn + 2, dtype=np.int64)
    for t in range(ray_idx.shape[0]):
        s = ray_idx[t]
        dist[:] = 1 << 40
        done[:] = 0
        start = 2 * s
        dist[start] = weight[s]
        target = 2 * s + 1
        level = 0
        na = 0
        nb_ = 0
        if weight[s] == 0:
            qa[na] = start
            na += 1
        else:
            qb[nb_] = start
            nb_ += 1
        found = -1
        while na > 0 or nb_ > 0:
            if na == 0:
                qa, qb = qb, qa
                na = nb_
                nb_ = 0
                level += 1
                if best >= 0 and level - weight[s] >= best:
                    break
            na -= 1
            u = qa[na]
            if done[u] == 1 or dist[u] != level:
                continue
            done[u] = 1
            if u == target:
                found = level - weight[s]
                break
            v = u >> 1
            sh = u & 1
            for d in range(6):
                w = nbr[v, d]
                if w < 0:
                    continue
                node = 2 * w + (sh ^ (1 if cross[v, d] != 0 else 0))
                nd = level + weight[w]
                if nd < dist[node]:
                    dist[node] = nd
                    if weight[w] == 0:
                        qa[na] = node
                        na += 1
                    else:
                        qb[nb_] = node
                        nb_ += 1
        if found >= 0 and (best < 0 or found < best):
            best = found
    return best
