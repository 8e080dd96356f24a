"""Sector coordinates induced by a family of disjoint crossings.

Removing ``j`` disjoint inner-to-outer crossings ``D_0 .. D_{j-1}`` (listed
counterclockwise) cuts the annulus into pieces, each lying in one of the
``j`` sectors (sector ``i`` sits counterclockwise of ``D_i``).  Lifting to the
universal cover, every lifted copy of a site gets an integer position:
``2i + 2j*L`` on the ``L``-th lift of ``D_i`` and ``2i + 1 + 2j*L`` inside the
matching lift of sector ``i``.  Along any walk the position moves by at most
one between a crossing site and a sector site, so its total change counts
half-sectors swept, i.e. the winding measured in the frame where the
crossings are straight rays (``pi/j`` per unit).

On the triangular lattice a site path blocks site paths, which is what makes
the pieces well defined.
"""

from __future__ import annotations

import numba as nb
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..lattice import DIR_Q, DIR_R, Annulus, norm2


class FrameError(ValueError):
    """The crossings do not induce a consistent sector structure."""


def step_dirs(a: Annulus, idx: np.ndarray) -> np.ndarray:
    """Direction index of every step of a site path; raises if not adjacent."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) < 2:
        return np.zeros(0, dtype=np.int64)
    hit = a.nbr[idx[:-1]] == idx[1:, None]
    ok = hit.any(axis=1)
    if not ok.all():
        t = int(np.flatnonzero(~ok)[0])
        raise FrameError(f"sites {idx[t]} and {idx[t + 1]} are not adjacent")
    return hit.argmax(axis=1)


def step_sheets(a: Annulus, idx: np.ndarray) -> np.ndarray:
    """Sheet of every site along a path that starts on sheet 0."""
    idx = np.asarray(idx, dtype=np.int64)
    d = step_dirs(a, idx)
    c = a.cross[idx[:-1], d] if len(idx) > 1 else np.zeros(0, dtype=np.int64)
    return np.concatenate([[0], np.cumsum(c)]).astype(np.int64)


@nb.njit(cache=True)
def _component_sheets(nbr, cross, mask):
    """Sheets relative to a root per connected piece of ``mask``.

    Returns (sheet, ok); ok is False if some piece carries a cycle that winds
    around the hole.
    """
    n = nbr.shape[0]
    sheet = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=np.uint8)
    queue = np.empty(n, dtype=np.int64)
    ok = True
    for root in range(n):
        if not mask[root] or seen[root]:
            continue
        seen[root] = 1
        head = 0
        tail = 1
        queue[0] = root
        while head < tail:
            v = queue[head]
            head += 1
            for d in range(6):
                w = nbr[v, d]
                if w < 0 or not mask[w]:
                    continue
                s = sheet[v] + cross[v, d]
                if seen[w] == 0:
                    seen[w] = 1
                    sheet[w] = s
                    queue[tail] = w
                    tail += 1
                elif sheet[w] != s:
                    ok = False
    return sheet, ok


def _hole_or_outside(a: Annulus, v: int):
    """Directions from ``v`` into the hole and out of the disc."""
    q = a.q[v] + DIR_Q
    r = a.r[v] + DIR_R
    nn = norm2(q, r)
    return np.flatnonzero(nn <= a.n * a.n), np.flatnonzero(nn > a.N * a.N)


def _end_dirs(a: Annulus, path: np.ndarray, t: int, dirs: np.ndarray):
    """Incoming and outgoing directions at position ``t`` of a crossing.

    The first site gets a virtual predecessor in the hole and the last one a
    virtual successor outside the disc, both taken as the most radial such
    direction.
    """
    v = int(path[t])
    if t > 0:
        pred = (int(dirs[t - 1]) + 3) % 6
    else:
        hole, _ = _hole_or_outside(a, v)
        if len(hole) == 0:
            raise FrameError(f"crossing does not start next to the hole (site {v})")
        ordr = list(a.order[v])
        pred = min(hole, key=ordr.index)
    if t < len(path) - 1:
        succ = int(dirs[t])
    else:
        _, out = _hole_or_outside(a, v)
        if len(out) == 0:
            raise FrameError(f"crossing does not end next to the outside (site {v})")
        ordr = list(a.order[v])
        succ = max(out, key=ordr.index)
    return pred, succ


def left_dirs(pred: int, succ: int) -> list[int]:
    """Directions strictly between ``succ`` and ``pred``, counterclockwise."""
    out = []
    d = (succ + 1) % 6
    while d != pred:
        out.append(d)
        d = (d + 1) % 6
    return out


def right_dirs(pred: int, succ: int) -> list[int]:
    return left_dirs(succ, pred)


class SectorFrame:
    """Sector positions for a counterclockwise family of disjoint crossings."""

    def __init__(self, a: Annulus, crossings):
        self.a = a
        self.paths = [np.asarray(p, dtype=np.int64) for p in crossings]
        j = self.j = len(self.paths)
        S = a.size
        self.owner = np.full(S, -1, dtype=np.int64)
        self.pos = np.full(S, -1, dtype=np.int64)
        for i, p in enumerate(self.paths):
            if (self.owner[p] >= 0).any():
                raise FrameError("crossings are not disjoint")
            self.owner[p] = i
            self.pos[p] = np.arange(len(p))
        self.dirs = [step_dirs(a, p) for p in self.paths]
        self.pred = []
        self.succ = []
        for p, dd in zip(self.paths, self.dirs):
            ends = [_end_dirs(a, p, t, dd) for t in range(len(p))]
            self.pred.append(np.array([e[0] for e in ends], dtype=np.int64))
            self.succ.append(np.array([e[1] for e in ends], dtype=np.int64))

        Q = np.zeros(S, dtype=np.int64)
        for i, p in enumerate(self.paths):
            Q[p] = 2 * i - 2 * j * step_sheets(a, p)

        free = self.owner < 0
        sheet, ok = _component_sheets(a.nbr, a.cross, free)
        if not ok:
            raise FrameError("a piece of the complement surrounds the hole")
        rows = np.repeat(np.arange(S), 6)
        cols = a.nbr.ravel()
        keep = (cols >= 0) & free[rows] & free[np.maximum(cols, 0)]
        g = csr_matrix((np.ones(int(keep.sum()), dtype=np.int8), (rows[keep], cols[keep])),
                       shape=(S, S))
        ncomp, labels = connected_components(g, directed=False)
        base = {}
        for i, p in enumerate(self.paths):
            for t, v in enumerate(p):
                v = int(v)
                pr, su = int(self.pred[i][t]), int(self.succ[i][t])
                for side, ds in ((1, left_dirs(pr, su)), (-1, right_dirs(pr, su))):
                    for d in ds:
                        w = int(a.nbr[v, d])
                        if w < 0 or not free[w]:
                            continue
                        qw = Q[v] + side - 2 * j * int(a.cross[v, d])
                        kc = qw + 2 * j * int(sheet[w])
                        lab = int(labels[w])
                        if base.setdefault(lab, kc) != kc:
                            raise FrameError(
                                "inconsistent sector labels; are the crossings listed "
                                "counterclockwise?"
                            )
        comp_base = np.zeros(ncomp, dtype=np.int64)
        known = np.zeros(ncomp, dtype=bool)
        for lab, kc in base.items():
            comp_base[lab] = kc
            known[lab] = True
        lab_free = labels[free]
        if not known[lab_free].all():
            raise FrameError("a piece of the complement touches no crossing")
        Q[free] = comp_base[lab_free] - 2 * j * sheet[free]
        self.Q = Q
        self.labels = np.where(free, labels, -1)

    def track(self, idx) -> np.ndarray:
        """Sector positions along a path, its first site taken on sheet 0."""
        idx = np.asarray(idx, dtype=np.int64)
        return self.Q[idx] + 2 * self.j * step_sheets(self.a, idx)

    def sector_of(self, v: int) -> int:
        """Base sector of a free site, or -1 for a crossing site."""
        if self.owner[v] >= 0:
            return -1
        return int(((self.Q[v] % (2 * self.j)) - 1) // 2)

    def side_angle(self, i: int, t: int, d: int, side: int) -> int:
        """Rotation (in sixths of a turn) from the successor direction to ``d``.

        Counterclockwise for ``side == 0`` (the left side), clockwise for the
        right side.  Larger values are closer to the predecessor, i.e. lower.
        """
        su = int(self.succ[i][t])
        return (d - su) % 6 if side == 0 else (su - d) % 6
