"""Winding angles of lattice paths and the sheet structure of single arms.

The annulus is cut along the positive real axis.  A lifted copy of site ``i``
on sheet ``k`` sits at angle ``theta[i] + 2*pi*k`` with ``theta`` in
``[0, 2*pi)``; crossing the cut counterclockwise moves a walk up one sheet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .lattice import TWO_PI, Annulus, GeometryError, Site
from .sample import SiteConfig

MERGE_TOL = 1e-9


@dataclass(frozen=True)
class LatticePath:
    """A sequence of lattice sites, consecutive ones adjacent."""

    sites: tuple[Site, ...]

    def __post_init__(self):
        sites = tuple(s if isinstance(s, Site) else Site(*s) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        for s in sites:
            if s.q == 0 and s.r == 0:
                raise GeometryError("path passes through the origin")
        for a, b in zip(sites, sites[1:]):
            if (b.q - a.q, b.r - a.r) not in _OFFSETS:
                raise GeometryError(f"{a} and {b} are not adjacent")

    @classmethod
    def from_indices(cls, a: Annulus, idx) -> LatticePath:
        return cls(tuple(a.sites[int(i)] for i in idx))

    def __len__(self):
        return len(self.sites)

    @property
    def is_simple(self) -> bool:
        return len(set(self.sites)) == len(self.sites)

    def reversed(self) -> LatticePath:
        return LatticePath(self.sites[::-1])

    def arguments(self) -> np.ndarray:
        """Continuous determination of the argument along the path."""
        if not self.sites:
            return np.zeros(0)
        x = np.array([s.x for s in self.sites])
        y = np.array([s.y for s in self.sites])
        inc = _increments(x, y)
        return math.atan2(y[0], x[0]) + np.concatenate([[0.0], np.cumsum(inc)])


_OFFSETS = {(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)}


def _increments(x, y):
    return np.arctan2(x[:-1] * y[1:] - y[:-1] * x[1:], x[:-1] * x[1:] + y[:-1] * y[1:])


def winding_angle(p: LatticePath) -> float:
    """Total signed change of the argument along ``p``."""
    if len(p.sites) < 2:
        return 0.0
    x = np.array([s.x for s in p.sites])
    y = np.array([s.y for s in p.sites])
    return float(_increments(x, y).sum())


def winding_of_indices(a: Annulus, idx) -> float:
    """Winding angle of a path given as annulus site indices."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) < 2:
        return 0.0
    return float(_increments(a.x[idx], a.y[idx]).sum())


@nb.njit(cache=True)
def _cover_reach(nbr, cross, inner_idx, outer, col, want, K):
    nsites = nbr.shape[0]
    width = 2 * K + 1
    seen = np.zeros(nsites * width, dtype=np.uint8)
    queue = np.empty(nsites * width, dtype=np.int64)
    hit = np.zeros(width, dtype=np.uint8)
    tail = 0
    for t in range(inner_idx.shape[0]):
        v = inner_idx[t]
        if col[v] == want:
            node = v * width + K
            seen[node] = 1
            queue[tail] = node
            tail += 1
    head = 0
    while head < tail:
        node = queue[head]
        head += 1
        v = node // width
        k = node - v * width
        if outer[v]:
            hit[k] = 1
        for d in range(6):
            w = nbr[v, d]
            if w < 0 or col[w] != want:
                continue
            k2 = k + cross[v, d]
            if k2 < 0 or k2 >= width:
                continue
            node2 = w * width + k2
            if seen[node2] == 0:
                seen[node2] = 1
                queue[tail] = node2
                tail += 1
    return hit


def single_arm_winding_sheets(c: SiteConfig, color: int, theta_max: float) -> set[int]:
    """Sheets ``k`` with an outer-boundary copy reachable from sheet 0.

    A walk in ``color`` from inner site ``s`` to outer site ``t`` ending on
    sheet ``k`` has winding ``2*pi*k + theta[t] - theta[s]``.  Sheets are
    confined to ``[-K, K]`` with ``K = theta_max / (2*pi)``.
    """
    ratio = theta_max / TWO_PI
    K = int(round(ratio))
    if theta_max <= 0 or K < 1 or abs(ratio - K) > 1e-9:
        raise GeometryError(f"theta_max must be a positive multiple of 2*pi, got {theta_max}")
    a = c.annulus
    hit = _cover_reach(a.nbr, a.cross, a.inner_idx, a.outer, c.colors, color, K)
    return {int(k) - K for k in np.flatnonzero(hit)}


@nb.njit(cache=True)
def _simple_sheets(nbr, cross, inner_idx, outer, col, want, K):
    """Sheets reached by simple same-colour crossings (exhaustive DFS)."""
    n = nbr.shape[0]
    width = 2 * K + 1
    hit = np.zeros(width, dtype=np.uint8)
    on = np.zeros(n, dtype=np.uint8)
    stack_v = np.empty(n, dtype=np.int64)
    stack_d = np.empty(n, dtype=np.int64)
    stack_k = np.empty(n, dtype=np.int64)
    overflow = False
    for t in range(inner_idx.shape[0]):
        s = inner_idx[t]
        if col[s] != want:
            continue
        depth = 0
        stack_v[0] = s
        stack_d[0] = 0
        stack_k[0] = 0
        on[s] = 1
        if outer[s]:
            hit[K] = 1
        while depth >= 0:
            v = stack_v[depth]
            d = stack_d[depth]
            if d == 6:
                on[v] = 0
                depth -= 1
                continue
            stack_d[depth] = d + 1
            w = nbr[v, d]
            if w < 0 or col[w] != want or on[w]:
                continue
            k = stack_k[depth] + cross[v, d]
            if k < -K or k > K:
                overflow = True
                continue
            if outer[w]:
                hit[k + K] = 1
            depth += 1
            stack_v[depth] = w
            stack_d[depth] = 0
            stack_k[depth] = k
            on[w] = 1
    return hit, overflow


def simple_crossing_sheets(c: SiteConfig, color: int, K: int | None = None) -> set[int]:
    """Sheets of all simple ``color`` paths from an inner to an outer site.

    Exhaustive, so only for tiny annuli.  A simple path visits every site
    at most once and therefore crosses the cut fewer than ``size`` times.
    """
    a = c.annulus
    if a.size > 40:
        raise GeometryError(f"exhaustive path enumeration is limited to 40 sites, got {a.size}")
    K = a.size if K is None else K
    hit, overflow = _simple_sheets(a.nbr, a.cross, a.inner_idx, a.outer, c.colors, color, K)
    if overflow:
        raise GeometryError("sheet range too small for the enumerated paths")
    return {int(k) - K for k in np.flatnonzero(hit)}


def simple_crossing_windings(c: SiteConfig, color: int) -> list[tuple[int, int, float]]:
    """Every simple ``color`` crossing as ``(start, end, winding angle)``.

    Plain depth-first enumeration with atan2 increments; an oracle for tiny
    annuli (at most 40 sites), independent of the cover graph.
    """
    a = c.annulus
    if a.size > 40:
        raise GeometryError(f"exhaustive path enumeration is limited to 40 sites, got {a.size}")
    col = c.colors
    x, y = a.x, a.y
    nbrs = [[int(v) for v in a.nbr[i] if v >= 0 and col[v] == color] for i in range(a.size)]
    out = []
    for s in a.inner_idx.tolist():
        if col[s] != color:
            continue
        on_path = np.zeros(a.size, dtype=bool)
        on_path[s] = True
        stack = [(s, 0.0, iter(nbrs[s]))]
        if a.outer[s]:
            out.append((s, s, 0.0))
        while stack:
            u, w, it = stack[-1]
            v = next(it, None)
            if v is None:
                on_path[u] = False
                stack.pop()
                continue
            if on_path[v]:
                continue
            d = math.atan2(x[u] * y[v] - y[u] * x[v], x[u] * x[v] + y[u] * y[v])
            on_path[v] = True
            if a.outer[v]:
                out.append((s, v, w + d))
            stack.append((v, w + d, iter(nbrs[v])))
    return out


def sheet_of_walk(a: Annulus, idx) -> int:
    """Sheet reached by a walk started on sheet 0 (sum of cut crossings)."""
    return sum(a.step_cross(int(u), int(v)) for u, v in zip(idx, idx[1:]))


@dataclass
class WindingSetEstimate:
    """Achieved angles and the union of the windows ``(angle - pi, angle + pi]``."""

    angles: list[float]
    intervals: list[tuple[float, float]] = field(default_factory=list)

    @property
    def is_interval(self) -> bool:
        return len(self.intervals) == 1

    @property
    def length(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def __contains__(self, x: float) -> bool:
        return any(lo < x <= hi for lo, hi in self.intervals)


def complete_interval(angles) -> WindingSetEstimate:
    """Exact union of half-open windows of width ``2*pi`` around each angle.

    Two windows are merged when their centres are at most ``2*pi`` apart
    (the half-open ends then abut), up to ``MERGE_TOL`` of rounding slack.
    """
    vals = sorted(float(x) for x in angles)
    est = WindingSetEstimate(list(vals))
    if not vals:
        return est
    lo, last = vals[0], vals[0]
    for x in vals[1:]:
        if x - last > TWO_PI + MERGE_TOL:
            est.intervals.append((lo - math.pi, last + math.pi))
            lo = x
        last = x
    est.intervals.append((lo - math.pi, last + math.pi))
    return est
