"""Spiral witnesses: black structures that let an arm gain or lose a full turn.

A witness at base radius ``m`` lives in ``S_{m,4m}`` and consists of ``j``
disjoint black rays from radius ``m`` to ``4m``, ``j`` disjoint black
circuits in each of ``S_{m,2m}`` and ``S_{3m,4m}``, and for every ray a black
detour inside ``S_{2m,3m}`` joining two of its sites while turning once more
around the origin than the ray itself does between them.

Radii are Euclidean: ``S_{a,b}`` holds the sites with ``a < |x| <= b``.
Witness sites are indices into the host configuration's annulus.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba as nb
import numpy as np

from ..arms import max_disjoint_arms
from ..lattice import TWO_PI, Annulus, GeometryError, build_annulus, norm2
from ..sample import BLACK, SiteConfig
from ..winding import LatticePath, winding_angle

WINDING_TOL = 1e-6

Path = tuple[int, ...]


@dataclass(frozen=True)
class SpiralWitness:
    """Four black path families plus the active points of every ray.

    ``turn`` is the sign of the extra turn made by every spiral path relative
    to the ray segment it replaces (+1 counterclockwise).  ``host`` records
    the ``(n, N)`` of the annulus the indices refer to.
    """

    m: int
    j: int
    rays: tuple[Path, ...]
    spirals: tuple[Path, ...]
    inner_circuits: tuple[Path, ...]
    outer_circuits: tuple[Path, ...]
    active: tuple[tuple[int, int], ...]
    turn: int = 1
    host: tuple[int, int] | None = None

    def __post_init__(self):
        for name in ("rays", "spirals", "inner_circuits", "outer_circuits"):
            fam = tuple(tuple(int(v) for v in p) for p in getattr(self, name))
            object.__setattr__(self, name, fam)
        act = tuple((int(u), int(v)) for u, v in self.active)
        object.__setattr__(self, "active", act)

    def all_sites(self) -> set[int]:
        out: set[int] = set()
        for fam in (self.rays, self.spirals, self.inner_circuits, self.outer_circuits):
            for p in fam:
                out.update(p)
        return out

    def to_text(self) -> str:
        lines = ["spiral-witness", f"m {self.m}", f"j {self.j}", f"turn {self.turn}"]
        if self.host is not None:
            lines.append(f"host {self.host[0]} {self.host[1]}")
        for name in ("rays", "spirals", "inner_circuits", "outer_circuits"):
            for k, p in enumerate(getattr(self, name)):
                lines.append(f"{name} {k}: " + " ".join(map(str, p)))
        for k, (u, v) in enumerate(self.active):
            lines.append(f"active {k}: {u} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SpiralWitness:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or lines[0] != "spiral-witness":
            raise ValueError("not a spiral witness (missing header line)")
        head: dict[str, list[int]] = {}
        fams: dict[str, dict[int, Path]] = {
            k: {} for k in ("rays", "spirals", "inner_circuits", "outer_circuits", "active")
        }
        for lineno, ln in enumerate(lines[1:], start=2):
            key, _, rest = ln.partition(" ")
            try:
                if key in fams:
                    k, _, body = rest.partition(":")
                    fams[key][int(k)] = tuple(int(t) for t in body.split())
                elif key in ("m", "j", "turn", "host"):
                    head[key] = [int(t) for t in rest.split()]
                else:
                    raise ValueError(f"unknown record {key!r}")
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        for key in ("m", "j"):
            if key not in head:
                raise ValueError(f"missing '{key}' line")

        def ordered(d):
            return tuple(d[k] for k in sorted(d))

        active = ordered(fams["active"])
        if any(len(a) != 2 for a in active):
            raise ValueError("active records need exactly two sites")
        host = head.get("host")
        return cls(
            m=head["m"][0],
            j=head["j"][0],
            rays=ordered(fams["rays"]),
            spirals=ordered(fams["spirals"]),
            inner_circuits=ordered(fams["inner_circuits"]),
            outer_circuits=ordered(fams["outer_circuits"]),
            active=active,
            turn=head.get("turn", [1])[0],
            host=tuple(host) if host else None,
        )


# ---------------------------------------------------------------- checking


def _in_band(nn: int, lo: int, hi: int) -> bool:
    return lo * lo < nn <= hi * hi


def active_points(coords: list[tuple[int, int]], m: int) -> tuple[int, int] | None:
    """Positions along a ray of its inner and outer active points.

    The inner one is the first site after the last visit to ``|x| <= 2m``;
    the outer one is the last site before the first subsequent exit from
    ``|x| <= 3m``.
    """
    nn = [norm2(q, r) for q, r in coords]
    inside = [t for t, v in enumerate(nn) if v <= 4 * m * m]
    if not inside or inside[-1] + 1 >= len(nn):
        return None
    t_in = inside[-1] + 1
    if nn[t_in] > 9 * m * m:
        return None
    t_out = next((t for t in range(t_in, len(nn)) if nn[t] > 9 * m * m), None)
    if t_out is None:
        return None
    return t_in, t_out - 1


def _adjacent(u, v) -> bool:
    d = (v[0] - u[0], v[1] - u[1])
    return d in {(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)}


def _has_nbr(s, pred) -> bool:
    q, r = s
    return any(pred(norm2(q + dq, r + dr))
               for dq, dr in ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)))


def spiral_problems(c: SiteConfig, w: SpiralWitness) -> list[str]:
    """Everything wrong with a witness in ``c``; empty when it is valid.

    Works on lattice coordinates and angle sums only, sharing nothing with
    the search beyond the annulus site list.
    """
    a = c.annulus
    if w.host is not None and tuple(w.host) != (a.n, a.N):
        raise GeometryError(f"witness refers to annulus {w.host}, got ({a.n}, {a.N})")
    for v in w.all_sites() | {x for pair in w.active for x in pair}:
        if not 0 <= v < a.size:
            raise GeometryError(f"witness site {v} is outside the annulus")
    m, j = w.m, w.j
    if m < 1 or j < 1:
        return [f"bad parameters m={m}, j={j}"]
    if a.n > m or a.N < 4 * m:
        raise GeometryError(f"annulus S_{{{a.n},{a.N}}} does not cover S_{{{m},{4 * m}}}")
    problems: list[str] = []
    fams = {
        "rays": w.rays,
        "spirals": w.spirals,
        "inner_circuits": w.inner_circuits,
        "outer_circuits": w.outer_circuits,
    }
    for name, fam in fams.items():
        if len(fam) != j:
            problems.append(f"{name}: expected {j} paths, got {len(fam)}")
    if len(w.active) != j:
        problems.append(f"active: expected {j} pairs, got {len(w.active)}")
    if w.turn not in (1, -1):
        problems.append(f"turn must be +1 or -1, got {w.turn}")
    if problems:
        return problems

    def xy(p):
        return [(a.sites[v].q, a.sites[v].r) for v in p]

    for v in sorted(w.all_sites()):
        if c.colors[v] != BLACK:
            problems.append(f"site {v} is not black")
    for name, fam in fams.items():
        seen: set[int] = set()
        for k, p in enumerate(fam):
            if not p:
                problems.append(f"{name} {k} is empty")
            if len(set(p)) != len(p):
                problems.append(f"{name} {k} is not simple")
            if seen & set(p):
                problems.append(f"{name} {k} meets another path of its family")
            seen |= set(p)
    if problems:
        return problems

    for name, lo, hi in (("inner_circuits", m, 2 * m), ("outer_circuits", 3 * m, 4 * m)):
        for k, p in enumerate(fams[name]):
            pts = xy(p)
            if len(pts) < 3:
                problems.append(f"{name} {k} is too short to be a circuit")
                continue
            if not all(_adjacent(u, v) for u, v in zip(pts, pts[1:] + pts[:1])):
                problems.append(f"{name} {k} is not a closed lattice path")
                continue
            if not all(_in_band(norm2(*s), lo, hi) for s in pts):
                problems.append(f"{name} {k} leaves S_{{{lo},{hi}}}")
            turns = winding_angle(LatticePath(tuple(pts + pts[:1]))) / TWO_PI
            if abs(abs(turns) - 1.0) > WINDING_TOL:
                problems.append(f"{name} {k} does not surround the origin")

    for k, p in enumerate(w.rays):
        pts = xy(p)
        if not all(_adjacent(u, v) for u, v in zip(pts, pts[1:])):
            problems.append(f"ray {k} has non-adjacent steps")
            continue
        if not all(_in_band(norm2(*s), m, 4 * m) for s in pts):
            problems.append(f"ray {k} leaves S_{{{m},{4 * m}}}")
        if not _has_nbr(pts[0], lambda v: v <= m * m):
            problems.append(f"ray {k} does not start at radius {m}")
        if not _has_nbr(pts[-1], lambda v: v > 16 * m * m):
            problems.append(f"ray {k} does not end at radius {4 * m}")
        ap = active_points(pts, m)
        if ap is None or (p[ap[0]], p[ap[1]]) != w.active[k]:
            problems.append(f"active points of ray {k} do not match the ray")
        elif not all(_in_band(norm2(*s), 2 * m, 3 * m) for s in pts[ap[0]: ap[1] + 1]):
            problems.append(f"ray {k} leaves S_{{{2 * m},{3 * m}}} between its active points")

    for k, p in enumerate(w.spirals):
        pts = xy(p)
        ray = w.rays[k]
        if len(p) < 2 or not all(_adjacent(u, v) for u, v in zip(pts, pts[1:])):
            problems.append(f"spiral {k} is not a lattice path")
            continue
        if not all(_in_band(norm2(*s), 2 * m, 3 * m) for s in pts):
            problems.append(f"spiral {k} leaves S_{{{2 * m},{3 * m}}}")
        u, v = p[0], p[-1]
        if u not in ray or v not in ray:
            problems.append(f"spiral {k} does not join two sites of ray {k}")
            continue
        if set(p) & set(ray) != {u, v}:
            problems.append(f"spiral {k} touches ray {k} away from its ends")
        iu, iv = ray.index(u), ray.index(v)
        seg = list(ray[iu: iv + 1]) if iu <= iv else list(ray[iv: iu + 1])[::-1]
        gap = winding_angle(LatticePath(tuple(pts))) - winding_angle(LatticePath(tuple(xy(seg))))
        if abs(gap - w.turn * TWO_PI) > WINDING_TOL:
            problems.append(
                f"spiral {k} turns {gap / TWO_PI:+.3f} times relative to its ray segment, "
                f"expected {w.turn:+d}"
            )
    return problems


def verify_spiral(c: SiteConfig, w: SpiralWitness) -> bool:
    return not spiral_problems(c, w)


# ---------------------------------------------------------------- search


@nb.njit(cache=True)
def _min_crossing_weight(nbr, inner_idx, outer, weight):
    """Fewest weighted sites on an inner-to-outer path (0-1 BFS)."""
    n = nbr.shape[0]
    big = 1 << 40
    dist = np.full(n, big, dtype=np.int64)
    dq = np.empty(16 * n + 2, dtype=np.int64)
    head = 8 * n + 1
    tail = head
    for t in range(inner_idx.shape[0]):
        v = inner_idx[t]
        dist[v] = weight[v]
        if weight[v] == 0:
            head -= 1
            dq[head] = v
        else:
            dq[tail] = v
            tail += 1
    while head < tail:
        v = dq[head]
        head += 1
        if outer[v]:
            return dist[v]
        for d in range(6):
            w = nbr[v, d]
            if w < 0:
                continue
            nd = dist[v] + weight[w]
            if nd < dist[w]:
                dist[w] = nd
                if weight[w] == 0:
                    head -= 1
                    dq[head] = w
                else:
                    dq[tail] = w
                    tail += 1
    return -1


@nb.njit(cache=True)
def _shortest_circuit(nbr, cross, ray_idx, allowed):
    """Shortest allowed circuit around the hole, as a site array (or empty).

    Breadth-first search on the two-sheet cover from each allowed site on
    the positive real axis to its copy on the other sheet.
    """
    n = nbr.shape[0]
    nn = 2 * n
    parent = np.empty(nn, dtype=np.int64)
    seen = np.zeros(nn, dtype=np.int64)
    queue = np.empty(nn, dtype=np.int64)
    best_len = nn + 1
    best = np.empty(0, dtype=np.int64)
    stamp = 0
    for t in range(ray_idx.shape[0]):
        s = ray_idx[t]
        if not allowed[s]:
            continue
        stamp += 1
        start = 2 * s
        target = 2 * s + 1
        seen[start] = stamp
        parent[start] = -1
        queue[0] = start
        head = 0
        tail = 1
        depth_end = 1
        depth = 0
        found = False
        while head < tail and not found:
            if head == depth_end:
                depth += 1
                depth_end = tail
                if depth >= best_len:
                    break
            u = queue[head]
            head += 1
            v = u >> 1
            sh = u & 1
            for d in range(6):
                w = nbr[v, d]
                if w < 0 or not allowed[w]:
                    continue
                x = 2 * w + ((sh + cross[v, d]) & 1)
                if seen[x] == stamp:
                    continue
                seen[x] = stamp
                parent[x] = u
                if x == target:
                    found = True
                    break
                queue[tail] = x
                tail += 1
        if found:
            length = 0
            x = parent[target]
            while x != -1:
                length += 1
                x = parent[x]
            if length < best_len:
                best_len = length
                best = np.empty(length, dtype=np.int64)
                x = parent[target]
                i = length - 1
                while x != -1:
                    best[i] = x >> 1
                    i -= 1
                    x = parent[x]
    return best


@nb.njit(cache=True)
def _outside_reach(nbr, outer, blocked):
    """Sites reachable from the outer boundary without entering ``blocked``."""
    n = nbr.shape[0]
    seen = np.zeros(n, dtype=np.uint8)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for v in range(n):
        if outer[v] and not blocked[v]:
            seen[v] = 1
            queue[tail] = v
            tail += 1
    head = 0
    while head < tail:
        v = queue[head]
        head += 1
        for d in range(6):
            w = nbr[v, d]
            if w >= 0 and not blocked[w] and seen[w] == 0:
                seen[w] = 1
                queue[tail] = w
                tail += 1
    return seen


@nb.njit(cache=True)
def _cover_path(nbr, cross, allowed, src, dst, target, K, perm):
    """Shortest walk from ``src`` on sheet 0 to ``dst`` on sheet ``target``.

    Sheets are confined to ``[-K, K]``; ``perm`` fixes the order in which
    directions are tried.  Returns the projected site sequence or an empty
    array.
    """
    n = nbr.shape[0]
    width = 2 * K + 1
    nn = n * width
    parent = np.full(nn, -2, dtype=np.int64)
    queue = np.empty(nn, dtype=np.int64)
    start = src * width + K
    goal = dst * width + K + target
    parent[start] = -1
    queue[0] = start
    head = 0
    tail = 1
    found = start == goal
    while head < tail and not found:
        u = queue[head]
        head += 1
        v = u // width
        k = u - v * width
        for t in range(6):
            d = perm[t]
            w = nbr[v, d]
            if w < 0 or not allowed[w]:
                continue
            k2 = k + cross[v, d]
            if k2 < 0 or k2 >= width:
                continue
            x = w * width + k2
            if parent[x] != -2:
                continue
            parent[x] = u
            if x == goal:
                found = True
                break
            queue[tail] = x
            tail += 1
    if not found:
        return np.empty(0, dtype=np.int64)
    length = 0
    x = goal
    while x != -1:
        length += 1
        x = parent[x]
    out = np.empty(length, dtype=np.int64)
    x = goal
    i = length - 1
    while x != -1:
        out[i] = x // width
        i -= 1
        x = parent[x]
    return out


@lru_cache(maxsize=32)
def _band(lo: int, hi: int) -> Annulus:
    return build_annulus(lo, hi)


def _embed(host: Annulus, sub: Annulus) -> np.ndarray:
    idx = host.indices_of(sub.q, sub.r)
    if (idx < 0).any():
        raise GeometryError(
            f"annulus S_{{{host.n},{host.N}}} does not cover S_{{{sub.n},{sub.N}}}"
        )
    return idx


def _disjoint_circuits(band: Annulus, black: np.ndarray, j: int):
    """Up to ``j`` disjoint black circuits of ``band``, innermost first."""
    if _min_crossing_weight(band.nbr, band.inner_idx, band.outer,
                            black.astype(np.int64)) < j:
        return None
    allowed = black.astype(np.uint8)
    out = []
    for _ in range(j):
        cyc = _shortest_circuit(band.nbr, band.cross, band.ray_idx, allowed)
        if len(cyc) == 0:
            return None
        out.append(cyc)
        blocked = np.zeros(band.size, dtype=np.uint8)
        blocked[cyc] = 1
        reach = _outside_reach(band.nbr, band.outer, blocked)
        allowed = (allowed.astype(bool) & (reach == 1)).astype(np.uint8)
    return out


def find_spiral(c: SiteConfig, m: int, j: int, budget: int = 1000,
                seed: int = 0) -> SpiralWitness | None:
    """Seeded search for a spiral witness at base radius ``m``.

    Circuits are taken innermost first, rays from a maximum flow, and each
    spiral path is a shortest walk on the sheet cover that ends one sheet
    away from the ray segment it replaces.  Each attempt reshuffles the ray
    order, the direction preference and the turn sign.  Returned witnesses
    have passed ``verify_spiral``.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    host = c.annulus
    if m < 1 or j < 1:
        return None
    if host.n > m or host.N < 4 * m:
        raise GeometryError(f"annulus S_{{{host.n},{host.N}}} does not cover S_{{{m},{4 * m}}}")
    black = c.colors == BLACK

    bands = []
    for lo, hi in ((3 * m, 4 * m), (m, 2 * m)):
        b = _band(lo, hi)
        emb = _embed(host, b)
        circ = _disjoint_circuits(b, black[emb], j)
        if circ is None:
            return None
        bands.append([tuple(int(v) for v in emb[cy]) for cy in circ])
    outer_circ, inner_circ = bands

    sub = _band(m, 4 * m)
    emb = _embed(host, sub)
    col = c.colors[emb]
    k, wit = max_disjoint_arms(SiteConfig(sub, col), witness=True, cap=j)
    if k < j:
        return None
    rays = [np.asarray(p, dtype=np.int64) for p in wit.paths[:j]]
    act = []
    for p in rays:
        ap = active_points([(int(sub.q[v]), int(sub.r[v])) for v in p], m)
        if ap is None:
            return None
        act.append(ap)

    # squared norms scaled by j**2 so lane radii 2m + i*m/j stay integral
    nn = norm2(sub.q, sub.r) * (j * j)
    free = col == BLACK
    on_ray = np.full(sub.size, -1, dtype=np.int64)
    for i, p in enumerate(rays):
        on_ray[p] = i

    def ends(p, lo, hi):
        x = nn[p]
        below = np.flatnonzero(x <= lo)
        if len(below) == 0 or below[-1] + 1 >= len(p) or x[below[-1] + 1] > hi:
            return None
        t0 = int(below[-1]) + 1
        above = np.flatnonzero(x[t0:] > hi)
        if len(above) == 0:
            return None
        return t0, t0 + int(above[0]) - 1

    def sheet(seg):
        return int(sum(sub.step_cross(int(u), int(v)) for u, v in zip(seg, seg[1:])))

    rng = np.random.default_rng(seed)
    for attempt in range(budget):
        # alternate the turn sign, and split S_{2m,3m} into one lane per
        # spiral on half of the attempts so the paths cannot crowd each other
        turn = 1 if attempt % 2 == 0 else -1
        lanes = attempt % 4 < 2 and j > 1
        shuffle = attempt >= 4
        order = rng.permutation(j) if shuffle else np.arange(j)
        perm = rng.permutation(6).astype(np.int64) if shuffle else np.arange(6)
        used = np.zeros(sub.size, dtype=bool)
        spirals: list[np.ndarray | None] = [None] * j
        for rank, i in enumerate(order):
            if lanes:
                lo, hi = ((2 * j + rank) * m) ** 2, ((2 * j + rank + 1) * m) ** 2
            else:
                lo, hi = (2 * j * m) ** 2, (3 * j * m) ** 2
            p = rays[i]
            e = ends(p, lo, hi)
            if e is None:
                break
            u, v = int(p[e[0]]), int(p[e[1]])
            if u == v:
                break
            allowed = (nn > lo) & (nn <= hi) & free & ~used & (on_ray != i)
            allowed[u] = allowed[v] = True
            walk = _cover_path(sub.nbr, sub.cross, allowed.astype(np.uint8), u, v,
                               sheet(p[e[0]: e[1] + 1]) + turn, 3, perm)
            if len(walk) == 0 or len(np.unique(walk)) != len(walk):
                break
            spirals[i] = walk
            used[walk] = True
        else:
            w = SpiralWitness(
                m=m,
                j=j,
                rays=tuple(tuple(int(v) for v in emb[p]) for p in rays),
                spirals=tuple(tuple(int(v) for v in emb[s]) for s in spirals),
                inner_circuits=tuple(inner_circ),
                outer_circuits=tuple(outer_circ),
                active=tuple((int(emb[p[t0]]), int(emb[p[t1]])) for p, (t0, t1) in zip(rays, act)),
                turn=turn,
                host=(host.n, host.N),
            )
            if verify_spiral(c, w):
                return w
    return None


def dyadic_radii(n: int, N: int) -> list[int]:
    """Base radii ``n * 4**i`` whose sub-annuli ``S_{m,4m}`` fit inside ``S_{n,N}``."""
    if not 0 <= n < N:
        raise GeometryError(f"need 0 <= n < N, got n={n}, N={N}")
    m = max(n, 1)
    out = []
    while 4 * m <= N:
        out.append(m)
        m *= 4
    return out


def count_disjoint_spirals(c: SiteConfig, n: int, N: int, j: int, budget: int = 200,
                           seed: int = 0) -> int:
    """Number of dyadic sub-annuli of ``S_{n,N}`` where the search succeeds."""
    return sum(
        find_spiral(c, m, j, budget=budget, seed=seed + i) is not None
        for i, m in enumerate(dyadic_radii(n, N))
    )


def spiral_witnesses(c: SiteConfig, n: int, N: int, j: int, budget: int = 200,
                     seed: int = 0) -> list[SpiralWitness]:
    out = []
    for i, m in enumerate(dyadic_radii(n, N)):
        w = find_spiral(c, m, j, budget=budget, seed=seed + i)
        if w is not None:
            out.append(w)
    return out


__all__ = [
    "SpiralWitness",
    "active_points",
    "count_disjoint_spirals",
    "dyadic_radii",
    "find_spiral",
    "spiral_problems",
    "spiral_witnesses",
    "verify_spiral",
]
