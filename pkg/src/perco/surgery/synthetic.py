"""Seeded synthetic families of crossings for exercising the rerouting."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..lattice import SQRT3, TWO_PI, Annulus, Site, build_annulus
from .reroute import RerouteInstance, relative_windings


def snap(x: float, y: float) -> tuple[int, int]:
    """Nearest lattice site to a planar point (cube rounding)."""
    r = y / (0.5 * SQRT3)
    q = x - 0.5 * r
    return _cube_round(q, r)


def _cube_round(q: float, r: float) -> tuple[int, int]:
    s = -q - r
    rq, rr, rs = round(q), round(r), round(s)
    dq, dr, ds = abs(rq - q), abs(rr - r), abs(rs - s)
    if dq > dr and dq > ds:
        rq = -rr - rs
    elif dr > ds:
        rr = -rq - rs
    return int(rq), int(rr)


def lattice_line(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """Sites on the straight segment from ``a`` to ``b``, consecutive ones adjacent."""
    dq, dr = b[0] - a[0], b[1] - a[1]
    n = max(abs(dq), abs(dr), abs(dq + dr))
    if n == 0:
        return [a]
    if n == 1:
        return [a, b]
    out = []
    for t in range(n + 1):
        f = t / n
        # a tiny nudge keeps ties from flipping between neighbours
        out.append(_cube_round(a[0] + dq * f + 1e-6, a[1] + dr * f + 2e-6))
    return out


def loop_erase(seq):
    out = []
    where = {}
    for s in seq:
        if s in where:
            cut = where[s]
            for t in out[cut + 1 :]:
                del where[t]
            out = out[: cut + 1]
        else:
            where[s] = len(out)
            out.append(s)
    return out


def snap_many(x, y) -> np.ndarray:
    """Vectorised ``snap``; returns an ``(m, 2)`` array of axial coordinates."""
    r = np.asarray(y) / (0.5 * SQRT3)
    q = np.asarray(x) - 0.5 * r
    s = -q - r
    rq, rr, rs = np.round(q), np.round(r), np.round(s)
    dq, dr, ds = np.abs(rq - q), np.abs(rr - r), np.abs(rs - s)
    fix_q = (dq > dr) & (dq > ds)
    fix_r = ~fix_q & (dr > ds)
    rq = np.where(fix_q, -rr - rs, rq)
    rr = np.where(fix_r, -rq - rs, rr)
    return np.stack([rq, rr], axis=1).astype(np.int64)


def curve_to_crossing(a: Annulus, pts) -> np.ndarray:
    """Snap a planar curve to a simple crossing of ``a`` (site indices).

    The curve should start inside the hole and end outside the disc; the
    result runs from the last hole exit to the first subsequent exit of the
    disc.
    """
    pts = np.asarray(pts, dtype=np.float64)
    snapped = snap_many(pts[:, 0], pts[:, 1])
    keep = np.ones(len(snapped), dtype=bool)
    keep[1:] = (snapped[1:] != snapped[:-1]).any(axis=1)
    snapped = [tuple(int(v) for v in row) for row in snapped[keep]]
    sites = [snapped[0]]
    for s in snapped[1:]:
        sites.extend(lattice_line(sites[-1], s)[1:])
    sites = loop_erase(sites)
    n2, N2 = a.n * a.n, a.N * a.N
    nn = [q * q + q * r + r * r for q, r in sites]
    start = max(i for i, v in enumerate(nn) if v <= n2) + 1
    stop = next(i for i in range(start, len(nn)) if nn[i] > N2)
    return np.array([a.index(Site(*s)) for s in sites[start:stop]], dtype=np.int64)


def spiral_points(n, N, phase, turns, wiggle=0.0, wiggle_phase=0.0, step=0.4):
    """Archimedean spiral from just inside radius ``n`` to just outside ``N``."""
    r0, r1 = n - 1.0, N + 1.5
    W = TWO_PI * turns
    length = W * 0.5 * (r0 + r1)
    m = max(int(length / step), 16)
    th = np.linspace(0.0, W, m)
    r = r0 + (r1 - r0) * th / W
    ang = phase + th + wiggle * np.sin(3 * th / max(turns, 1) + wiggle_phase)
    return list(zip(r * np.cos(ang), r * np.sin(ang)))


def ray_points(n, N, phase, bend=0.0, step=0.4):
    r0, r1 = n - 1.0, N + 1.5
    m = max(int((r1 - r0) / step), 8)
    r = np.linspace(r0, r1, m)
    ang = phase + bend * (r - r0) / (r1 - r0)
    return list(zip(r * np.cos(ang), r * np.sin(ang)))


@lru_cache(maxsize=16)
def _annulus(n: int, N: int) -> Annulus:
    return build_annulus(n, N)


def family_disjoint(fam) -> bool:
    allsites = np.concatenate(fam)
    return len(np.unique(allsites)) == len(allsites)


def synthetic_instance(j: int, seed: int, turns: float = 5.0, gap: float = 3.5,
                       n: int = 4, bend: float = 0.6, wiggle: float = 0.15,
                       max_tries: int = 50) -> RerouteInstance:
    """Interleaved spirals over near-radial crossings, both counterclockwise.

    Radial spacing between neighbouring spiral strands is about ``gap``
    lattice units, which keeps the snapped strands disjoint.
    """
    rng = np.random.default_rng(seed)
    N = int(math.ceil(n + gap * j * turns)) + 2
    a = _annulus(n, N)
    for _ in range(max_tries):
        ph = rng.uniform(0, TWO_PI)
        gph = rng.uniform(0, TWO_PI)
        bd = rng.uniform(-bend, bend)
        wig = rng.uniform(0.0, wiggle)
        wph = rng.uniform(0, TWO_PI)
        t = turns * rng.uniform(1.0, 1.1)
        deltas = [curve_to_crossing(a, ray_points(n, N, ph + TWO_PI * k / j, bd))
                  for k in range(j)]
        gammas = [curve_to_crossing(a, spiral_points(n, N, gph + TWO_PI * k / j, t, wig, wph))
                  for k in range(j)]
        if not (family_disjoint(deltas) and family_disjoint(gammas)):
            continue
        inst = RerouteInstance(a, gammas, deltas)
        try:
            inst.validate()
            rel = relative_windings(inst)
        except ValueError:
            continue
        if min(rel) > TWO_PI * (1 + 2 / j) + TWO_PI:
            return inst
    raise RuntimeError(f"could not build a synthetic instance for j={j}, seed={seed}")


def synthetic_pair(j: int, seed: int, **kw):
    """(annulus, lambdas, lambda_primes) for the iterated rerouting."""
    inst = synthetic_instance(j, seed, **kw)
    return inst.annulus, inst.deltas, inst.gammas
