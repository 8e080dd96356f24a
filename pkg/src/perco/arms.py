"""Exact per-configuration arm-event detection.

Monochromatic arm counts come from a unit vertex-capacity maximum flow
(Menger); the dual quantity, the fewest black sites on a circuit around the
hole, comes from a 0-1 shortest path on the two-sheet cover of the annulus.
Polychromatic detection is restricted to the ``B...BW`` class, which is the
intersection of ``j-1`` disjoint black arms with one white arm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels as K
from .lattice import Annulus, GeometryError, min_inner_radius
from .sample import BLACK, WHITE, SiteConfig

NO_CIRCUIT = -1


class SigmaClass(enum.Enum):
    MONO = "mono"
    POLY_ONE_WHITE = "poly"
    ONE_BLACK = "one_black"
    ONE_WHITE = "one_white"


@dataclass(frozen=True)
class ArmQuery:
    j: int
    sigma_class: SigmaClass
    n: int
    N: int

    def __post_init__(self):
        if self.j < 1:
            raise ValueError(f"arm count must be >= 1, got {self.j}")
        if self.sigma_class is SigmaClass.POLY_ONE_WHITE and self.j < 2:
            raise ValueError("the B...BW class needs j >= 2")
        if self.sigma_class in (SigmaClass.ONE_BLACK, SigmaClass.ONE_WHITE) and self.j != 1:
            raise ValueError("single-arm classes have j = 1")
        if self.n >= self.N:
            raise ValueError(f"need n < N, got n={self.n}, N={self.N}")
        if self.n < min_inner_radius(self.j):
            raise ValueError(
                f"inner radius {self.n} is below n0({self.j}) = {min_inner_radius(self.j)}"
            )

    def with_N(self, N: int) -> ArmQuery:
        return ArmQuery(self.j, self.sigma_class, self.n, N)

    def kernel_args(self):
        """(black cap, want white, short-circuit) for the outcome kernel."""
        sc = self.sigma_class
        if sc is SigmaClass.MONO:
            return self.j, False, True
        if sc is SigmaClass.POLY_ONE_WHITE:
            return self.j - 1, True, True
        if sc is SigmaClass.ONE_BLACK:
            return 1, False, True
        return 0, True, True

    def holds(self, black_count, white) -> np.ndarray:
        """Evaluate the event from kernel outcomes (scalars or arrays)."""
        b = np.asarray(black_count)
        w = np.asarray(white)
        sc = self.sigma_class
        if sc is SigmaClass.MONO:
            return b >= self.j
        if sc is SigmaClass.POLY_ONE_WHITE:
            return (b >= self.j - 1) & (w == 1)
        if sc is SigmaClass.ONE_BLACK:
            return b >= 1
        return w == 1


@dataclass
class ArmWitness:
    paths: list[list[int]]
    colors: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.paths)


_scratch_cache: dict[int, K.Scratch] = {}


def scratch_for(a: Annulus) -> K.Scratch:
    s = _scratch_cache.get(id(a))
    if s is None or s.nsites != a.size:
        if len(_scratch_cache) > 64:
            _scratch_cache.clear()
        s = K.Scratch(a.size)
        _scratch_cache[id(a)] = s
    return s


def _loaded(c: SiteConfig):
    s = scratch_for(c.annulus)
    cur = s.load(c.colors)
    return s, cur


_Z = np.uint64(0)


def has_one_arm(c: SiteConfig, color: int) -> bool:
    a = c.annulus
    s, cur = _loaded(c)
    s.ctr[1] += 1
    return bool(K.one_arm(a.nbr, a.order, a.inner_idx, a.outer, color, s.col, s.cstamp, cur,
                          _Z, _Z, 0.5, s.vstamp, s.ctr[1], s.queue))


def _flow_state(c: SiteConfig, color: int, cap: int):
    a = c.annulus
    s, cur = _loaded(c)
    flow = K.max_flow(a.nbr, a.order, a.inner_idx, a.outer, color, cap, s.col, s.cstamp, cur,
                      _Z, _Z, 0.5, s.vstamp, s.ctr, s.parent, s.queue, s.thr, s.nxt,
                      s.prv, s.fstamp, s.path)
    return flow, s


def max_disjoint_arms(c: SiteConfig, color: int = BLACK, witness: bool = False,
                      cap: int | None = None):
    """Maximum number of vertex-disjoint ``color`` crossings.

    With ``witness=True`` returns ``(count, ArmWitness)``; the paths are read
    off the flow and are simple and pairwise disjoint.
    """
    if cap is None:
        cap = len(c.annulus.inner_idx) + 1
    flow, s = _flow_state(c, color, cap)
    if not witness:
        return int(flow)
    fcur = s.ctr[2]
    paths = []
    for v in c.annulus.inner_idx:
        if s.fstamp[v] == fcur and s.prv[v] == K.SOURCE:
            path = [int(v)]
            u = int(v)
            while s.nxt[u] != K.SINK:
                u = int(s.nxt[u])
                path.append(u)
                if len(path) > c.annulus.size:
                    raise RuntimeError("flow path does not terminate")
            paths.append(path)
    return int(flow), ArmWitness(paths, [color] * len(paths))


def min_black_on_circuit(c: SiteConfig) -> int:
    """Fewest black sites over circuits surrounding the hole (or NO_CIRCUIT)."""
    a = c.annulus
    w = c.colors.astype(np.int64)
    return int(K.min_circuit_weight(a.nbr, a.cross, a.ray_idx, w))


def detect(c: SiteConfig, q: ArmQuery) -> bool:
    a = c.annulus
    if (a.n, a.N) != (q.n, q.N):
        raise GeometryError(
            f"configuration lives on ({a.n}, {a.N}) but the query asks for ({q.n}, {q.N})"
        )
    jb, want_white, conj = q.kernel_args()
    s, cur = _loaded(c)
    b, w = K.arm_outcome(a.nbr, a.order, a.inner_idx, a.outer, jb, want_white, conj, s.col,
                         s.cstamp, cur, _Z, _Z, 0.5, s.vstamp, s.ctr, s.parent, s.queue,
                         s.thr, s.nxt, s.prv, s.fstamp, s.path)
    return bool(q.holds(b, w))


def same_color_graph(c: SiteConfig, color: int) -> csr_matrix:
    a = c.annulus
    src = np.repeat(np.arange(a.size), 6)
    dst = a.nbr.ravel()
    ok = dst >= 0
    src, dst = src[ok], dst[ok]
    ok = (c.colors[src] == color) & (c.colors[dst] == color)
    src, dst = src[ok], dst[ok]
    return csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(a.size, a.size))


def crossing_clusters(c: SiteConfig, color: int) -> list[list[int]]:
    """Same-colour clusters touching both boundaries, as sorted index lists.

    Clusters are ordered by their smallest site index.
    """
    a = c.annulus
    _, labels = connected_components(same_color_graph(c, color), directed=False)
    mine = c.colors == color
    inner_labels = set(labels[a.inner & mine].tolist())
    outer_labels = set(labels[a.outer & mine].tolist())
    keep = inner_labels & outer_labels
    clusters = [np.flatnonzero((labels == lab) & mine).tolist() for lab in keep]
    clusters.sort(key=lambda cl: cl[0])
    return clusters


def check_witness(c: SiteConfig, w: ArmWitness) -> list[str]:
    """Problems with a witness; an empty list means it is valid."""
    a = c.annulus
    problems = []
    used: set[int] = set()
    for k, path in enumerate(w.paths):
        color = w.colors[k] if k < len(w.colors) else BLACK
        if not path:
            problems.append(f"path {k} is empty")
            continue
        if not a.inner[path[0]]:
            problems.append(f"path {k} does not start on the inner boundary")
        if not a.outer[path[-1]]:
            problems.append(f"path {k} does not end on the outer boundary")
        if len(set(path)) != len(path):
            problems.append(f"path {k} is not simple")
        for u, v in zip(path, path[1:]):
            if v not in a.nbr[u]:
                problems.append(f"path {k} has non-adjacent steps {u}->{v}")
                break
        if any(c.colors[v] != color for v in path):
            problems.append(f"path {k} is not monochromatic")
        if used & set(path):
            problems.append(f"path {k} meets an earlier path")
        used |= set(path)
    return problems


__all__ = [
    "ArmQuery",
    "ArmWitness",
    "BLACK",
    "NO_CIRCUIT",
    "SigmaClass",
    "WHITE",
    "check_witness",
    "crossing_clusters",
    "detect",
    "has_one_arm",
    "max_disjoint_arms",
    "min_black_on_circuit",
]
