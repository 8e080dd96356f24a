"""Triangular-lattice geometry: sites, discs, annuli and their boundaries.

Sites use axial coordinates ``(q, r)`` with planar position
``x = q + r/2``, ``y = r*sqrt(3)/2``.  The squared Euclidean norm is the
integer ``q*q + q*r + r*r``, so disc membership ``|position| <= R`` is decided
exactly in integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SQRT3 = math.sqrt(3.0)
TWO_PI = 2.0 * math.pi

# Neighbour offsets in counterclockwise angular order, starting at angle 0.
DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))
DIR_Q = np.array([d[0] for d in DIRECTIONS], dtype=np.int64)
DIR_R = np.array([d[1] for d in DIRECTIONS], dtype=np.int64)


class GeometryError(ValueError):
    """Invalid radii, or a site that does not belong to the geometry."""


@dataclass(frozen=True, order=True)
class Site:
    q: int
    r: int

    @property
    def x(self) -> float:
        return self.q + 0.5 * self.r

    @property
    def y(self) -> float:
        return 0.5 * SQRT3 * self.r

    @property
    def norm2(self) -> int:
        return self.q * self.q + self.q * self.r + self.r * self.r

    def lattice_neighbors(self) -> list[Site]:
        return [Site(self.q + dq, self.r + dr) for dq, dr in DIRECTIONS]


def norm2(q, r):
    """Squared Euclidean norm of axial coordinates (works on arrays)."""
    return q * q + q * r + r * r


def site_argument(s: Site) -> float:
    """Argument of the planar position, in ``(-pi, pi]``."""
    if s.q == 0 and s.r == 0:
        raise GeometryError("the origin has no argument")
    return math.atan2(s.y, s.x)


def disc_sites(radius: int) -> list[Site]:
    """All sites with ``|position| <= radius``, ordered by ``(r, q)``."""
    out = []
    r2 = radius * radius
    for r in range(-radius - 1, radius + 2):
        for q in range(-2 * radius - 2, 2 * radius + 3):
            if norm2(q, r) <= r2:
                out.append(Site(q, r))
    return out


def external_boundary_size(n: int) -> int:
    """Number of sites outside ``S_n`` having a neighbour in ``S_n``."""
    n2 = n * n
    seen = set()
    for s in disc_sites(n):
        for t in s.lattice_neighbors():
            if t.norm2 > n2:
                seen.add(t)
    return len(seen)


def min_inner_radius(j: int) -> int:
    """Smallest ``n`` whose external boundary holds at least ``j`` sites."""
    if j <= 0:
        raise GeometryError(f"arm count must be positive, got {j}")
    n = 0
    while external_boundary_size(n) < j:
        n += 1
    return n


@dataclass(eq=False)
class Annulus:
    """The annulus ``S_N minus S_n`` with adjacency and boundary data.

    Per-site data lives in parallel numpy arrays indexed by the site order
    (lexicographic in ``(r, q)``).  ``nbr[i, d]`` is the index of the
    neighbour of site ``i`` in direction ``DIRECTIONS[d]``, or -1 when that
    neighbour lies outside the annulus.  ``cross[i, d]`` is the signed number
    of times the edge crosses the cut along the positive real axis (+1 when
    the step turns counterclockwise through the cut).
    """

    n: int
    N: int
    q: np.ndarray
    r: np.ndarray
    nbr: np.ndarray
    cross: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    _offset: int = field(repr=False)
    _grid: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.q)

    def __len__(self) -> int:
        return len(self.q)

    @cached_property
    def x(self) -> np.ndarray:
        return self.q + 0.5 * self.r

    @cached_property
    def y(self) -> np.ndarray:
        return 0.5 * SQRT3 * self.r

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(norm2(self.q, self.r).astype(np.float64))

    @cached_property
    def theta(self) -> np.ndarray:
        """Argument in ``[0, 2*pi)``; the cut sits at angle 0."""
        t = np.arctan2(self.y, self.x)
        return np.where(t < 0, t + TWO_PI, t)

    @cached_property
    def sites(self) -> list[Site]:
        return [Site(int(a), int(b)) for a, b in zip(self.q, self.r)]

    @cached_property
    def inner_idx(self) -> np.ndarray:
        return np.flatnonzero(self.inner).astype(np.int64)

    @cached_property
    def outer_idx(self) -> np.ndarray:
        return np.flatnonzero(self.outer).astype(np.int64)

    @property
    def inner_boundary(self) -> list[Site]:
        return [self.sites[i] for i in self.inner_idx]

    @property
    def outer_boundary(self) -> list[Site]:
        return [self.sites[i] for i in self.outer_idx]

    @cached_property
    def ray_idx(self) -> np.ndarray:
        """Sites on the positive real axis; every surrounding circuit meets one."""
        return np.flatnonzero((self.r == 0) & (self.q > 0)).astype(np.int64)

    @cached_property
    def order(self) -> np.ndarray:
        """Per-site directions sorted from most inward to most outward step."""
        dx = DIR_Q + 0.5 * DIR_R
        dy = 0.5 * SQRT3 * DIR_R
        dot = self.x[:, None] * dx[None, :] + self.y[:, None] * dy[None, :]
        return np.argsort(dot, axis=1, kind="stable").astype(np.int8)

    def index_of(self, s: Site) -> int:
        """Index of ``s`` in the site order, or -1 if it is not in the annulus."""
        a, b = s.q + self._offset, s.r + self._offset
        if 0 <= a < self._grid.shape[0] and 0 <= b < self._grid.shape[1]:
            return int(self._grid[a, b])
        return -1

    def indices_of(self, q, r) -> np.ndarray:
        """Vectorised ``index_of`` over coordinate arrays."""
        q = np.asarray(q, dtype=np.int64) + self._offset
        r = np.asarray(r, dtype=np.int64) + self._offset
        n = self._grid.shape[0]
        ok = (q >= 0) & (q < n) & (r >= 0) & (r < n)
        out = np.full(q.shape, -1, dtype=np.int64)
        out[ok] = self._grid[q[ok], r[ok]]
        return out

    def index(self, s: Site) -> int:
        i = self.index_of(s)
        if i < 0:
            raise GeometryError(f"{s} is not a site of the annulus ({self.n}, {self.N})")
        return i

    def __contains__(self, s: Site) -> bool:
        return self.index_of(s) >= 0

    def neighbors(self, s: Site) -> list[Site]:
        i = self.index(s)
        return [self.sites[k] for k in self.nbr[i] if k >= 0]

    def neighbor_indices(self, i: int) -> np.ndarray:
        row = self.nbr[i]
        return row[row >= 0]

    def step_cross(self, a: int, b: int) -> int:
        """Cut-crossing sign of the edge from site ``a`` to adjacent site ``b``."""
        for d in range(6):
            if self.nbr[a, d] == b:
                return int(self.cross[a, d])
        raise GeometryError(f"sites {a} and {b} are not adjacent")

    def direction(self, a: int, b: int) -> int:
        for d in range(6):
            if self.nbr[a, d] == b:
                return d
        raise GeometryError(f"sites {a} and {b} are not adjacent")


def neighbors(a: Annulus, s: Site) -> list[Site]:
    return a.neighbors(s)


def build_annulus(n: int, N: int) -> Annulus:
    """Build ``S_{n,N}``: the sites with ``n < |position| <= N``."""
    if n < 0 or N <= n:
        raise GeometryError(f"need 0 <= n < N, got n={n}, N={N}")
    n2, N2 = n * n, N * N
    # |q| <= |pos| * 2/sqrt(3) < N + N/6 + 1; pad generously.
    off = N + N // 4 + 3
    qs = np.arange(-off, off + 1, dtype=np.int64)
    Q, R = np.meshgrid(qs, qs, indexing="xy")  # Q varies along columns, R along rows
    nn = norm2(Q, R)
    keep = (nn > n2) & (nn <= N2)
    # row-major over (r, q) gives the lexicographic (r, q) order
    q = Q[keep]
    r = R[keep]
    grid = np.full((2 * off + 1, 2 * off + 1), -1, dtype=np.int64)
    grid[q + off, r + off] = np.arange(len(q))

    nbr = np.empty((len(q), 6), dtype=np.int32)
    in_hole = np.zeros((len(q), 6), dtype=bool)
    outside = np.zeros((len(q), 6), dtype=bool)
    for d in range(6):
        tq, tr = q + DIR_Q[d], r + DIR_R[d]
        nbr[:, d] = grid[tq + off, tr + off]
        t2 = norm2(tq, tr)
        in_hole[:, d] = t2 <= n2
        outside[:, d] = t2 > N2

    x = q + 0.5 * r
    y = 0.5 * SQRT3 * r
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0, theta + TWO_PI, theta)
    cross = np.zeros((len(q), 6), dtype=np.int64)
    for d in range(6):
        j = nbr[:, d]
        ok = j >= 0
        dt = np.zeros(len(q))
        dt[ok] = theta[j[ok]] - theta[ok]
        cross[ok & (dt < -math.pi), d] = 1
        cross[ok & (dt > math.pi), d] = -1

    return Annulus(
        n=n,
        N=N,
        q=q,
        r=r,
        nbr=nbr,
        cross=cross,
        inner=in_hole.any(axis=1),
        outer=outside.any(axis=1),
        _offset=off,
        _grid=grid,
    )
