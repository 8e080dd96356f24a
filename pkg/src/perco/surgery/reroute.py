"""Rerouting a family of crossings along a family with larger winding.

Given disjoint crossings ``deltas`` (counterclockwise) and disjoint crossings
``gammas`` that sweep more than ``2*pi*(1 + 2/j)`` in the frame where the
deltas are straight, the construction returns disjoint paths, the ``k``-th
joining the inner end of ``deltas[k]`` to the outer end of ``deltas[k+1]``
inside ``deltas[k] | deltas[k+1] | gammas[k]``.

Steps, in sector positions (see ``frame``):

1. ``tau[k]``: first time ``gammas[k]`` is in a lift of sector ``k-1``; its
   track is relabelled so that this lift has position ``2k-1``.
2. ``Gamma``: the union of the prefixes up to ``tau``; ``Delta``: the parts of
   each delta below its last visit to ``Gamma``; ``Omega``: the piece of the
   annulus minus ``Gamma | Delta`` holding the outer boundary.
3. Arcs: maximal runs of ``gammas[k]`` after ``tau[k]``, inside ``Omega`` and
   at position ``2k+1`` (sector ``k`` on the first lap), together with the two
   crossing sites closing them off.  Runs that merely follow a delta are
   outside the open sector and do not count.
4. Walk: climb ``deltas[k]`` from above ``Delta``; at the lowest arc end met,
   cross the arc; keep climbing whichever delta it lands on.  The walk must
   finish at the top of ``deltas[k+1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..lattice import TWO_PI, Annulus
from ..winding import winding_of_indices
from .frame import FrameError, SectorFrame, step_dirs

# Lattice discretisation allowance on winding equalities: one sixth of a
# turn per endpoint.
ANGULAR_QUANTUM = TWO_PI / 6


class RerouteError(ValueError):
    """Malformed instance: paths not adjacent, not disjoint, wrong ends."""


class PreconditionError(ValueError):
    """Winding hypothesis of the construction violated."""


class RerouteFailure(RuntimeError):
    """The walk did not produce a valid family (reported, never hidden)."""


@dataclass
class RerouteInstance:
    annulus: Annulus
    gammas: list
    deltas: list

    def __post_init__(self):
        self.gammas = [np.asarray(g, dtype=np.int64) for g in self.gammas]
        self.deltas = [np.asarray(d, dtype=np.int64) for d in self.deltas]

    @property
    def j(self) -> int:
        return len(self.deltas)

    def validate(self):
        a = self.annulus
        if self.j < 1 or len(self.gammas) != self.j:
            raise RerouteError("need j >= 1 gammas and as many deltas")
        for name, fam in (("gamma", self.gammas), ("delta", self.deltas)):
            used: set[int] = set()
            for k, p in enumerate(fam):
                if len(p) == 0:
                    raise RerouteError(f"{name} {k} is empty")
                if p.min() < 0 or p.max() >= a.size:
                    raise RerouteError(f"{name} {k} leaves the annulus")
                try:
                    step_dirs(a, p)
                except FrameError as e:
                    raise RerouteError(f"{name} {k}: {e}") from None
                if len(set(p.tolist())) != len(p):
                    raise RerouteError(f"{name} {k} is not simple")
                if not a.inner[p[0]] or not a.outer[p[-1]]:
                    raise RerouteError(f"{name} {k} does not cross the annulus")
                if used & set(p.tolist()):
                    raise RerouteError(f"{name} paths are not disjoint")
                used |= set(p.tolist())
            if not _ccw_ordered(a, fam):
                raise RerouteError(f"{name} paths are not listed counterclockwise")


def _ccw_ordered(a: Annulus, fam) -> bool:
    th = [float(a.theta[p[0]]) for p in fam]
    j = len(th)
    if j <= 2:
        return True
    total = sum((th[(k + 1) % j] - th[k]) % TWO_PI for k in range(j))
    return abs(total - TWO_PI) < 1e-6


@dataclass
class RerouteResult:
    paths: list[np.ndarray]
    gamma_tilde: list[set[int]]
    tau: list[int]
    delta_cut: list[int]
    relative_winding: list[float]
    arcs: list[list[tuple[int, int]]] = field(default_factory=list)


@dataclass(order=True)
class _End:
    index: int
    neg_angle: int
    arc: int = field(compare=False)
    which: int = field(compare=False)


def relative_windings(inst: RerouteInstance, frame: SectorFrame | None = None) -> list[float]:
    """Winding of each gamma measured in the frame where the deltas are rays."""
    frame = frame or SectorFrame(inst.annulus, inst.deltas)
    out = []
    for g in inst.gammas:
        P = frame.track(g)
        out.append(float(P[-1] - P[0]) * math.pi / inst.j)
    return out


def reroute_indices(inst: RerouteInstance) -> RerouteResult:
    inst.validate()
    a = inst.annulus
    j = inst.j
    try:
        frame = SectorFrame(a, inst.deltas)
    except FrameError as e:
        raise RerouteError(str(e)) from None
    deltas = inst.deltas
    gammas = inst.gammas

    rel = []
    tracks = []
    for g in gammas:
        P = frame.track(g)
        tracks.append(P)
        rel.append(float(P[-1] - P[0]) * math.pi / j)
    bound = TWO_PI * (1 + 2 / j)
    for k, w in enumerate(rel):
        if not w > bound:
            raise PreconditionError(
                f"gamma {k} winds {w:.4f} rad relative to the deltas; need > {bound:.4f}"
            )

    # 1. first visits to the target sector, and relabelled tracks
    taus = []
    rel_tracks = []
    for k, P in enumerate(tracks):
        target = 2 * k - 1
        hits = np.flatnonzero((P - target) % (2 * j) == 0)
        if len(hits) == 0:
            raise RerouteFailure(f"gamma {k} never enters sector {(k - 1) % j}")
        t = int(hits[0])
        taus.append(t)
        rel_tracks.append(P - P[t] + target)

    # 2. Gamma, Delta, Omega
    S = a.size
    in_gamma = np.zeros(S, dtype=bool)
    for g, t in zip(gammas, taus):
        in_gamma[g[: t + 1]] = True
    cut = []
    removed = in_gamma.copy()
    for i, d in enumerate(deltas):
        hit = np.flatnonzero(in_gamma[d])
        e = int(hit[-1]) if len(hit) else -1
        if e >= len(d) - 1:
            raise RerouteFailure(f"the prefixes cover the outer end of delta {i}")
        cut.append(e)
        removed[d[: e + 1]] = True
    free = ~removed
    rows = np.repeat(np.arange(S), 6)
    cols = a.nbr.ravel()
    keep = (cols >= 0) & free[rows] & free[np.maximum(cols, 0)]
    g_csr = csr_matrix((np.ones(int(keep.sum()), dtype=np.int8), (rows[keep], cols[keep])),
                       shape=(S, S))
    _, labels = connected_components(g_csr, directed=False)
    omega_label = labels[deltas[0][cut[0] + 1]]
    for i, d in enumerate(deltas):
        if labels[d[cut[i] + 1]] != omega_label:
            raise RerouteFailure("the outer ends of the deltas are not in one piece")
    in_omega = free & (labels == omega_label)

    # 3. arcs of sector k after tau_k
    all_arcs = []
    gamma_tilde = []
    ends = []
    for k, (g, P, tau) in enumerate(zip(gammas, rel_tracks, taus)):
        lo, hi = 2 * k, 2 * k + 2
        owner = frame.owner[g]
        pos = frame.pos[g]
        arcs = []
        last = None  # (time, side) of the latest delta visit followed only by sector sites
        for t in range(tau + 1, len(g)):
            v = g[t]
            side = -1
            if owner[t] >= 0 and in_omega[v]:
                if P[t] == lo:
                    side = 0
                elif P[t] == hi:
                    side = 1
            if side >= 0:
                if last is not None and (t - last[0] > 1 or last[1] != side):
                    arcs.append((last[0], t, last[1], side))
                last = (t, side)
            elif P[t] == lo + 1 and owner[t] < 0 and in_omega[v]:
                continue
            else:
                last = None
        lists = ([], [])
        tilde = set()
        for n_arc, (ta, tb, sa, sb) in enumerate(arcs):
            tilde.update(g[ta : tb + 1].tolist())
            for which, (t, s, nb_t) in enumerate(((ta, sa, ta + 1), (tb, sb, tb - 1))):
                v = int(g[t])
                i = int(frame.owner[v])
                pi = int(frame.pos[v])
                d = int(np.flatnonzero(a.nbr[v] == g[nb_t])[0])
                ang = frame.side_angle(i, pi, d, s)
                lists[s].append(_End(pi, -ang, n_arc, which))
        for lst in lists:
            lst.sort()
        all_arcs.append([(ta, tb) for ta, tb, _, _ in arcs])
        gamma_tilde.append(tilde)
        ends.append((lists, arcs))

    # 4. walks
    paths = []
    for k in range(j):
        lists, arcs = ends[k]
        g = gammas[k]
        side_path = (deltas[k], deltas[(k + 1) % j])
        out = deltas[k][: cut[k] + 1].tolist()
        side = 0
        cur = (cut[k] + 1, -10)
        done_to = cut[k]
        used = set()
        while True:
            nxt = None
            for e in lists[side]:
                if (e.index, e.neg_angle) > cur:
                    nxt = e
                    break
            dpath = side_path[side]
            if nxt is None:
                out.extend(dpath[done_to + 1 :].tolist())
                break
            out.extend(dpath[done_to + 1 : nxt.index + 1].tolist())
            if nxt.arc in used:
                raise RerouteFailure(f"walk {k} revisits an arc")
            used.add(nxt.arc)
            ta, tb, sa, sb = arcs[nxt.arc]
            if nxt.which == 0:
                seg = g[ta + 1 : tb + 1]
                side, far_t = sb, tb
            else:
                seg = g[ta:tb][::-1]
                side, far_t = sa, ta
            out.extend(seg.tolist())
            v = int(g[far_t])
            pi = int(frame.pos[v])
            far_nb = g[far_t - 1] if nxt.which == 0 else g[far_t + 1]
            d = int(np.flatnonzero(a.nbr[v] == far_nb)[0])
            cur = (pi, -frame.side_angle(int(frame.owner[v]), pi, d, side))
            done_to = pi
        if side != 1:
            raise RerouteFailure(f"walk {k} finished on its own delta")
        paths.append(np.asarray(out, dtype=np.int64))
    return RerouteResult(paths, gamma_tilde, taus, cut, rel, all_arcs)


def reroute(inst: RerouteInstance):
    """The rerouted family as ``LatticePath`` objects."""
    from ..winding import LatticePath

    res = reroute_indices(inst)
    return [LatticePath.from_indices(inst.annulus, p) for p in res.paths]


def expected_windings(a: Annulus, deltas) -> list[float]:
    """Winding each rerouted path must have, from the deltas alone.

    Path ``k`` is homotopic to the counterclockwise inner arc from the start
    of ``deltas[k]`` to the start of ``deltas[k+1]`` followed by
    ``deltas[k+1]``.
    """
    j = len(deltas)
    out = []
    for k in range(j):
        d0, d1 = deltas[k], deltas[(k + 1) % j]
        gap = (float(a.theta[d1[0]]) - float(a.theta[d0[0]])) % TWO_PI
        if gap == 0.0:
            gap = TWO_PI
        out.append(gap + winding_of_indices(a, d1))
    return out


def check_reroute(inst: RerouteInstance, paths, gamma_tilde=None) -> list[str]:
    """Independent validation of a rerouted family; empty list means valid."""
    a = inst.annulus
    j = inst.j
    problems = []
    paths = [np.asarray(p, dtype=np.int64) for p in paths]
    if len(paths) != j:
        return [f"expected {j} paths, got {len(paths)}"]
    want = expected_windings(a, inst.deltas)
    seen: dict[int, int] = {}
    for k, p in enumerate(paths):
        d0, d1 = inst.deltas[k], inst.deltas[(k + 1) % j]
        if len(p) == 0:
            problems.append(f"path {k} is empty")
            continue
        if p[0] != d0[0]:
            problems.append(f"path {k} does not start where delta {k} starts")
        if p[-1] != d1[-1]:
            problems.append(f"path {k} does not end where delta {(k + 1) % j} ends")
        for u, v in zip(p[:-1], p[1:]):
            if v not in a.nbr[u]:
                problems.append(f"path {k} has a non-adjacent step {u}->{v}")
                break
        if len(set(p.tolist())) != len(p):
            problems.append(f"path {k} is not simple")
        allowed = set(d0.tolist()) | set(d1.tolist())
        allowed |= set(gamma_tilde[k]) if gamma_tilde is not None else set(inst.gammas[k].tolist())
        if not set(p.tolist()) <= allowed:
            problems.append(f"path {k} leaves its allowed union")
        for v in p.tolist():
            if v in seen and seen[v] != k:
                problems.append(f"paths {seen[v]} and {k} share site {v}")
                break
            seen[v] = k
        w = winding_of_indices(a, p)
        if abs(w - want[k]) > 2 * ANGULAR_QUANTUM:
            problems.append(f"path {k} winds {w:.4f}, expected {want[k]:.4f}")
    return problems


class StepError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass
class WindingIncrease:
    families: list[list[np.ndarray]]  # families[0] is the input, then one per step
    windings: np.ndarray  # shape (steps + 1, j)

    @property
    def steps(self) -> int:
        return len(self.families) - 1

    def step_changes(self) -> np.ndarray:
        return np.diff(self.windings, axis=0)


def increase_winding(a: Annulus, lambdas, lambda_primes) -> WindingIncrease:
    """Apply the rerouting ``j`` times with the primed family as the guide.

    Each step shifts the outer endpoints by one position; after ``j`` steps
    every path is back to its own endpoints with one extra turn.
    """
    lambdas = [np.asarray(p, dtype=np.int64) for p in lambdas]
    lambda_primes = [np.asarray(p, dtype=np.int64) for p in lambda_primes]
    j = len(lambdas)
    w0 = [winding_of_indices(a, p) for p in lambdas]
    w1 = [winding_of_indices(a, p) for p in lambda_primes]
    for k in range(j):
        if w1[k] - w0[k] < TWO_PI:
            raise PreconditionError(
                f"path {k}: winding difference {w1[k] - w0[k]:.4f} is below 2*pi"
            )
    fams = [lambdas]
    cur = lambdas
    for step in range(1, j + 1):
        inst = RerouteInstance(a, lambda_primes, cur)
        try:
            res = reroute_indices(inst)
        except (RerouteError, PreconditionError, RerouteFailure) as e:
            raise StepError(step, e) from e
        problems = check_reroute(inst, res.paths, res.gamma_tilde)
        if problems:
            raise StepError(step, RerouteFailure("; ".join(problems)))
        cur = res.paths
        fams.append(cur)
    wind = np.array([[winding_of_indices(a, p) for p in fam] for fam in fams])
    return WindingIncrease(fams, wind)
