"""Cross-module property suites behind ``perco --verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import boolcube as bc
from .arms import (
    ArmQuery,
    SigmaClass,
    check_witness,
    max_disjoint_arms,
    min_black_on_circuit,
)
from .estimate import exact_fkg, sample_outcomes
from .lattice import TWO_PI, build_annulus
from .sample import BLACK, WHITE, SeedSpec, SiteConfig, sample_config
from .surgery import (
    check_reroute,
    find_spiral,
    increase_winding,
    reroute_indices,
    synthetic_instance,
    synthetic_pair,
    verify_spiral,
)
from .winding import simple_crossing_sheets, single_arm_winding_sheets

LEVELS = {
    "fast": dict(menger=600, reimer_random=2000, reimer_exhaustive=False, bk=500, harris=500,
                 winding=150, reroute=8, spiral=4, partition=200),
    "full": dict(menger=10_000, reimer_random=100_000, reimer_exhaustive=True, bk=10_000,
                 harris=10_000, winding=1000, reroute=100, spiral=20, partition=2000),
}


@dataclass(frozen=True)
class SuiteResult:
    name: str
    instances: int
    violations: int
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.name}\t{self.instances}\t{self.violations}"


@dataclass
class SuiteReport:
    level: str
    results: list[SuiteResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.violations == 0 for r in self.results)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]


def _menger(count: int, flow, rng) -> tuple[int, int]:
    annuli = [build_annulus(n, N) for n, N in ((1, 4), (2, 6), (2, 9), (3, 12), (4, 16), (4, 24))]
    bad = 0
    for t in range(count):
        a = annuli[t % len(annuli)]
        c = sample_config(a, float(rng.uniform(0.3, 0.8)), SeedSpec(101, t))
        k = flow(c)
        m = min_black_on_circuit(c)
        for j in range(1, 6):
            if (k >= j) != (m >= j):
                bad += 1
                break
    return count, bad


def _witnesses(count: int, rng) -> tuple[int, int]:
    a = build_annulus(2, 10)
    bad = 0
    for t in range(count):
        c = sample_config(a, float(rng.uniform(0.4, 0.8)), SeedSpec(102, t))
        k, w = max_disjoint_arms(c, BLACK, witness=True)
        bad += len(w) != k or bool(check_witness(c, w))
    return count, bad


def _reimer(count: int, exhaustive: bool, rng) -> tuple[int, int]:
    done = bad = 0
    if exhaustive:
        occ = bc.all_occurrences(3)
        events = np.array([e.members for e in bc.all_events(3)])
        flipped = np.array([bc.flip_event(e).members for e in bc.all_events(3)])
        lhs = occ.sum(axis=2)
        rhs = (events[:, None, :] & flipped[None, :, :]).sum(axis=2)
        done += lhs.size
        bad += int((lhs > rhs).sum())
    for n in (4, 5, 6):
        size = 1 << n
        a = rng.random((count, size)) < rng.uniform(0.2, 0.8, size=(count, 1))
        b = rng.random((count, size)) < rng.uniform(0.2, 0.8, size=(count, 1))
        lhs, rhs, mirror = bc.reimer_counts(a, b)
        bad += int(np.sum((lhs > rhs) | (rhs != mirror)))
        done += count
    return done, bad


def _bk(count: int, rng) -> tuple[int, int]:
    bad = 0
    for _ in range(count):
        a, b = bc.random_increasing(4, rng), bc.random_increasing(4, rng)
        bad += not bc.check_bk(a, b).holds
    return count, bad


def _harris(count: int, rng) -> tuple[int, int]:
    bad = 0
    for _ in range(count):
        a, b = bc.random_increasing(5, rng), bc.random_decreasing(5, rng)
        bad += not bc.check_harris(a, b).holds
    return count, bad


def _winding(count: int) -> tuple[int, int]:
    annuli = [build_annulus(0, 2), build_annulus(1, 3)]
    bad = 0
    for t in range(count):
        a = annuli[t % 2]
        c = sample_config(a, 0.5, SeedSpec(103, t))
        for color in (BLACK, WHITE):
            ss = simple_crossing_sheets(c, color)
            K = max([abs(k) for k in ss] + [1])
            bad += not ss <= single_arm_winding_sheets(c, color, TWO_PI * K)
    return count, bad


def _reroute(count: int) -> tuple[int, int]:
    done = bad = 0
    for j in (1, 2, 3):
        for s in range(count):
            inst = synthetic_instance(j, seed=1000 + s)
            res = reroute_indices(inst)
            bad += bool(check_reroute(inst, res.paths, res.gamma_tilde))
            a, lam, lam2 = synthetic_pair(j, seed=2000 + s)
            inc = increase_winding(a, lam, lam2)
            gain = inc.windings[-1] - inc.windings[0]
            bad += bool(np.any(np.abs(gain - TWO_PI) > 2 * TWO_PI / 6))
            done += 2
    return done, bad


def _spiral(count: int, rng) -> tuple[int, int]:
    done = bad = 0
    for t in range(count):
        m = 3 + t % 3
        j = 1 + t % 3
        a = build_annulus(m, 4 * m)
        c = SiteConfig.uniform(a, BLACK)
        w = find_spiral(c, m, j, budget=50, seed=t)
        done += 1
        if w is None or not verify_spiral(c, w):
            bad += 1
            continue
        # white sites off the witness never matter
        col = c.colors.copy()
        off = np.setdiff1d(np.arange(a.size), np.fromiter(w.all_sites(), dtype=np.int64))
        col[rng.choice(off, size=len(off) // 2, replace=False)] = WHITE
        bad += not verify_spiral(SiteConfig(a, col), w)
        done += 1
    return done, bad


def _fkg() -> tuple[int, int]:
    bad = 0
    for j in (1, 2):
        bad += not exact_fkg(j).holds
    return 2, bad


def _estimate(count: int) -> tuple[int, int]:
    seed = SeedSpec(104, 7)
    b1, w1 = sample_outcomes(4, 24, count, seed, 3, True, False)
    bad = 0
    # any split into consecutive stream ranges gives the same outcomes
    cut = count // 3
    b2a, w2a = sample_outcomes(4, 24, cut, seed, 3, True, False)
    b2b, w2b = sample_outcomes(4, 24, count - cut, SeedSpec(104, 7 + cut), 3, True, False)
    bad += not (np.array_equal(b1, np.concatenate([b2a, b2b]))
                and np.array_equal(w1, np.concatenate([w2a, w2b])))
    # event nesting and the B..BW identity on common samples
    mono = [ArmQuery(j, SigmaClass.MONO, 4, 24).holds(b1, w1) for j in (1, 2, 3)]
    bad += int(np.sum(mono[1] & ~mono[0]) + np.sum(mono[2] & ~mono[1]))
    for j in (2, 3):
        poly = ArmQuery(j, SigmaClass.POLY_ONE_WHITE, 4, 24).holds(b1, w1)
        bad += int(np.sum(poly != (mono[j - 2] & (w1 == 1))))
    return count, bad


def run_suites(level: str = "fast", flow=None, stream=None) -> SuiteReport:
    """Run every suite; ``flow`` replaces the black max-flow (negative controls)."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; choose from {sorted(LEVELS)}")
    cfg = LEVELS[level]
    flow = flow or (lambda c: max_disjoint_arms(c, BLACK))
    rng = np.random.default_rng(20240601)
    suites = [
        ("menger_duality", lambda: _menger(cfg["menger"], flow, rng)),
        ("flow_witness", lambda: _witnesses(cfg["menger"] // 10, rng)),
        ("reimer", lambda: _reimer(cfg["reimer_random"], cfg["reimer_exhaustive"], rng)),
        ("bk_monotone", lambda: _bk(cfg["bk"], rng)),
        ("harris", lambda: _harris(cfg["harris"], rng)),
        ("winding_containment", lambda: _winding(cfg["winding"])),
        ("reroute", lambda: _reroute(cfg["reroute"])),
        ("spiral_soundness", lambda: _spiral(cfg["spiral"], rng)),
        ("fkg_exact", _fkg),
        ("estimate_invariants", lambda: _estimate(cfg["partition"])),
    ]
    report = SuiteReport(level)
    for name, fn in suites:
        t0 = time.perf_counter()
        inst, bad = fn()
        res = SuiteResult(name, inst, bad, time.perf_counter() - t0)
        report.results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return report
