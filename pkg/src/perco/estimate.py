"""Monte Carlo estimates of arm-event probabilities and the checks built on them.

Sample ``i`` of a run seeded with ``SeedSpec(seed, stream)`` is the
configuration keyed by ``(seed, stream + i)``, so results do not depend on
how samples are split between workers.  Every query on one annulus is read
off a single pass over common samples.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import stats

from . import _kernels as K
from .arms import ArmQuery, SigmaClass
from .lattice import Annulus, build_annulus
from .sample import SeedSpec, check_probability

CHUNK = 4096
POINT_STRIDE = 1 << 32  # stream offset between schedule points


@dataclass(frozen=True)
class EstimateRecord:
    query: ArmQuery
    samples: int
    hits: int
    p_hat: float
    stderr: float
    seed: SeedSpec
    wall_time: float = 0.0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if not 0 <= self.hits <= self.samples:
            raise ValueError(f"hits {self.hits} outside [0, {self.samples}]")
        if abs(self.p_hat - self.hits / self.samples) > 1e-12:
            raise ValueError(f"p_hat {self.p_hat} is not hits / samples")

    @classmethod
    def from_counts(cls, query: ArmQuery, samples: int, hits: int, seed: SeedSpec,
                    wall_time: float = 0.0) -> EstimateRecord:
        p = hits / samples
        return cls(query, samples, hits, p, math.sqrt(p * (1 - p) / samples), seed, wall_time)


@lru_cache(maxsize=32)
def _annulus(n: int, N: int) -> Annulus:
    return build_annulus(n, N)


@lru_cache(maxsize=8)
def _scratch(n: int, N: int) -> K.Scratch:
    return K.Scratch(_annulus(n, N).size)


def _chunk_outcomes(n, N, jb, want_white, conj, seed, stream0, count, p):
    a = _annulus(n, N)
    s = _scratch(n, N)
    out_b = np.empty(count, dtype=np.int8)
    out_w = np.empty(count, dtype=np.int8)
    for lo in range(0, count, CHUNK):
        m = min(CHUNK, count - lo)
        s.refresh(headroom=8 * m + 16)
        b, w = K.mc_chunk(a.nbr, a.order, a.inner_idx, a.outer, jb, want_white, conj, seed,
                          stream0 + lo, m, p, s.col, s.cstamp, s.vstamp, s.ctr, s.parent,
                          s.queue, s.thr, s.nxt, s.prv, s.fstamp, s.path)
        out_b[lo: lo + m] = b
        out_w[lo: lo + m] = w
    return out_b, out_w


def _split(samples: int, parts: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, samples, parts + 1).astype(np.int64)
    return [(int(lo), int(hi - lo)) for lo, hi in zip(edges, edges[1:]) if hi > lo]


def sample_outcomes(n: int, N: int, samples: int, seed: SeedSpec, jb: int,
                    want_white: bool = True, conj: bool = False, p: float = 0.5,
                    workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (black count capped at ``jb``, white arm indicator).

    Without ``conj`` both outcomes are always evaluated; with it, parts that
    cannot change the conjunction are skipped and reported as -1.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    p = check_probability(p)
    args = (n, N, jb, want_white, conj, seed.seed)
    if workers <= 1:
        return _chunk_outcomes(*args, seed.stream, samples, p)
    parts = _split(samples, workers)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(_chunk_outcomes, *args, seed.stream + lo, cnt, p) for lo, cnt in parts]
        res = [f.result() for f in futs]
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])


def estimate_prob(q: ArmQuery, samples: int, seed: SeedSpec, p: float = 0.5,
                  workers: int = 1) -> EstimateRecord:
    """Fraction of ``samples`` configurations realising ``q``."""
    t0 = time.perf_counter()
    jb, want_white, conj = q.kernel_args()
    b, w = sample_outcomes(q.n, q.N, samples, seed, jb, want_white, conj, p, workers)
    hits = int(np.count_nonzero(q.holds(b, w)))
    return EstimateRecord.from_counts(q, samples, hits, seed, time.perf_counter() - t0)


def joint_cap(queries) -> tuple[int, bool]:
    """Black cap and white flag covering every query in one pass."""
    jb, ww = 0, False
    for q in queries:
        qb, qw, _ = q.kernel_args()
        jb = max(jb, qb)
        ww = ww or qw
    return jb, ww


def estimate_joint(queries, samples: int, seed: SeedSpec, p: float = 0.5,
                   workers: int = 1) -> list[EstimateRecord]:
    """Estimates for several queries on one annulus from common samples."""
    queries = list(queries)
    if len({(q.n, q.N) for q in queries}) != 1:
        raise ValueError("joint estimation needs a common annulus")
    jb, ww = joint_cap(queries)
    t0 = time.perf_counter()
    b, w = sample_outcomes(queries[0].n, queries[0].N, samples, seed, jb, ww, False, p, workers)
    dt = time.perf_counter() - t0
    return [
        EstimateRecord.from_counts(q, samples, int(np.count_nonzero(q.holds(b, w))), seed, dt)
        for q in queries
    ]


def schedule_estimates(queries, Ns, samples: int, seed: SeedSpec, p: float = 0.5,
                       workers: int = 1) -> dict[ArmQuery, list[EstimateRecord]]:
    """Joint estimates at each outer radius; point ``i`` uses stream ``i << 32``.

    ``queries`` are given with any ``N``; they are re-targeted per point.
    """
    out: dict[ArmQuery, list[EstimateRecord]] = {q: [] for q in queries}
    for i, N in enumerate(Ns):
        pt = SeedSpec(seed.seed, seed.stream + i * POINT_STRIDE)
        recs = estimate_joint([q.with_N(N) for q in queries], samples, pt, p, workers)
        for q, r in zip(queries, recs):
            out[q].append(r)
    return out


def merge_records(a: EstimateRecord, b: EstimateRecord) -> EstimateRecord:
    """Pool two estimates of the same query made on disjoint sample streams."""
    if a.query != b.query:
        raise ValueError("can only merge estimates of the same query")
    return EstimateRecord.from_counts(a.query, a.samples + b.samples, a.hits + b.hits, a.seed,
                                      a.wall_time + b.wall_time)


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class ExponentFit:
    alpha_hat: float
    ci95: tuple[float, float]
    schedule: tuple[tuple[int, float, float], ...]  # (N, p_hat, stderr)
    residuals: tuple[float, ...]
    stderr: float
    log_amplitude: float
    excluded: tuple[int, ...] = ()

    def contains(self, x: float) -> bool:
        return self.ci95[0] <= x <= self.ci95[1]


def fit_exponent(records) -> ExponentFit:
    """Weighted least squares of ``log p_hat`` on ``log N``; slope is ``-alpha``.

    Weights are ``(p_hat / stderr)^2``, the delta-method inverse variance of
    ``log p_hat``; a zero standard error (``p_hat = 1``) is floored at half a
    hit.  The 95% interval uses the residual-scaled covariance and Student
    quantiles with ``k - 2`` degrees of freedom.
    """
    records = sorted(records, key=lambda r: r.query.N)
    if len({(r.query.j, r.query.sigma_class, r.query.n) for r in records}) > 1:
        raise ValueError("records must share the query apart from N")
    Ns = [r.query.N for r in records]
    if len(set(Ns)) != len(Ns):
        raise ValueError("outer radii must be distinct")
    usable = [r for r in records if r.hits > 0]
    excluded = tuple(r.query.N for r in records if r.hits == 0)
    if excluded:
        warnings.warn(f"excluding zero-hit records at N = {list(excluded)} from the fit",
                      stacklevel=2)
    if len(usable) < 3:
        raise ValueError(f"need at least 3 records with hits, got {len(usable)}")
    x = np.log([r.query.N for r in usable])
    y = np.log([r.p_hat for r in usable])
    se = np.array([max(r.stderr, 0.5 / r.samples) / r.p_hat for r in usable])
    wts = 1.0 / se**2
    X = np.column_stack([np.ones_like(x), x])
    XtW = X.T * wts
    cov0 = np.linalg.inv(XtW @ X)
    beta = cov0 @ (XtW @ y)
    resid = y - X @ beta
    dof = len(usable) - 2
    s2 = float((wts * resid**2).sum() / dof) if dof > 0 else 0.0
    se_slope = math.sqrt(s2 * cov0[1, 1])
    tq = float(stats.t.ppf(0.975, dof)) if dof > 0 else math.inf
    alpha = -float(beta[1])
    half = tq * se_slope
    return ExponentFit(
        alpha_hat=alpha,
        ci95=(alpha - half, alpha + half),
        schedule=tuple((r.query.N, r.p_hat, r.stderr) for r in records),
        residuals=tuple(float(v) for v in resid),
        stderr=se_slope,
        log_amplitude=float(beta[0]),
        excluded=excluded,
    )


def predict(fit_records, N: int, alpha: float) -> float:
    """Amplitude fit with the exponent held at ``alpha``, evaluated at ``N``."""
    recs = [r for r in fit_records if r.hits > 0]
    x = np.log([r.query.N for r in recs])
    y = np.log([r.p_hat for r in recs])
    w = np.array([(r.p_hat / max(r.stderr, 0.5 / r.samples)) ** 2 for r in recs])
    c = float(np.sum(w * (y + alpha * x)) / np.sum(w))
    return math.exp(c - alpha * math.log(N))


# ---------------------------------------------------------------- checks


@dataclass(frozen=True)
class QuasiMultRecord:
    rho: float
    stderr: float
    holds: bool
    c1_estimate: float
    records: tuple[EstimateRecord, ...] = ()


def quasi_mult_ratio(r13: EstimateRecord, r12: EstimateRecord,
                     r23: EstimateRecord) -> QuasiMultRecord:
    """``rho = p(n1,n3) / (p(n1,n2) p(n2,n3))`` with delta-method error."""
    if r12.p_hat == 0 or r23.p_hat == 0:
        raise ValueError("a sub-annulus estimate is zero; rho is undefined")
    rho = r13.p_hat / (r12.p_hat * r23.p_hat)
    rel2 = sum((r.stderr / r.p_hat) ** 2 for r in (r12, r23))
    if r13.p_hat > 0:
        rel2 += (r13.stderr / r13.p_hat) ** 2
    se = rho * math.sqrt(rel2)
    return QuasiMultRecord(rho, se, rho <= 1 + 3 * se, min(rho, 1.0), (r13, r12, r23))


def quasi_mult_check(j: int, sigma_class: SigmaClass, n1: int, n2: int, n3: int,
                     samples: int, seed: SeedSpec, p: float = 0.5,
                     workers: int = 1) -> QuasiMultRecord:
    """The three annuli are sampled independently (stream offsets 0, 1, 2 << 32)."""
    if not n1 < n2 < n3:
        raise ValueError(f"need n1 < n2 < n3, got {n1}, {n2}, {n3}")
    recs = []
    for i, (lo, hi) in enumerate(((n1, n3), (n1, n2), (n2, n3))):
        q = ArmQuery(j, sigma_class, lo, hi)
        pt = SeedSpec(seed.seed, seed.stream + i * POINT_STRIDE)
        recs.append(estimate_prob(q, samples, pt, p, workers))
    return quasi_mult_ratio(*recs)


@dataclass(frozen=True)
class ExactFkg:
    n: int
    N: int
    sites: int
    p_joint: Fraction
    p_mono: Fraction
    p_white: Fraction

    @property
    def product(self) -> Fraction:
        return self.p_mono * self.p_white

    @property
    def holds(self) -> bool:
        return self.p_joint <= self.product


@dataclass(frozen=True)
class FkgRecord:
    j: int
    samples: int
    p_joint: float
    p_mono: float
    p_white: float
    product: float
    stderr: float
    holds: bool
    exact: ExactFkg | None = None


def exact_outcomes(a: Annulus, jb: int) -> tuple[np.ndarray, np.ndarray]:
    """Outcomes for every colouring of a tiny annulus (bit ``i`` = site ``i``)."""
    if a.size > 22:
        raise ValueError(f"exhaustive enumeration is limited to 22 sites, got {a.size}")
    s = K.Scratch(a.size)
    return K.enumerate_outcomes(a.nbr, a.order, a.inner_idx, a.outer, jb, s.col, s.cstamp,
                                s.vstamp, s.ctr, s.parent, s.queue, s.thr, s.nxt, s.prv,
                                s.fstamp, s.path)


def exact_probability(mask: np.ndarray, nsites: int, p: Fraction = Fraction(1, 2)) -> Fraction:
    """Exact probability of the configurations flagged in ``mask``."""
    codes = np.flatnonzero(mask).astype(np.uint64)
    ones = np.zeros(len(codes), dtype=np.int64)
    for i in range(nsites):
        ones += ((codes >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
    counts = np.bincount(ones, minlength=nsites + 1)
    q = 1 - p
    return sum((int(c) * p**k * q ** (nsites - k) for k, c in enumerate(counts) if c),
               Fraction(0))


def exact_fkg(j: int, n: int = 0, N: int = 2, p: Fraction = Fraction(1, 2)) -> ExactFkg:
    """Exact ``P(MONO_j and ONE_WHITE)`` against ``P(MONO_j) P(ONE_WHITE)``."""
    a = _annulus(n, N)
    b, w = exact_outcomes(a, j)
    mono = b >= j
    white = w == 1
    return ExactFkg(
        n, N, a.size,
        exact_probability(mono & white, a.size, p),
        exact_probability(mono, a.size, p),
        exact_probability(white, a.size, p),
    )


def fkg_check(j: int, n: int, N: int, samples: int, seed: SeedSpec, p: float = 0.5,
              exact: tuple[int, int] | None = (0, 2), workers: int = 1) -> FkgRecord:
    """Harris-type check on common samples, plus the exact tiny-annulus version."""
    b, w = sample_outcomes(n, N, samples, seed, j, True, False, p, workers)
    mono = b >= j
    white = w == 1
    pj = float(np.mean(mono & white))
    pm = float(np.mean(mono))
    pw = float(np.mean(white))
    # delta-method standard error of mean(M W) - mean(M) mean(W) on common samples
    mv, wv = mono.astype(float), white.astype(float)
    infl = mv * wv - pw * mv - pm * wv
    se = float(np.std(infl, ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    ex = exact_fkg(j, *exact) if exact is not None else None
    return FkgRecord(j, samples, pj, pm, pw, pm * pw, se, pj <= pm * pw + 3 * se, ex)


@dataclass(frozen=True)
class StrictReport:
    j: int
    mono: ExponentFit
    poly_j: ExponentFit
    poly_next: ExponentFit
    endpoints: tuple[float, float]

    @property
    def inside(self) -> bool:
        lo, hi = self.endpoints
        return lo < self.mono.ci95[0] and self.mono.ci95[1] < hi


def poly_exponent(j: int) -> float:
    """Polychromatic ``j``-arm exponent ``(j^2 - 1) / 12``."""
    return (j * j - 1) / 12


def strict_report_from(j: int, recs: dict[ArmQuery, list[EstimateRecord]]) -> StrictReport:
    by_class = {(q.sigma_class, q.j): v for q, v in recs.items()}
    return StrictReport(
        j,
        fit_exponent(by_class[(SigmaClass.MONO, j)]),
        fit_exponent(by_class[(SigmaClass.POLY_ONE_WHITE, j)]),
        fit_exponent(by_class[(SigmaClass.POLY_ONE_WHITE, j + 1)]),
        (poly_exponent(j), poly_exponent(j + 1)),
    )


def strict_queries(j: int, n: int, N: int) -> list[ArmQuery]:
    return [
        ArmQuery(j, SigmaClass.MONO, n, N),
        ArmQuery(j, SigmaClass.POLY_ONE_WHITE, n, N),
        ArmQuery(j + 1, SigmaClass.POLY_ONE_WHITE, n, N),
    ]


def strict_inequality_report(j: int, n: int, N_schedule, samples: int, seed: SeedSpec,
                             workers: int = 1) -> StrictReport:
    if j < 2:
        raise ValueError("the strict ordering is stated for j >= 2")
    qs = strict_queries(j, n, N_schedule[0])
    return strict_report_from(j, schedule_estimates(qs, N_schedule, samples, seed,
                                                    workers=workers))


@dataclass
class AprioriRecord:
    decreasing: bool
    gaps_sigma: list[float]
    mono_positive: bool
    C: float
    eps: float
    c_j: float
    beta_j: float
    reran: bool = False
    notes: list[str] = field(default_factory=list)


def _envelope(records, n: int, upper: bool) -> tuple[float, float]:
    """Power envelope ``const * (n/N)^expo`` through the records."""
    recs = [r for r in records if r.hits > 0]
    if len(recs) < 2:
        return math.nan, math.nan
    x = np.log([n / r.query.N for r in recs])
    y = np.log([r.p_hat for r in recs])
    expo = float(np.polyfit(x, y, 1)[0])
    consts = np.exp(y - expo * x)
    return (float(consts.max()) if upper else float(consts.min())), expo


def apriori_from(one_black, mono, n: int) -> AprioriRecord:
    one_black = sorted(one_black, key=lambda r: r.query.N)
    mono = sorted(mono, key=lambda r: r.query.N)
    gaps = [
        (a.p_hat - b.p_hat) / math.sqrt(a.stderr**2 + b.stderr**2 or 1e-300)
        for a, b in zip(one_black, one_black[1:])
    ]
    C, eps = _envelope(one_black, n, upper=True)
    c, beta = _envelope(mono, n, upper=False)
    return AprioriRecord(
        decreasing=all(g > 3 for g in gaps),
        gaps_sigma=gaps,
        mono_positive=all(r.hits > 0 for r in mono),
        C=C, eps=eps, c_j=c, beta_j=beta,
    )


def apriori_check(n: int, N_schedule, samples: int, seed: SeedSpec, j: int = 2,
                  workers: int = 1, max_reruns: int = 2) -> AprioriRecord:
    """ONE_BLACK strictly decreasing along the schedule and MONO_j always seen.

    A zero MONO_j count triggers a re-run with four times the samples on
    fresh streams (up to ``max_reruns`` times); the record says so.
    """
    if len(N_schedule) < 3:
        raise ValueError("need at least 3 schedule points")
    qs = [ArmQuery(1, SigmaClass.ONE_BLACK, n, N_schedule[0]), ArmQuery(j, SigmaClass.MONO, n, N_schedule[0])]
    recs = schedule_estimates(qs, N_schedule, samples, seed, workers=workers)
    out = apriori_from(recs[qs[0]], recs[qs[1]], n)
    tries = 0
    while not out.mono_positive and tries < max_reruns:
        tries += 1
        samples *= 4
        fresh = SeedSpec(seed.seed, seed.stream + (16 + tries) * POINT_STRIDE)
        recs = schedule_estimates(qs, N_schedule, samples, fresh, workers=workers)
        out = apriori_from(recs[qs[0]], recs[qs[1]], n)
        out.reran = True
        out.notes.append(f"re-run {tries} with {samples} samples per point")
    return out


__all__ = [
    "AprioriRecord",
    "EstimateRecord",
    "ExactFkg",
    "ExponentFit",
    "FkgRecord",
    "QuasiMultRecord",
    "StrictReport",
    "apriori_check",
    "apriori_from",
    "estimate_joint",
    "estimate_prob",
    "exact_fkg",
    "exact_outcomes",
    "exact_probability",
    "fit_exponent",
    "fkg_check",
    "merge_records",
    "poly_exponent",
    "predict",
    "quasi_mult_check",
    "quasi_mult_ratio",
    "sample_outcomes",
    "schedule_estimates",
    "strict_inequality_report",
    "strict_queries",
    "strict_report_from",
]
