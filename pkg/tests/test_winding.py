import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from perco.arms import has_one_arm
from perco.lattice import TWO_PI, GeometryError, Site, build_annulus
from perco.sample import BLACK, WHITE, SeedSpec, SiteConfig, sample_config
from perco.winding import (
    LatticePath,
    complete_interval,
    sheet_of_walk,
    simple_crossing_sheets,
    simple_crossing_windings,
    single_arm_winding_sheets,
    winding_angle,
)

HEX_STEPS = ((-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1))


def hex_ring(k, turns):
    """Walk ``turns`` times counterclockwise around the hexagonal ring at distance k."""
    q, r = k, 0
    out = [(q, r)]
    for _ in range(turns):
        for dq, dr in HEX_STEPS:
            for _ in range(k):
                q, r = q + dq, r + dr
                out.append((q, r))
    return out


def spiral_walk(k, turns, N):
    ring = hex_ring(k, abs(turns))
    if turns < 0:
        ring = ring[::-1]
    return ring + [(q, 0) for q in range(k + 1, N + 1)]


def test_radial_path_has_zero_winding():
    assert winding_angle(LatticePath([(q, 0) for q in range(1, 9)])) == 0.0


def test_hexagon_circuit():
    hexagon = LatticePath([(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0)])
    assert winding_angle(hexagon) == pytest.approx(TWO_PI, abs=1e-9)
    assert winding_angle(hexagon.reversed()) == pytest.approx(-TWO_PI, abs=1e-9)


def test_path_validation():
    with pytest.raises(GeometryError):
        LatticePath([(1, 0), (0, 0)])
    with pytest.raises(GeometryError):
        LatticePath([(1, 0), (3, 0)])
    assert not LatticePath([(1, 0), (0, 1), (1, 0)]).is_simple


def test_ring_walks_wind_by_whole_turns():
    for turns in (-2, -1, 1, 3):
        p = LatticePath(hex_ring(3, abs(turns)))
        sign = 1 if turns > 0 else -1
        w = winding_angle(p if turns > 0 else p.reversed())
        assert w == pytest.approx(sign * abs(turns) * TWO_PI, abs=1e-9)


@st.composite
def walks(draw):
    q, r = draw(st.sampled_from([(3, 0), (0, 4), (-5, 2), (2, -6)]))
    steps = draw(st.lists(st.sampled_from(HEX_STEPS), min_size=1, max_size=40))
    out = [(q, r)]
    for dq, dr in steps:
        nq, nr = out[-1][0] + dq, out[-1][1] + dr
        if (nq, nr) == (0, 0):
            continue
        out.append((nq, nr))
    return LatticePath(out)


@given(walks())
def test_reversal_negates_winding(p):
    assert winding_angle(p.reversed()) == pytest.approx(-winding_angle(p), abs=1e-9)


@given(walks())
def test_winding_matches_unwrapped_argument(p):
    args = np.unwrap([math.atan2(s.y, s.x) for s in p.sites])
    assert winding_angle(p) == pytest.approx(args[-1] - args[0], abs=1e-9)


def test_chain_reaches_sheet_zero_only():
    a = build_annulus(2, 10)
    c = SiteConfig.from_black(a, [a.index(Site(q, 0)) for q in range(3, 11)])
    assert single_arm_winding_sheets(c, BLACK, TWO_PI * 3) == {0}
    # the chain lies on the cut ray, so white walks cannot cross it either
    assert single_arm_winding_sheets(c, WHITE, TWO_PI) == {0}


def test_all_black_wide_annulus_reaches_hand_built_sheets():
    a = build_annulus(1, 64)
    c = SiteConfig.uniform(a, BLACK)
    sheets = single_arm_winding_sheets(c, BLACK, TWO_PI * 4)
    built = set()
    for turns in (-3, -1, 0, 2, 3):
        walk = spiral_walk(2, turns, 64)
        w = winding_angle(LatticePath(walk))
        idx = [a.index(Site(*s)) for s in walk]
        assert a.inner[idx[0]] and a.outer[idx[-1]]
        assert sheet_of_walk(a, idx) == round(w / TWO_PI) == turns
        built.add(turns)
    assert built <= sheets
    assert len(sheets) >= 3


@pytest.mark.parametrize("theta", [0.0, -TWO_PI, 3.0, TWO_PI * 1.5])
def test_theta_max_must_be_whole_turns(theta):
    c = SiteConfig.uniform(build_annulus(1, 3), BLACK)
    with pytest.raises(GeometryError):
        single_arm_winding_sheets(c, BLACK, theta)


def test_complete_interval_examples():
    one = complete_interval([0.0])
    assert one.intervals == [(-math.pi, math.pi)] and one.length == pytest.approx(TWO_PI)
    two = complete_interval([0.0, TWO_PI])
    assert two.is_interval and two.length == pytest.approx(2 * TWO_PI)
    assert two.intervals[0] == pytest.approx((-math.pi, 3 * math.pi))
    apart = complete_interval([0.0, 5 * math.pi])
    assert len(apart.intervals) == 2
    empty = complete_interval([])
    assert empty.intervals == [] and empty.length == 0.0
    assert math.pi in one and -math.pi not in one


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=12))
def test_completion_is_the_union_of_windows(angles):
    est = complete_interval(angles)
    probes = np.linspace(-40, 40, 801)
    for x in probes:
        inside = any(a - math.pi < x <= a + math.pi for a in angles)
        near_edge = any(abs(abs(x - a) - math.pi) < 1e-6 for a in angles)
        if not near_edge:
            assert (x in est) == inside
    assert est.length <= TWO_PI * len(angles) + 1e-9


tiny = st.tuples(st.sampled_from([(0, 2), (1, 3)]), st.integers(0, 2**32), st.floats(0.35, 0.75))


@given(tiny)
def test_cover_sheets_contain_simple_path_sheets(t):
    (n, N), seed, p = t
    c = sample_config(build_annulus(n, N), p, SeedSpec(seed, 1))
    for color in (BLACK, WHITE):
        simple = simple_crossing_sheets(c, color)
        K = max([abs(k) for k in simple] + [1])
        assert simple <= single_arm_winding_sheets(c, color, TWO_PI * K)


@given(tiny)
def test_two_enumerators_agree(t):
    (n, N), seed, p = t
    c = sample_config(build_annulus(n, N), p, SeedSpec(seed, 2))
    a = c.annulus
    for color in (BLACK, WHITE):
        ws = simple_crossing_windings(c, color)
        from_angles = {round((w - (a.theta[e] - a.theta[s])) / TWO_PI) for s, e, w in ws}
        assert from_angles == simple_crossing_sheets(c, color)


@given(tiny)
def test_sheets_present_exactly_when_an_arm_exists(t):
    (n, N), seed, p = t
    c = sample_config(build_annulus(n, N), p, SeedSpec(seed, 3))
    for color in (BLACK, WHITE):
        assert bool(single_arm_winding_sheets(c, color, TWO_PI)) == has_one_arm(c, color)


def test_opposite_colours_wind_within_one_turn():
    a = build_annulus(1, 3)
    spreads = []
    for t in range(400):
        c = sample_config(a, 0.5, SeedSpec(77, t))
        black = [w for _, _, w in simple_crossing_windings(c, BLACK)]
        white = [w for _, _, w in simple_crossing_windings(c, WHITE)]
        if not (black and white):
            continue
        gap = max(abs(b - w) for b in black for w in white)
        assert gap < TWO_PI
        # every family angle sits within 2pi of any arm of the other colour,
        # so each completion lies inside one window of width 6pi
        for w in white:
            est = complete_interval(black)
            assert est.intervals[0][0] > w - 3 * math.pi
            assert est.intervals[-1][1] < w + 3 * math.pi
        spreads.append(max(black) - min(black))
    assert spreads


def test_simple_enumeration_size_cap():
    with pytest.raises(GeometryError):
        simple_crossing_windings(SiteConfig.uniform(build_annulus(2, 6), BLACK), BLACK)


def test_reachable_sheets_grow_with_scale():
    n, ratios, samples = 2, (4, 8, 16, 32, 64), 400
    xs, ys, means, ses = [], [], [], []
    for i, r in enumerate(ratios):
        a = build_annulus(n, n * r)
        v = [len(single_arm_winding_sheets(sample_config(a, 0.5, SeedSpec(91, i * samples + t)),
                                           BLACK, TWO_PI * 8))
             for t in range(samples)]
        xs += [math.log(r)] * samples
        ys += v
        means.append(np.mean(v))
        ses.append(np.std(v, ddof=1) / math.sqrt(samples))
    fit = stats.linregress(xs, ys)
    tq = stats.t.ppf(0.975, len(xs) - 2)
    assert fit.slope - tq * fit.stderr > 0
    for k in range(len(means) - 1):
        assert means[k + 1] > means[k] - 2 * math.hypot(ses[k], ses[k + 1])
