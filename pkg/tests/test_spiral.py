import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perco.lattice import GeometryError, Site, build_annulus
from perco.sample import BLACK, WHITE, SeedSpec, SiteConfig, sample_config
from perco.surgery import (
    SpiralWitness,
    active_points,
    count_disjoint_spirals,
    dyadic_radii,
    find_spiral,
    spiral_problems,
    spiral_witnesses,
    verify_spiral,
)

CCW = ((-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1))


def ring(k):
    q, r, out = k, 0, []
    for dq, dr in CCW:
        for _ in range(k):
            out.append((q, r))
            q, r = q + dq, r + dr
    return out


def hand_witness(a):
    """m = 3, j = 1: hexagonal rings for circuits and one lap of ring 7 for the spiral."""
    idx = lambda pts: tuple(a.index(Site(*s)) for s in pts)  # noqa: E731
    ray = [(q, 0) for q in range(4, 13)]
    spiral = ring(7) + [(8, -1), (8, 0)]
    return SpiralWitness(
        m=3,
        j=1,
        rays=(idx(ray),),
        spirals=(idx(spiral),),
        inner_circuits=(idx(ring(5)),),
        outer_circuits=(idx(ring(12)),),
        active=((a.index(Site(7, 0)), a.index(Site(9, 0))),),
        turn=1,
        host=(3, 12),
    )


@pytest.fixture(scope="module")
def host():
    return build_annulus(3, 12)


def test_hand_witness_is_valid(host):
    w = hand_witness(host)
    assert spiral_problems(SiteConfig.uniform(host, BLACK), w) == []


def test_flipping_a_ray_site_breaks_it(host):
    w = hand_witness(host)
    col = np.ones(host.size, dtype=np.uint8)
    col[w.rays[0][3]] = WHITE
    c = SiteConfig(host, col)
    assert not verify_spiral(c, w)
    assert any("not black" in s for s in spiral_problems(c, w))


def test_shared_ray_site_breaks_it():
    a = build_annulus(3, 12)
    c = SiteConfig.uniform(a, BLACK)
    w = find_spiral(c, 3, 2, budget=200)
    assert w is not None and verify_spiral(c, w)
    r0, r1 = w.rays
    bad = SpiralWitness(w.m, w.j, (r0, r1[:-1] + (r0[-1],)), w.spirals, w.inner_circuits,
                        w.outer_circuits, w.active, w.turn, w.host)
    assert any("meets another path" in s for s in spiral_problems(c, bad))


def test_wrong_turn_and_wrong_band(host):
    c = SiteConfig.uniform(host, BLACK)
    w = hand_witness(host)
    flipped = SpiralWitness(w.m, w.j, w.rays, w.spirals, w.inner_circuits, w.outer_circuits,
                            w.active, -1, w.host)
    assert any("turns" in s for s in spiral_problems(c, flipped))
    idx = tuple(host.index(Site(*s)) for s in ring(7))
    swapped = SpiralWitness(w.m, w.j, w.rays, w.spirals, (idx,), w.outer_circuits, w.active,
                            w.turn, w.host)
    assert any("leaves" in s for s in spiral_problems(c, swapped))
    off = SpiralWitness(w.m, w.j, w.rays, w.spirals, w.inner_circuits, w.outer_circuits,
                        ((w.active[0][0], w.rays[0][-1]),), w.turn, w.host)
    assert any("active" in s for s in spiral_problems(c, off))


def test_geometry_errors(host):
    w = hand_witness(host)
    with pytest.raises(GeometryError):
        spiral_problems(SiteConfig.uniform(build_annulus(3, 13), BLACK), w)
    stray = SpiralWitness(w.m, w.j, ((host.size + 5,),), w.spirals, w.inner_circuits,
                          w.outer_circuits, w.active, w.turn, None)
    with pytest.raises(GeometryError):
        spiral_problems(SiteConfig.uniform(host, BLACK), stray)
    with pytest.raises(GeometryError):
        find_spiral(SiteConfig.uniform(build_annulus(3, 10), BLACK), 3, 1)


def test_active_points_on_a_straight_ray():
    ray = [(q, 0) for q in range(4, 13)]
    t_in, t_out = active_points(ray, 3)
    assert ray[t_in] == (7, 0) and ray[t_out] == (9, 0)
    assert active_points([(q, 0) for q in range(4, 7)], 3) is None


def test_text_round_trip(host):
    w = hand_witness(host)
    text = w.to_text()
    assert text.splitlines()[0] == "spiral-witness"
    assert SpiralWitness.from_text(text) == w
    with pytest.raises(ValueError):
        SpiralWitness.from_text("nonsense\n")
    with pytest.raises(ValueError):
        SpiralWitness.from_text("spiral-witness\nm 3\nj 1\nrays 0: 1 x\n")


@pytest.mark.parametrize("m,j", [(3, 1), (3, 2), (4, 2), (4, 3)])
def test_all_black_search(m, j):
    a = build_annulus(m, 4 * m)
    c = SiteConfig.uniform(a, BLACK)
    w = find_spiral(c, m, j, budget=1000)
    assert w is not None
    assert verify_spiral(c, w)
    assert find_spiral(c, m, j, budget=1000) == w  # seeded


def test_all_white_finds_nothing():
    a = build_annulus(4, 64)
    c = SiteConfig.uniform(a, WHITE)
    assert find_spiral(c, 4, 1) is None
    assert count_disjoint_spirals(c, 4, 64, 1) == 0


def test_dyadic_schedule():
    assert dyadic_radii(4, 256) == [4, 16, 64]
    assert dyadic_radii(0, 16) == [1, 4]
    assert dyadic_radii(4, 15) == []
    with pytest.raises(GeometryError):
        dyadic_radii(5, 5)


def test_all_black_counts_every_band():
    a = build_annulus(4, 256)
    c = SiteConfig.uniform(a, BLACK)
    assert count_disjoint_spirals(c, 4, 256, 2) >= 3
    ws = spiral_witnesses(c, 4, 256, 2)
    assert [w.m for w in ws] == [4, 16, 64]
    # dyadic bands are disjoint, so the witnesses are too
    sets = [w.all_sites() for w in ws]
    assert all(not (x & y) for i, x in enumerate(sets) for y in sets[i + 1:])


@pytest.fixture(scope="module")
def planted():
    a = build_annulus(4, 16)
    w = find_spiral(SiteConfig.uniform(a, BLACK), 4, 2, budget=200)
    return a, w


@settings(max_examples=30)
@given(st.integers(0, 2**32), st.floats(0.0, 1.0))
def test_verified_witness_survives_extra_black(planted, seed, p):
    a, w = planted
    col = sample_config(a, p, SeedSpec(seed, 4)).colors.copy()
    col[list(w.all_sites())] = BLACK
    c = SiteConfig(a, col)
    assert verify_spiral(c, w)
    white = np.flatnonzero(col == WHITE)
    if len(white):
        col[white[seed % len(white)]] = BLACK
        assert verify_spiral(SiteConfig(a, col), w)


def test_search_is_monotone_on_small_instances(planted):
    a, w = planted
    rng = np.random.default_rng(9)
    for _ in range(10):
        col = (rng.random(a.size) < 0.6).astype(np.uint8)
        col[list(w.all_sites())] = BLACK
        c = SiteConfig(a, col)
        found = find_spiral(c, 4, 2, budget=50)
        assert found is not None and verify_spiral(c, found)
        more = col.copy()
        more[np.flatnonzero(col == WHITE)[:5]] = BLACK
        assert find_spiral(SiteConfig(a, more), 4, 2, budget=50) is not None


@pytest.mark.xfail(
    reason="at p = 1/2 the band circuits needed at these m are far too rare for "
    "desk-scale sampling; see the decisions ledger",
    strict=False,
)
def test_success_rate_at_half_is_bounded_below():
    rates = []
    samples = 200
    for i, m in enumerate((8, 16, 32)):
        a = build_annulus(m, 4 * m)
        hits = sum(
            find_spiral(sample_config(a, 0.5, SeedSpec(505, i * samples + t)), m, 1, budget=20)
            is not None
            for t in range(samples)
        )
        rates.append(hits / samples)
    lower = [r - 2 * math.sqrt(max(r * (1 - r), 1e-12) / samples) for r in rates]
    assert min(lower) > 0
    assert max(rates) < 3 * min(rates)
