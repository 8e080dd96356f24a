import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chi2_contingency

from perco.arms import ArmQuery, SigmaClass, detect
from perco.lattice import build_annulus
from perco.rng import philox_block
from perco.sample import BLACK, WHITE, SeedSpec, SiteConfig, flip_config, sample_config

M64 = 2**64 - 1
u64 = st.integers(0, M64)

# Random123 known-answer vectors for philox4x64-10
KAT = [
    ((0, 0, 0, 0), (0, 0),
     (0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B)),
    ((M64, M64, M64, M64), (M64, M64),
     (0x87B092C3013FE90B, 0x438C3C67BE8D0224, 0x9CC7D7C69CD777B6, 0xA09CAEBF594F0BA0)),
    ((0x243F6A8885A308D3, 0x13198A2E03707344, 0xA4093822299F31D0, 0x082EFA98EC4E6C89),
     (0x452821E638D01377, 0xBE5466CF34E90C6C),
     (0xA528F45403E61D95, 0x38C72DBD566E9788, 0xA5A1610E72FD18B5, 0x57BD43B5E52B7FE6)),
]


def numpy_block(counter, key):
    # numpy's Philox bumps the 256-bit counter before each block
    v = sum(c << (64 * i) for i, c in enumerate(counter))
    v = (v - 1) % 2**256
    start = np.array([(v >> (64 * i)) & M64 for i in range(4)], dtype=np.uint64)
    g = np.random.Philox(counter=start, key=np.array(key, dtype=np.uint64))
    return tuple(int(x) for x in g.random_raw(4))


def numpy_colors(nsites, seed, stream, p):
    blocks = [numpy_block((b, 0, 0, 0), (seed, stream)) for b in range((nsites + 3) // 4)]
    words = [w for blk in blocks for w in blk][:nsites]
    return np.array([1 if (w >> 11) < p * 2.0**53 else 0 for w in words], dtype=np.uint8)


@pytest.mark.parametrize("counter,key,expected", KAT)
def test_known_answers(counter, key, expected):
    assert philox_block(counter, key) == expected


@given(st.tuples(u64, u64, u64, u64), st.tuples(u64, u64))
def test_agrees_with_numpy_philox(counter, key):
    assert philox_block(counter, key) == numpy_block(counter, key)


@given(u64, u64, st.sampled_from([0.5, 0.3, 0.9]))
def test_colours_follow_the_documented_rule(seed, stream, p):
    a = build_annulus(1, 4)
    c = sample_config(a, p, SeedSpec(seed, stream))
    assert np.array_equal(c.colors, numpy_colors(a.size, seed, stream, p))


def test_degenerate_probabilities():
    a = build_annulus(2, 9)
    assert (sample_config(a, 1.0, SeedSpec(1)).colors == BLACK).all()
    assert (sample_config(a, 0.0, SeedSpec(1)).colors == WHITE).all()


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_probability_domain(p):
    with pytest.raises(ValueError):
        sample_config(build_annulus(0, 2), p, SeedSpec(0))


def test_deterministic_and_balanced():
    a = build_annulus(10, 60)
    assert a.size > 10_000
    c1 = sample_config(a, 0.5, SeedSpec(42, 3))
    c2 = sample_config(a, 0.5, SeedSpec(42, 3))
    assert c1 == c2
    k = int(c1.colors.sum())
    assert abs(k - a.size / 2) < 4 * np.sqrt(a.size / 4)


def test_streams_look_independent():
    a = build_annulus(10, 60)
    x = sample_config(a, 0.5, SeedSpec(7, 0)).colors
    y = sample_config(a, 0.5, SeedSpec(7, 1)).colors
    assert not np.array_equal(x, y)
    table = np.array([[np.sum((x == i) & (y == j)) for j in (0, 1)] for i in (0, 1)])
    _, pval, _, _ = chi2_contingency(table)
    assert pval > 1e-3


def test_flip():
    a = build_annulus(2, 8)
    c = sample_config(a, 0.5, SeedSpec(5))
    assert flip_config(flip_config(c)) == c
    assert flip_config(SiteConfig.uniform(a, BLACK)) == SiteConfig.uniform(a, WHITE)


def test_flip_pairs_black_and_white_single_arms():
    a = build_annulus(4, 16)
    qb = ArmQuery(1, SigmaClass.ONE_BLACK, 4, 16)
    qw = ArmQuery(1, SigmaClass.ONE_WHITE, 4, 16)
    cs = [sample_config(a, 0.5, SeedSpec(11, t)) for t in range(300)]
    hits_b = sum(detect(c, qb) for c in cs)
    hits_w = sum(detect(flip_config(c), qw) for c in cs)
    assert hits_b == hits_w


def test_seed_spec_text_round_trip():
    s = SeedSpec(2**64 - 1, 12345)
    assert str(s) == "18446744073709551615 12345"
    assert SeedSpec.parse(str(s)) == s
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(0, 2**64)


def test_config_length_checked():
    a = build_annulus(0, 2)
    with pytest.raises(ValueError):
        SiteConfig(a, np.zeros(a.size + 1))
