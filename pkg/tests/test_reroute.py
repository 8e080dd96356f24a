import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perco.lattice import TWO_PI, Site, build_annulus
from perco.surgery import (
    ANGULAR_QUANTUM,
    PreconditionError,
    RerouteError,
    RerouteInstance,
    check_reroute,
    expected_windings,
    increase_winding,
    reroute,
    reroute_indices,
    synthetic_instance,
    synthetic_pair,
)
from perco.winding import winding_angle, winding_of_indices

CCW = ((-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1))


def ring(k):
    q, r, out = k, 0, []
    for dq, dr in CCW:
        for _ in range(k):
            out.append((q, r))
            q, r = q + dq, r + dr
    return out


def ring_spiral(k0, turns, N):
    """Hand-made spiral: one lap per hexagonal ring, then straight out."""
    path = []
    for i in range(turns):
        k = k0 + i
        sites = ring(k)
        s = sites.index((k, -i))
        path += sites[s:] + sites[:s]
    q, r = path[-1]
    q += 1
    while q * q + q * r + r * r <= N * N:
        path.append((q, r))
        q += 1
    return path


def test_one_arm_spiral_reroutes_to_one_turn():
    n, N = 2, 9
    a = build_annulus(n, N)
    gamma = [a.index(Site(*s)) for s in ring_spiral(3, 4, N)]
    delta = [a.index(Site(q, 0)) for q in range(3, N + 1)]
    assert winding_of_indices(a, gamma) == pytest.approx(4 * TWO_PI, abs=ANGULAR_QUANTUM)
    inst = RerouteInstance(a, [gamma], [delta])
    (path,) = reroute(inst)
    assert winding_angle(path) == pytest.approx(TWO_PI, abs=ANGULAR_QUANTUM)
    res = reroute_indices(inst)
    assert check_reroute(inst, res.paths, res.gamma_tilde) == []


def independent_checks(inst, paths, gamma_tilde):
    j = inst.j
    seen = set()
    for k, p in enumerate(paths):
        p = [int(v) for v in p]
        assert len(set(p)) == len(p)
        assert not seen & set(p)
        seen |= set(p)
        d0, d1 = inst.deltas[k], inst.deltas[(k + 1) % j]
        assert p[0] == d0[0] and p[-1] == d1[-1]
        assert set(p) <= set(d0.tolist()) | set(d1.tolist()) | set(gamma_tilde[k])
        for u, v in zip(p, p[1:]):
            assert v in inst.annulus.nbr[u]


@pytest.mark.parametrize("j", [1, 2, 3])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_synthetic_instances(j, seed):
    inst = synthetic_instance(j, seed=seed)
    res = reroute_indices(inst)
    independent_checks(inst, res.paths, res.gamma_tilde)
    assert check_reroute(inst, res.paths, res.gamma_tilde) == []


@pytest.mark.parametrize("j", [1, 2, 3])
def test_rerouted_windings_add_up_to_one_turn(j):
    inst = synthetic_instance(j, seed=11)
    a = inst.annulus
    res = reroute_indices(inst)
    want = expected_windings(a, inst.deltas)
    base = sum(winding_of_indices(a, d) for d in inst.deltas)
    assert sum(want) - base == pytest.approx(TWO_PI, abs=1e-9)
    got = sum(winding_of_indices(a, p) for p in res.paths)
    assert abs(got - base - TWO_PI) <= 2 * j * ANGULAR_QUANTUM


def test_low_winding_is_a_precondition_error():
    a = build_annulus(2, 9)
    delta = [a.index(Site(q, 0)) for q in range(3, 10)]
    gamma = [a.index(Site(-q, 0)) for q in range(3, 10)]
    with pytest.raises(PreconditionError):
        reroute_indices(RerouteInstance(a, [gamma], [delta]))


def test_overlapping_family_is_rejected():
    inst = synthetic_instance(2, seed=4)
    bad = RerouteInstance(inst.annulus, inst.gammas, [inst.deltas[0], inst.deltas[0]])
    with pytest.raises(RerouteError):
        reroute_indices(bad)


def test_checker_catches_tampering():
    inst = synthetic_instance(2, seed=5)
    res = reroute_indices(inst)
    swapped = [res.paths[1], res.paths[0]]
    assert check_reroute(inst, swapped, res.gamma_tilde)
    shared = [res.paths[0], np.concatenate([res.paths[1][:-1], res.paths[0][-1:]])]
    assert check_reroute(inst, shared, res.gamma_tilde)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_winding_goes_up_by_one_turn(j):
    a, lam, lam2 = synthetic_pair(j, seed=21)
    inc = increase_winding(a, lam, lam2)
    assert inc.steps == j
    gain = inc.windings[-1] - inc.windings[0]
    assert np.all(np.abs(gain - TWO_PI) <= 2 * ANGULAR_QUANTUM)
    steps = inc.step_changes()
    if j == 1:
        assert np.all(steps < TWO_PI + 2 * ANGULAR_QUANTUM)
    else:
        assert np.all(steps < TWO_PI)
    # after j shifts each path is back on its own endpoints
    for p, q in zip(inc.families[-1], lam):
        assert p[0] == q[0] and p[-1] == q[-1]


def test_later_steps_follow_shared_segments():
    a, lam, lam2 = synthetic_pair(3, seed=8)
    inc = increase_winding(a, lam, lam2)
    guide = set(np.concatenate(lam2).tolist())
    # from the first step on the family runs along the guide paths
    assert any(set(p.tolist()) & guide for p in inc.families[1])
    assert inc.steps == 3


def test_increase_requires_a_full_turn_of_room():
    a, lam, _ = synthetic_pair(2, seed=3)
    with pytest.raises(PreconditionError):
        increase_winding(a, lam, lam)


@settings(max_examples=25)
@given(st.integers(1, 3), st.integers(100, 10_000))
def test_reroute_outputs_always_check(j, seed):
    inst = synthetic_instance(j, seed=seed)
    res = reroute_indices(inst)
    independent_checks(inst, res.paths, res.gamma_tilde)
    assert check_reroute(inst, res.paths, res.gamma_tilde) == []
