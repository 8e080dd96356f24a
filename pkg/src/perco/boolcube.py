"""Exact correlation inequalities on small hypercubes.

An event on ``{0,1}^n`` is stored as its membership vector over all ``2^n``
configurations; configuration ``x`` has coordinate ``i`` equal to bit ``i`` of
``x``.  Counting measure is used throughout, so probabilities at ``p = 1/2``
are cardinalities divided by ``2^n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_DIM = 20
MAX_OCCURRENCE_DIM = 14


class CubeError(ValueError):
    pass


class CapacityError(CubeError):
    pass


class MonotonicityError(CubeError):
    """An event expected to be monotone is not; names a violating edge."""


@dataclass(frozen=True, eq=False)
class CubeEvent:
    n: int
    members: np.ndarray

    def __post_init__(self):
        if not 0 <= self.n <= MAX_DIM:
            raise CapacityError(f"dimension {self.n} exceeds the cap of {MAX_DIM}")
        m = np.asarray(self.members, dtype=bool)
        if m.shape != (1 << self.n,):
            raise CubeError(f"membership vector must have length {1 << self.n}, got {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "members", m)

    @classmethod
    def full(cls, n: int) -> CubeEvent:
        return cls(n, np.ones(1 << n, dtype=bool))

    @classmethod
    def empty(cls, n: int) -> CubeEvent:
        return cls(n, np.zeros(1 << n, dtype=bool))

    @classmethod
    def from_configs(cls, n: int, configs) -> CubeEvent:
        m = np.zeros(1 << n, dtype=bool)
        for x in configs:
            m[_as_int(x)] = True
        return cls(n, m)

    @classmethod
    def from_predicate(cls, n: int, pred) -> CubeEvent:
        bits = _bits(n)
        return cls(n, np.array([bool(pred(row)) for row in bits], dtype=bool))

    @classmethod
    def coordinate(cls, n: int, i: int, value: int = 1) -> CubeEvent:
        """The cylinder ``{x : x_i = value}``."""
        x = np.arange(1 << n)
        return cls(n, ((x >> i) & 1) == value)

    @classmethod
    def from_hex(cls, n: int, text: str) -> CubeEvent:
        """Bit ``x`` of the hex number is the membership of configuration ``x``."""
        value = int(text.strip().lower().removeprefix("0x") or "0", 16)
        size = 1 << n
        if value >> size:
            raise CubeError(f"hex string has bits beyond 2^{n} configurations")
        x = np.arange(size, dtype=object)
        return cls(n, np.array([(value >> int(k)) & 1 for k in x], dtype=bool))

    def to_hex(self) -> str:
        value = 0
        for k in np.flatnonzero(self.members)[::-1]:
            value |= 1 << int(k)
        width = max(1, ((1 << self.n) + 3) // 4)
        return format(value, f"0{width}x")

    def __len__(self) -> int:
        return int(self.members.sum())

    def __contains__(self, x) -> bool:
        return bool(self.members[_as_int(x)])

    def __eq__(self, other):
        if not isinstance(other, CubeEvent):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.members, other.members)

    def __hash__(self):
        return hash((self.n, self.members.tobytes()))

    def __and__(self, other: CubeEvent) -> CubeEvent:
        _same_dim(self, other)
        return CubeEvent(self.n, self.members & other.members)

    def __or__(self, other: CubeEvent) -> CubeEvent:
        _same_dim(self, other)
        return CubeEvent(self.n, self.members | other.members)

    def __invert__(self) -> CubeEvent:
        return CubeEvent(self.n, ~self.members)

    def __le__(self, other: CubeEvent) -> bool:
        _same_dim(self, other)
        return bool(np.all(~self.members | other.members))

    def configs(self) -> list[tuple[int, ...]]:
        return [tuple((int(x) >> i) & 1 for i in range(self.n)) for x in np.flatnonzero(self.members)]


def _as_int(x) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    return sum(int(b) << i for i, b in enumerate(x))


def _bits(n: int) -> np.ndarray:
    x = np.arange(1 << n)
    return ((x[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)


def _same_dim(a: CubeEvent, b: CubeEvent):
    if a.n != b.n:
        raise CubeError(f"dimension mismatch: {a.n} vs {b.n}")


def flip_event(a: CubeEvent) -> CubeEvent:
    """Image under ``x -> 1 - x`` (bitwise complement of every configuration)."""
    full = (1 << a.n) - 1
    return CubeEvent(a.n, a.members[full ^ np.arange(1 << a.n)])


_SWAP_MASKS = [
    np.uint64(0x5555555555555555),
    np.uint64(0x3333333333333333),
    np.uint64(0x0F0F0F0F0F0F0F0F),
    np.uint64(0x00FF00FF00FF00FF),
    np.uint64(0x0000FFFF0000FFFF),
    np.uint64(0x00000000FFFFFFFF),
]


def _pack(members: np.ndarray) -> np.ndarray:
    words = max(1, len(members) // 64)
    padded = np.zeros(words * 64, dtype=np.uint8)
    padded[: len(members)] = members
    return np.packbits(padded.reshape(words, 64), axis=1, bitorder="little").view(np.uint64).ravel()


def _unpack(words: np.ndarray, size: int) -> np.ndarray:
    raw = np.unpackbits(words.view(np.uint8), bitorder="little")
    return raw[:size].astype(bool)


def _xor_shift(v: np.ndarray, i: int) -> np.ndarray:
    """Packed vector ``y -> v[y ^ 2**i]``."""
    if i >= 6:
        idx = np.arange(v.shape[-1]) ^ (1 << (i - 6))
        return v[..., idx]
    mask = _SWAP_MASKS[i]
    sh = np.uint64(1 << i)
    return ((v >> sh) & mask) | ((v & mask) << sh)


def _forced_tables(members: np.ndarray) -> np.ndarray:
    """Packed forced tables for a batch of events, shape ``(B, 2^n, words)``.

    Row ``S`` has bit ``x`` set iff every configuration agreeing with ``x``
    on ``S`` lies in the event.  Built from ``S = everything`` downwards:
    dropping coordinate ``i`` from ``S`` requires both values of ``x_i`` to
    be forced.
    """
    members = np.atleast_2d(members)
    size = members.shape[1]
    full = size - 1
    base = np.stack([_pack(m) for m in members])
    table = np.empty((members.shape[0], size, base.shape[1]), dtype=np.uint64)
    table[:, full] = base
    for s in range(full - 1, -1, -1):
        free = full & ~s
        i = (free & -free).bit_length() - 1
        parent = table[:, s | (1 << i)]
        table[:, s] = parent & _xor_shift(parent, i)
    return table


def forced_table(a: CubeEvent) -> np.ndarray:
    return _forced_tables(a.members[None, :])[0]


def _check_capacity(n: int):
    if n > MAX_OCCURRENCE_DIM:
        raise CapacityError(
            f"exhaustive witness search is capped at n = {MAX_OCCURRENCE_DIM}, got {n}"
        )


def disjoint_occurrence(a: CubeEvent, b: CubeEvent) -> CubeEvent:
    """``{x : for some S, [x]_S inside a and [x]_{S^c} inside b}``, exactly."""
    _same_dim(a, b)
    _check_capacity(a.n)
    ta = forced_table(a)
    tb = forced_table(b)
    # row S of ta pairs with row (complement of S) of tb, i.e. tb reversed
    out = np.bitwise_or.reduce(ta & tb[::-1], axis=0)
    return CubeEvent(a.n, _unpack(out, 1 << a.n))


def occurrence_counts(a_members: np.ndarray, b_members: np.ndarray) -> np.ndarray:
    """``|A_k o B_k|`` for a batch of event pairs given as ``(B, 2^n)`` arrays."""
    a_members = np.atleast_2d(np.asarray(a_members, dtype=bool))
    b_members = np.atleast_2d(np.asarray(b_members, dtype=bool))
    if a_members.shape != b_members.shape:
        raise CubeError(f"batch shapes differ: {a_members.shape} vs {b_members.shape}")
    n = a_members.shape[1].bit_length() - 1
    _check_capacity(n)
    ta = _forced_tables(a_members)
    tb = _forced_tables(b_members)
    occ = np.bitwise_or.reduce(ta & tb[:, ::-1], axis=1)
    bits = np.unpackbits(occ.view(np.uint8), axis=1, bitorder="little")[:, : 1 << n]
    return bits.sum(axis=1).astype(np.int64)


def reimer_counts(a_members: np.ndarray, b_members: np.ndarray):
    """Batch ``(|A o B|, |A & flip(B)|, |flip(A) & B|)``."""
    a_members = np.atleast_2d(np.asarray(a_members, dtype=bool))
    b_members = np.atleast_2d(np.asarray(b_members, dtype=bool))
    size = a_members.shape[1]
    rev = (size - 1) ^ np.arange(size)
    lhs = occurrence_counts(a_members, b_members)
    rhs = (a_members & b_members[:, rev]).sum(axis=1)
    mirror = (a_members[:, rev] & b_members).sum(axis=1)
    return lhs, rhs, mirror


def occurrence_witness(a: CubeEvent, b: CubeEvent, x) -> tuple[int, ...] | None:
    """First witness set ``S`` in lexicographic order, or None."""
    _same_dim(a, b)
    n = a.n
    x = _as_int(x)
    subsets = sorted(
        (c for k in range(n + 1) for c in itertools.combinations(range(n), k))
    )
    for s in subsets:
        mask = sum(1 << i for i in s)
        if _forced(a, x, mask) and _forced(b, x, ((1 << n) - 1) & ~mask):
            return s
    return None


def _forced(a: CubeEvent, x: int, mask: int) -> bool:
    free = [i for i in range(a.n) if not (mask >> i) & 1]
    base = x & mask
    for bits in range(1 << len(free)):
        y = base
        for t, i in enumerate(free):
            if (bits >> t) & 1:
                y |= 1 << i
        if not a.members[y]:
            return False
    return True


@dataclass(frozen=True)
class InequalityRecord:
    lhs: int
    rhs: int
    holds: bool

    @property
    def equality(self) -> bool:
        return self.lhs == self.rhs


def check_reimer(a: CubeEvent, b: CubeEvent) -> InequalityRecord:
    """``|a o b| <= |a & flip(b)|``; also checks ``|a & flip(b)| = |flip(a) & b|``."""
    occ = len(disjoint_occurrence(a, b))
    rhs = len(a & flip_event(b))
    mirror = len(flip_event(a) & b)
    if rhs != mirror:
        raise AssertionError(f"flip is not a bijection here: {rhs} != {mirror}")
    return InequalityRecord(occ, rhs, occ <= rhs)


def check_bk(a: CubeEvent, b: CubeEvent) -> InequalityRecord:
    """``P(a o b) <= P(a) P(b)`` in integers: ``2^n |a o b| <= |a| |b|``."""
    occ = len(disjoint_occurrence(a, b))
    lhs = (1 << a.n) * occ
    rhs = len(a) * len(b)
    return InequalityRecord(lhs, rhs, lhs <= rhs)


def monotone_violation(a: CubeEvent, increasing: bool = True) -> tuple[int, int] | None:
    """An edge ``(x, i)`` with ``x_i = 0`` breaking monotonicity, or None."""
    x = np.arange(1 << a.n)
    for i in range(a.n):
        low = x[((x >> i) & 1) == 0]
        lo, hi = a.members[low], a.members[low | (1 << i)]
        bad = lo & ~hi if increasing else hi & ~lo
        if bad.any():
            return int(low[np.argmax(bad)]), i
    return None


def is_increasing(a: CubeEvent) -> bool:
    return monotone_violation(a, True) is None


def is_decreasing(a: CubeEvent) -> bool:
    return monotone_violation(a, False) is None


def check_harris(a: CubeEvent, b: CubeEvent) -> InequalityRecord:
    """For ``a`` increasing and ``b`` decreasing: ``2^n |a & b| <= |a| |b|``."""
    _same_dim(a, b)
    for ev, inc, name in ((a, True, "first"), (b, False, "second")):
        bad = monotone_violation(ev, inc)
        if bad is not None:
            x, i = bad
            kind = "increasing" if inc else "decreasing"
            raise MonotonicityError(
                f"{name} event is not {kind}: edge at configuration {x:0{a.n}b}"
                f" (bit string, coordinate 0 rightmost) along coordinate {i}"
            )
    lhs = (1 << a.n) * len(a & b)
    rhs = len(a) * len(b)
    return InequalityRecord(lhs, rhs, lhs <= rhs)


def up_closure(a: CubeEvent) -> CubeEvent:
    m = a.members.copy()
    x = np.arange(1 << a.n)
    for i in range(a.n):
        up = ((x >> i) & 1) == 1
        m[up] |= m[x[up] ^ (1 << i)]
    return CubeEvent(a.n, m)


def random_event(n: int, rng: np.random.Generator, density: float = 0.5) -> CubeEvent:
    return CubeEvent(n, rng.random(1 << n) < density)


def random_increasing(n: int, rng: np.random.Generator, generators: int | None = None) -> CubeEvent:
    """Up-closure of a few random configurations."""
    k = int(rng.integers(0, 1 << min(n, 4))) if generators is None else generators
    seeds = rng.integers(0, 1 << n, size=k)
    return up_closure(CubeEvent.from_configs(n, seeds.tolist()))


def random_decreasing(n: int, rng: np.random.Generator, generators: int | None = None) -> CubeEvent:
    return flip_event(random_increasing(n, rng, generators))


def all_events(n: int):
    """Every event on ``{0,1}^n``; only sensible for ``n <= 3``."""
    size = 1 << n
    bits = np.arange(size)
    for code in range(1 << size):
        yield CubeEvent(n, ((code >> bits) & 1).astype(bool))


def all_occurrences(n: int) -> np.ndarray:
    """Membership of ``A o B`` for every pair of events, as ``(E, E, 2^n)``.

    Index ``e`` is the event whose membership bits spell ``e``.  Used for
    exhaustive sweeps at ``n <= 3``.
    """
    if n > 3:
        raise CapacityError("exhaustive pair sweeps are limited to n <= 3")
    tables = _forced_tables(np.array([e.members for e in all_events(n)]))[:, :, 0]  # (E, S)
    occ = np.bitwise_or.reduce(tables[:, None, :] & tables[None, :, ::-1], axis=2)
    bits = np.arange(1 << n, dtype=np.uint64)
    return ((occ[..., None] >> bits) & np.uint64(1)).astype(bool)


__all__ = [
    "CapacityError",
    "CubeError",
    "CubeEvent",
    "InequalityRecord",
    "MonotonicityError",
    "all_events",
    "all_occurrences",
    "check_bk",
    "check_harris",
    "check_reimer",
    "disjoint_occurrence",
    "flip_event",
    "forced_table",
    "is_decreasing",
    "is_increasing",
    "monotone_violation",
    "occurrence_counts",
    "occurrence_witness",
    "random_decreasing",
    "random_event",
    "random_increasing",
    "reimer_counts",
    "up_closure",
]
