"""Reproducible site configurations on an annulus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Annulus
from .rng import fill_all, to_u64

BLACK = 1
WHITE = 0


@dataclass(frozen=True)
class SeedSpec:
    """Master seed and stream index; together they fix a configuration."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        to_u64(self.seed)
        to_u64(self.stream)

    def key(self):
        return np.uint64(self.seed), np.uint64(self.stream)

    def with_stream(self, stream: int) -> SeedSpec:
        return SeedSpec(self.seed, stream)

    def __str__(self) -> str:
        return f"{self.seed} {self.stream}"

    @classmethod
    def parse(cls, text: str) -> SeedSpec:
        a, b = text.split()
        return cls(int(a), int(b))


@dataclass(eq=False)
class SiteConfig:
    """One colour bit per annulus site (1 = black), in annulus site order."""

    annulus: Annulus
    colors: np.ndarray

    def __post_init__(self):
        self.colors = np.ascontiguousarray(self.colors, dtype=np.uint8)
        if self.colors.shape != (self.annulus.size,):
            raise ValueError(
                f"expected {self.annulus.size} colours, got shape {self.colors.shape}"
            )

    def __eq__(self, other):
        if not isinstance(other, SiteConfig):
            return NotImplemented
        return self.annulus is other.annulus and np.array_equal(self.colors, other.colors)

    def color_of(self, s) -> int:
        return int(self.colors[self.annulus.index(s)])

    def black_fraction(self) -> float:
        return float(self.colors.mean())

    @classmethod
    def uniform(cls, a: Annulus, color: int) -> SiteConfig:
        return cls(a, np.full(a.size, color, dtype=np.uint8))

    @classmethod
    def from_black(cls, a: Annulus, black_indices) -> SiteConfig:
        col = np.zeros(a.size, dtype=np.uint8)
        col[np.asarray(list(black_indices), dtype=np.int64)] = 1
        return cls(a, col)


def check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return p


def sample_config(a: Annulus, p: float, seed: SeedSpec) -> SiteConfig:
    """Colour each site black independently with probability ``p``."""
    p = check_probability(p)
    k0, k1 = seed.key()
    return SiteConfig(a, fill_all(a.size, k0, k1, p))


def flip_config(c: SiteConfig) -> SiteConfig:
    return SiteConfig(c.annulus, 1 - c.colors)
