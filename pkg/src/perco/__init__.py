"""Arm events, winding angles and correlation inequalities for critical site
percolation on the triangular lattice."""

from .arms import (
    ArmQuery,
    ArmWitness,
    SigmaClass,
    crossing_clusters,
    detect,
    has_one_arm,
    max_disjoint_arms,
    min_black_on_circuit,
)
from .lattice import Annulus, GeometryError, Site, build_annulus, min_inner_radius
from .sample import BLACK, WHITE, SeedSpec, SiteConfig, flip_config, sample_config
from .winding import (
    LatticePath,
    WindingSetEstimate,
    complete_interval,
    single_arm_winding_sheets,
    winding_angle,
)

__version__ = "0.1.0"
