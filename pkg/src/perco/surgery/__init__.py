"""Spiral witnesses and the rerouting construction on arm families."""

from .frame import FrameError, SectorFrame
from .reroute import (
    ANGULAR_QUANTUM,
    PreconditionError,
    RerouteError,
    RerouteFailure,
    RerouteInstance,
    RerouteResult,
    StepError,
    WindingIncrease,
    check_reroute,
    expected_windings,
    increase_winding,
    relative_windings,
    reroute,
    reroute_indices,
)
from .synthetic import synthetic_instance, synthetic_pair
from .spiral import (
    SpiralWitness,
    active_points,
    count_disjoint_spirals,
    dyadic_radii,
    find_spiral,
    spiral_problems,
    spiral_witnesses,
    verify_spiral,
)
