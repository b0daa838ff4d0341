"""Bounds, maps and branch-and-bound for maximum-entropy sampling and D-optimal design."""

from .errors import (
    DegenerateInstance,
    EntoptError,
    Infeasible,
    NotDataFusion,
    NotPositiveDefinite,
    NumericError,
    SingularBlock,
    TooLarge,
    ValidationError,
)
from .instances import (
    DOptInstance,
    MespInstance,
    brute_force,
    complement_mesp,
    eval_dopt,
    eval_mesp,
    map_d,
    map_f,
    map_m,
    map_p,
    scale_mesp,
)

__version__ = "0.1.0"
