"""Reachability and steering for self-propelled particle swarms of Vicsek type."""

from .dynamics import (
    DegenerateMeanError,
    InadmissibleControl,
    Open,
    Periodic,
    SimConfig,
    StepInput,
    SwarmState,
    SystemKind,
    local_mean_headings,
    neighbor_matrix,
    random_state,
    step,
    wrap_heading,
)
from .metrics import (
    Connectivity,
    covering_arc,
    heading_span,
    interaction_graph,
    order_parameter,
    window_union_connected,
)
from .noise import GaussianIID, NoiseStream, TruncatedGaussianIID, UniformIID

# load the compiled kernels up front so the first simulated step does not pay for it
from . import _kernels  # noqa: E402,F401

__version__ = "0.1.0"
