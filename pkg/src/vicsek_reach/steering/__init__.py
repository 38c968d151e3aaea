"""Open-loop control plans for the two Vicsek systems and a replay harness."""

from .base import (
    ADVERSARIES,
    IDENTITY,
    Adversary,
    ControlPlan,
    Disordered,
    EndpointAdversary,
    FixedSignAdversary,
    Frame,
    HeadingBand,
    Ordered,
    OrderBox,
    Partition,
    Phase,
    PlanContext,
    RandomAdversary,
    RegimeViolation,
    ReplayResult,
    ScriptAdversary,
    SpanAtLeast,
    SpanBelow,
    TargetSet,
    ZeroAdversary,
    bounded,
    compose,
    horizon,
    make_adversary,
    partition_by_ordinate,
    replay,
)
from .choreography import (
    BifurcateThenMerge,
    Turn,
    Vortex,
    cumulative_rotation,
    plan_choreography,
    turn_horizon,
)
from .connectivity import plan_break_connectivity
from .disorder import ETA_CAP, effective_eta, plan_disorder
from .order import order_horizon_ii, plan_order, system_i_constants
from .periodic import disorder_threshold, span_threshold
from .span import plan_span_at_least_pi
