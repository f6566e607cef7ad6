"""Collision-cone barrier safety filtering for a 3D fixed-wing kinematic model.

Library layout:

- ``dynamics``: the kinematic aircraft model and RK4 integration
- ``barriers``: collision-cone, backstepped and distance barrier evaluations
- ``safety_filter``: closed-form minimally invasive filter and a QP oracle
- ``nominal``: reference trajectories and the tracking controller
- ``scenario``: YAML scenario schema, defaults and overrides
- ``engine``: closed-loop episode runner, metrics, comparisons
- ``report``: CSV/metrics writers and figure rendering
- ``cli``: the ``coneguard`` command-line front end
"""

from .barriers import (
    BacksteppingConfig,
    BarrierEval,
    CollisionGeometry,
    Obstacle,
    RelativeKinematics,
    backstepped_cone_eval,
    collision_cone_eval,
    collision_cone_value,
    desired_turn_rate,
    distance_barrier_eval,
    relative_kinematics,
)
from .dynamics import (
    DEFAULT_GRAVITY,
    AircraftState,
    ControlInput,
    StateDerivative,
    aircraft_acceleration,
    control_matrix,
    coordinated_turn_rate,
    drift,
    inertial_velocity,
    state_derivative,
    step_rk4,
)
from .engine import (
    ComparisonReport,
    EpisodeMetrics,
    TrajectoryLog,
    compare,
    first_activation_time,
    run_episode,
    summarize,
)
from .errors import (
    ConeguardError,
    ConfigError,
    ConfigMismatch,
    DegenerateVelocity,
    DomainError,
    Infeasible,
    InsideCollisionRadius,
    OutOfHorizon,
)
from .nominal import (
    ReferenceSample,
    StraightTrajectory,
    TrackingGains,
    TurnTrajectory,
    reference_eval,
    track,
)
from .safety_filter import (
    ClassKappa,
    FilterOutput,
    compose_obstacles,
    constraint_margin,
    filter_control,
    qp_reference_solve,
)
from .scenario import ScenarioConfig, load_scenario

__version__ = "0.1.0"
