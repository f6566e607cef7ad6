"""Exception types shared across the library."""


class ConeguardError(Exception):
    """Base class for all library errors."""


class DomainError(ConeguardError):
    """A kinematic quantity left the model's valid domain (speed or pitch guard)."""


class InsideCollisionRadius(ConeguardError):
    """Relative distance is at or inside the combined collision radius.

    Raised by barrier evaluations; the episode that triggers it has already
    violated the safe set and must be recorded as a collision.
    """

    def __init__(self, separation: float, radius: float):
        super().__init__(f"separation {separation:.3f} m <= collision radius {radius:.3f} m")
        self.separation = separation
        self.radius = radius


class DegenerateVelocity(ConeguardError):
    """Relative speed too small for the collision cone to be defined."""


class Infeasible(ConeguardError):
    """The single-constraint QP has no solution (zero gradient, violated constraint)."""


class OutOfHorizon(ConeguardError):
    """Reference trajectory sampled outside its time horizon."""


class ConfigError(ConeguardError):
    """Scenario configuration is malformed or violates an invariant."""


class ConfigMismatch(ConfigError):
    """Configs handed to a comparison do not share trajectory, obstacles and dt."""
