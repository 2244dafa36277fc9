"""Exception hierarchy shared by the solvers and the CLI."""


class OrigamiHapticsError(Exception):
    """Base class for all package errors."""


class ConfigError(OrigamiHapticsError, ValueError):
    """A mechanism, scene or trajectory description failed validation."""


class KinematicsError(OrigamiHapticsError):
    """A mathematically infeasible kinematic query."""


class Infeasible(KinematicsError):
    pass


class JointLimit(KinematicsError):
    pass


class Singular(KinematicsError):
    pass


class NoConvergence(KinematicsError):
    pass


class NoRealRoot(KinematicsError):
    pass


class DegenerateLinearSystem(KinematicsError):
    pass


class SingularConfiguration(KinematicsError):
    pass


class FreeDirection(KinematicsError):
    """The requested wrench direction costs no joint torque."""


class NoSuchRegion(KinematicsError):
    pass


class NonMonotoneTime(ConfigError):
    pass
