"""Exception taxonomy shared across the package."""


class StarMecError(Exception):
    """Base class for all package errors."""


class StructuralError(StarMecError):
    """Array shapes or index ranges do not match the declared layout."""


class SingularGeometryError(StarMecError):
    """A link distance is zero or negative, so no channel exists."""


class DegenerateChannelError(StarMecError):
    """A channel entry has zero modulus; phase alignment is undefined."""


class InfeasibleKinematicsError(StarMecError):
    """Requested trajectory cannot satisfy the speed/acceleration limits."""


class NonConvexProgramError(StarMecError):
    """Program failed the disciplined-convexity check at build time."""


class QosInfeasibleError(StarMecError):
    """Minimum task demands cannot be met by any allocation.

    `deficits` maps user index (0-based) to the estimated shortfall in bits.
    """

    def __init__(self, message, deficits=None):
        super().__init__(message)
        self.deficits = dict(deficits or {})


class SchemaError(StarMecError):
    """A CSV/JSON artifact carries an unknown or mismatched schema version."""
