"""Exception types raised by the toolkit.

Every domain error carries a ``payload`` dict so the CLI can render it as
JSON on stderr without knowing the concrete type.
"""


class ExactCtlError(Exception):
    """Base class for all domain errors."""

    def __init__(self, message, **payload):
        super().__init__(message)
        self.payload = payload

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        out.update(self.payload)
        return out


class DimensionMismatch(ExactCtlError, ValueError):
    pass


class MisalignedTime(ExactCtlError, ValueError):
    """Shift semigroup evaluated at a time that is not a multiple of the cell width."""


class OffGridTime(ExactCtlError, ValueError):
    """A time argument does not fall on the time grid."""


class KinkProximity(ExactCtlError, ValueError):
    """Evaluation point too close to the control onset of the shift model."""


class DegeneratePair(ExactCtlError, ValueError):
    pass


class DegenerateSet(ExactCtlError, ValueError):
    pass


class ZeroScale(ExactCtlError, ValueError):
    pass


class InnerNonConvergent(ExactCtlError, RuntimeError):
    """The per-step implicit correction in the mild-solution marcher stalled."""


class ImplicitStageNonConvergent(ExactCtlError, RuntimeError):
    """The implicit midpoint stage of the splitting IVP solver failed."""


class NotControllable(ExactCtlError, RuntimeError):
    """Gramian too ill-conditioned (or singular) at this discretization."""


class NonConvergent(ExactCtlError, RuntimeError):
    """The steering fixed-point loop did not converge."""


class ConfigInvalid(ExactCtlError, ValueError):
    """Configuration failed validation; ``payload['fields']`` maps field to message."""
