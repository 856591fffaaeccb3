# src/udw_wavepacket/errors.py
#
# Exception hierarchy shared by every module of the package.
# Validation failures are also ValueErrors and numerical failures are also
# RuntimeErrors, so callers can keep catching the builtin types.

from typing import Optional


class UdwError(Exception):
    """Base class for all errors raised by udw_wavepacket."""


class DeltaNotEvaluable(UdwError, ValueError):
    """A Delta profile is a distribution and has no pointwise value."""


class DeltaNotModulable(UdwError, ValueError):
    """A Delta profile cannot carry a spatial modulation."""


class NestedModulation(UdwError, ValueError):
    """The envelope of a modulated profile is itself modulated."""


class GridMismatch(UdwError, ValueError):
    """Two wavefunctions are sampled on different grids."""


class IRCutoffRequired(UdwError, ValueError):
    """A momentum grid reaches below the infrared cutoff."""


class ZeroMomentum(UdwError, ValueError):
    """A photon momentum p = 0 was passed where 1/p appears."""


class ZeroWavenumber(UdwError, ValueError):
    """A field wavenumber k = 0 was passed where 1/|k| appears."""


class HorizonCrossing(UdwError, ValueError):
    """A Fermi-Walker point lies on or beyond the Rindler horizon."""


class PreconditionViolated(UdwError, ValueError):
    """Inputs do not satisfy the preconditions of a simplified formula."""


class ConfigError(UdwError, ValueError):
    """A scenario field is missing, malformed or out of range."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


class QuadratureFailure(UdwError, RuntimeError):
    """An integral did not reach its tolerance within the panel budget."""

    def __init__(
        self,
        message: str,
        worst_panel: Optional[tuple] = None,
        worst_error: Optional[float] = None,
    ) -> None:
        self.worst_panel = worst_panel
        self.worst_error = worst_error
        if worst_panel is not None:
            message = f"{message} (worst panel {worst_panel}, error {worst_error:.3e})"
        super().__init__(message)


class NegativeBeyondTolerance(UdwError, RuntimeError):
    """A probability came out negative by more than its error allows."""
