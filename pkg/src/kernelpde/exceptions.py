"""Exception types raised across the package."""


class SmoothnessError(ValueError):
    """A derivative was requested beyond the smoothness of a kernel."""


class ConfigurationError(ValueError):
    """Unsupported or inconsistent parameters."""


class SingularNodesError(ValueError):
    """Kernel nodes are not pairwise distinct, so the moment system is singular."""


class BlowUpError(RuntimeError):
    """A time integration produced non-finite coefficients.

    Attributes
    ----------
    time : float
        Time of the last finite state.
    step : int
        Number of completed steps before the failure.
    last_state : object
        The last finite coefficient field.
    """

    def __init__(self, message, time, step, last_state=None):
        super().__init__(f"{message} (t={time:.6g}, step={step})")
        self.time = time
        self.step = step
        self.last_state = last_state


class FitError(RuntimeError):
    """The error-model fit could not be carried out."""
