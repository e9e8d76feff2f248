"""Exception types shared across the package."""


class GraphBOError(Exception):
    """Base class for package-specific errors."""


class IllConditionedError(GraphBOError):
    """Gram matrix could not be factorized even after the jitter escalation."""


class DegenerateGraphError(GraphBOError):
    """A graph has a zero self-kernel and cannot be normalized."""


class GraphParseError(GraphBOError):
    """Malformed graph file. Carries the offending path and line number."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc = f" ({loc})"
        super().__init__(f"{message}{loc}")
        self.path = path
        self.line = line


class TNTPParseError(GraphParseError):
    """Malformed TNTP network or trips file."""


class InfeasibleNetworkError(GraphBOError):
    """An origin-destination pair with positive demand is disconnected."""

    def __init__(self, origin, destination):
        super().__init__(
            f"no path from origin {origin} to destination {destination} "
            f"with positive demand"
        )
        self.origin = origin
        self.destination = destination


class FittingError(GraphBOError):
    """Hyperparameter estimation failed on every grid point."""
