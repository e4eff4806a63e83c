"""
Rescircuit - Exceptions
Domain error hierarchy shared by services and the command line.
"""


class RescircuitError(Exception):
    """Base class for every error raised by this package"""


class ParamOutOfRange(RescircuitError, ValueError):
    """A numeric parameter violates an operation precondition"""


class InvalidNetwork(RescircuitError, ValueError):
    """A resistor network violates its structural invariants"""


class NetworkFormatError(RescircuitError, ValueError):
    """A network file could not be parsed"""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SameTerminalClass(RescircuitError):
    """Both terminal sets collapsed into one zero-resistance class"""


class SingularSystem(RescircuitError):
    """The Kirchhoff or absorbing-chain system could not be solved to tolerance"""


class IsolatedState(RescircuitError):
    """A class has no finite-resistance incident edge, so its transition row is undefined"""

    def __init__(self, state: int):
        self.state = state
        super().__init__(f"class {state} has no conducting incident edge")


class NoDescendants(RescircuitError):
    """A node has no descendants at the requested generation"""

    def __init__(self, node: int, generation: int):
        self.node = node
        self.generation = generation
        super().__init__(f"node {node} has no descendants at generation {generation}")


class TreeTruncatedBeforeN(RescircuitError):
    """The node cap censored the tree before the requested generation"""

    def __init__(self, requested: int, complete_depth: int):
        self.requested = requested
        self.complete_depth = complete_depth
        super().__init__(
            f"generation {requested} requested but only generations <= {complete_depth} are complete"
        )


class EmptyLaw(RescircuitError, ValueError):
    """An empirical law without any sample was used in a comparison"""


class TrialFailed(RescircuitError):
    """A single Monte Carlo trial raised; carries the trial index"""

    def __init__(self, trial_index: int, cause: BaseException):
        self.trial_index = trial_index
        self.cause = cause
        super().__init__(f"trial {trial_index} failed: {cause}")

    def __reduce__(self):
        # raised inside pool workers, so it must survive pickling
        return (type(self), (self.trial_index, self.cause))


class UsageError(RescircuitError):
    """Invalid command line usage"""
