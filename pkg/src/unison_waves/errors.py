"""Exception hierarchy shared by all modules."""


class UnisonError(Exception):
    """Base class for every error raised by the package."""


class GraphError(UnisonError):
    pass


class Disconnected(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class BadIndex(GraphError):
    pass


class TooLarge(UnisonError):
    """An exhaustive routine was asked to handle an instance beyond its limit."""


class OutOfDomain(UnisonError):
    pass


class NotLocallyComparable(UnisonError):
    def __init__(self, a, b, index=None):
        self.a, self.b, self.index = a, b, index
        where = "" if index is None else f" at index {index}"
        super().__init__(f"values {a} and {b} are not locally comparable{where}")


class ParamError(UnisonError):
    pass


class NotEnabled(UnisonError):
    def __init__(self, process):
        self.process = process
        super().__init__(f"process {process} is not enabled")


class EmptyChoice(UnisonError):
    pass


class ReplayMismatch(UnisonError):
    pass


class Deadlock(UnisonError):
    """No process is enabled. Carries the offending configuration."""

    def __init__(self, configuration, execution=None):
        self.configuration = configuration
        self.execution = execution
        super().__init__(f"deadlock: no enabled process in {list(configuration.clocks)}")


class NotWU0(UnisonError):
    pass


class Incomplete(UnisonError):
    def __init__(self, k, detail=""):
        self.k = k
        super().__init__(f"cut C_{k} is not complete in this execution{detail}")


class Truncated(UnisonError):
    """An exponential enumeration hit its configured bound."""


class DeltaTooSmall(ParamError):
    pass


class MissingTask(UnisonError):
    pass


class ConfigError(UnisonError):
    pass
