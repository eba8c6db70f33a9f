"""Exception hierarchy shared by the simulator, algorithms and oracles."""


class CongestError(Exception):
    """Base class for every error raised by this package."""


class GraphError(CongestError, ValueError):
    """Malformed, disconnected or otherwise invalid graph input."""


class GraphParseError(GraphError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class GenerationError(GraphError):
    """Random generation could not produce a connected graph."""


class InvalidTerminalSet(CongestError, ValueError):
    pass


class SimulationError(CongestError):
    """The round engine detected a violation of the CONGEST contract."""


class ProtocolViolation(SimulationError):
    pass


class BandwidthViolation(SimulationError):
    pass


class StructuralError(CongestError, ValueError):
    """A parent mapping that is not a spanning tree."""


class CorrectnessViolation(CongestError):
    """A distributed algorithm finished with an output it must never produce."""


class ScheduleViolation(CorrectnessViolation):
    pass


class SamplingFailure(CongestError):
    pass


class OracleBudgetExceeded(CongestError):
    pass
