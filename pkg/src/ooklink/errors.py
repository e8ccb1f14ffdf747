"""Exception hierarchy shared by every stage of the link simulator."""


class LinkSimError(Exception):
    """Base class; ``stage`` names the pipeline stage that failed, when known."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigurationError(LinkSimError, ValueError):
    """Invalid parameters, out-of-range settings or malformed config text."""


class TimingFailure(LinkSimError):
    """Clock recovery found no usable symbol-rate tone."""


class DivergenceError(LinkSimError):
    """LMS adaptation blew up; retry with a smaller step size."""


class UndefinedMetricError(LinkSimError, ValueError):
    """A metric was requested on data that cannot define it."""


class FormatError(LinkSimError):
    """Malformed or truncated waveform container."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
