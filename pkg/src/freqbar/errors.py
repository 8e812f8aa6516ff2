class FreqbarError(Exception):
    """Base error; ``module`` names the subsystem that raised it."""

    module = "freqbar"

    def __str__(self):
        return f"{self.module}: {super().__str__()}"


class TableError(FreqbarError, ValueError):
    module = "device"


class RangeError(FreqbarError, ValueError):
    """Query outside the representable interval ``(lo, hi)``."""

    module = "device"

    def __init__(self, message, interval=None, module=None):
        super().__init__(message)
        self.interval = interval
        if module is not None:
            self.module = module


class BranchError(FreqbarError, ValueError):
    module = "device"


class ScheduleError(FreqbarError, ValueError):
    module = "waveform"


class AmplitudeError(ScheduleError):
    pass


class CompileError(FreqbarError, ValueError):
    module = "compiler"


class CrossbarError(FreqbarError, ValueError):
    module = "crossbar"


class DecodeError(CrossbarError):
    pass


class PipelineError(FreqbarError, ValueError):
    module = "pipeline"


class FormatError(FreqbarError, ValueError):
    module = "io"
