"""Exception hierarchy. Every module raises a subclass of DetbenchError."""


class DetbenchError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(DetbenchError):
    """Dataset failed validation or could not be loaded."""


class LabelParseError(DatasetError):
    """Malformed YOLO label line; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int, path=None):
        self.line_number = line_number
        self.path = path
        where = f"{path}:{line_number}" if path else f"line {line_number}"
        super().__init__(f"{where}: {message}")


class AugmentError(DetbenchError):
    """Invalid augmentation parameters or buffers."""


class GeometryError(DetbenchError):
    """Invalid letterbox geometry."""


class PostprocessError(DetbenchError):
    """Invalid postprocessing input."""


class MetricsError(DetbenchError):
    """Invalid evaluation input."""


class BenchError(DetbenchError):
    """Benchmark run failed; carries backend diagnostics when available."""

    def __init__(self, message: str, stderr: str | None = None):
        self.stderr = stderr
        if stderr:
            message = f"{message}\nbackend stderr:\n{stderr.rstrip()}"
        super().__init__(message)


class ReportError(DetbenchError):
    """Report rendering or file-format violation."""
