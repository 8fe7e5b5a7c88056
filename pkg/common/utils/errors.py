"""
Exception hierarchy for proxnet.

Every error raised on purpose by the pipeline derives from ProxnetError so the
entry script can map it onto an exit code.
"""
from common.config import EXIT_CONFIG, EXIT_FAILURE, EXIT_PARSE, EXIT_STATISTICS


class ProxnetError(Exception):
    """Base class for all proxnet errors."""
    exit_code = EXIT_FAILURE


class ConfigError(ProxnetError):
    """Invalid grid, run configuration or simulator configuration."""
    exit_code = EXIT_CONFIG


class ValidationError(ProxnetError):
    """Invalid input value (empty identifier, out-of-range index, ...)."""
    exit_code = EXIT_PARSE


class ParseError(ProxnetError):
    """Unreadable file or malformed row."""
    exit_code = EXIT_PARSE

    def __init__(self, message, path=None, line=None):
        self.path = str(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = f"{self.path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class DataIntegrityError(ProxnetError):
    """Inputs contradict each other (roster collisions, detections without scans)."""
    exit_code = EXIT_STATISTICS


class StatisticsError(ProxnetError):
    """A statistic is undefined for the given input."""
    exit_code = EXIT_STATISTICS


class EmptyNetworkError(StatisticsError):
    """Nothing left to compute a network on."""
