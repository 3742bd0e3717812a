from typing import Any, Optional, TextIO
import datetime
import sys


def iso_timestamp_now() -> str:
    now = datetime.datetime.now(tz=datetime.timezone.utc)
    formatted_now = now.strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]  # Truncate microseconds to milliseconds
    return formatted_now


# Colored, timestamped logger shared by the CLI and the suite runner
class Logger:
    # Define color codes for different log levels
    COLORS = {
        "DEBUG": "\033[92m",   # Green
        "INFO": "\033[94m",    # Blue
        "WARNING": "\033[93m", # Yellow
        "ERROR": "\033[91m",   # Red
    }
    LEVELS = {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40}
    RESET_COLOR = "\033[0m"  # Reset color

    def __init__(self, level: str = "INFO", stream: Optional[TextIO] = None):
        self.set_level(level)
        # None means "sys.stderr at call time", so redirected stderr is honoured
        self.stream = stream

    def set_level(self, level: str):
        level = level.upper()
        if level not in self.LEVELS:
            raise ValueError(f"Unknown log level '{level}'. Available: {', '.join(self.LEVELS)}")
        self.level = level

    def enabled_for(self, level: str) -> bool:
        return self.LEVELS[level] >= self.LEVELS[self.level]

    def _paint(self, level: str, out: TextIO) -> str:
        isatty = getattr(out, "isatty", None)
        if isatty is None or not isatty():
            return level
        return f"{self.COLORS[level]}{level}{self.RESET_COLOR}"

    def _log(self, level: str, msg: str, *values: object, sep: str = " ", end: str = "\n", file: Any = None, flush: bool = False):
        if not self.enabled_for(level):
            return
        # stdout is reserved for the CSV / JSON-lines tables
        out = file or self.stream or sys.stderr
        print(
            f"[{iso_timestamp_now()}] [{self._paint(level, out)}] {msg}",
            *values,
            sep=sep,
            end=end,
            file=out,
            flush=flush,
        )

    def info(self, msg: str, *values: object, **kwargs):
        self._log("INFO", msg, *values, **kwargs)

    def warning(self, msg: str, *values: object, **kwargs):
        self._log("WARNING", msg, *values, **kwargs)

    def error(self, msg: str, *values: object, **kwargs):
        self._log("ERROR", msg, *values, **kwargs)

    def debug(self, msg: str, *values: object, **kwargs):
        self._log("DEBUG", msg, *values, **kwargs)

log = Logger()
