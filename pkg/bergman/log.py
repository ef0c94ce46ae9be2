import logging
import os
import sys
from typing import IO

from colorama import Fore
from colorama import Style

from bergman.optmanager import OptManager


LOG_COLORS = {
    logging.DEBUG: Fore.LIGHTBLACK_EX,
    logging.WARN: Fore.YELLOW,
    logging.ERROR: Fore.RED
}


def supports_color(f: IO) -> bool:
    """
    Whether escape codes can be written to `f`. Only terminals on
    non-windows systems are supported.
    """
    if os.name == "nt":
        return False
    isatty = getattr(f, "isatty", None)
    return bool(isatty and isatty())


class BergmanLogHandler(logging.Handler):
    """
    Writes log records to stderr (tables go to stdout or a file), with
    colours when the stream is a terminal.
    """
    def __init__(self, out: IO[str] | None = None) -> None:
        super().__init__(logging.INFO)
        self.file: IO[str] = out or sys.stderr
        self.formatter = BergmanFormatter(supports_color(self.file))

    def emit(self, record: logging.LogRecord) -> None:
        try:
            print(self.format(record), file=self.file)
        except OSError:
            # Can't print, exit immediately
            sys.exit(1)

    def install(self) -> None:
        root = logging.getLogger()
        root.setLevel(logging.DEBUG)
        root.addHandler(self)

    def remove(self) -> None:
        logging.getLogger().removeHandler(self)

    def configure(self, options: OptManager, updated: set[str]) -> None:
        if "log.level" in updated:
            level = options.log.level.upper()
            self.setLevel("WARNING" if level == "WARN" else level)


class BergmanFormatter(logging.Formatter):
    default_time_format = "%H:%M:%S"
    default_msec_format = "%s.%03d"

    def __init__(self, colorize: bool) -> None:
        super().__init__()
        self.colorize = colorize

    @property
    def time(self) -> str:
        return "[%s]" if not self.colorize else f"[{Fore.LIGHTBLACK_EX}%s{Fore.RESET}]"

    def format(self, record: logging.LogRecord) -> str:
        time = self.time % self.formatTime(record)
        message = record.getMessage()
        if record.exc_info:
            message = f"{message}\n{self.formatException(record.exc_info)}"
        if self.colorize:
            message = f"{LOG_COLORS.get(record.levelno, "")}{message}{Style.RESET_ALL}"
        return f"{time} {message}"
