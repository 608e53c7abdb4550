# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Package logger: colored console lines, a log file, and per-run copies."""

import contextlib
import logging
import pathlib
import time

from colorama import Fore, Style

logger = logging.getLogger("mixdim_solve")

_FILE_FORMAT = "%(asctime)s,%(msecs)d %(name)s %(levelname)s %(message)s"

_LEVEL_COLORS = {
    "DEBUG": Fore.BLUE,
    "INFO": Fore.GREEN,
    "WARNING": Fore.YELLOW,
    "ERROR": Fore.RED,
    "CRITICAL": Fore.RED,
}

# clock and level columns: 10 + 1 + 10 + 2
_INDENT = 23

_handler = None


def _file_handler(file_path):
    handler = logging.FileHandler(file_path)
    handler.setFormatter(logging.Formatter(_FILE_FORMAT))
    return handler


def setup_logger(level, file_path=False):
    """Route the package logger to the console, or to ``file_path``.

    A second call replaces the handler of the first one.
    """
    global _handler
    if _handler is not None:
        logger.removeHandler(_handler)
        _handler.close()
    if file_path:
        handler = _file_handler(file_path)
    else:
        handler = logging.StreamHandler()
        handler.setFormatter(MixdimFormatter())
    level = getattr(logging, str(level))
    handler.setLevel(level)
    _handler = handler
    logger.addHandler(handler)
    logger.setLevel(level)


@contextlib.contextmanager
def experiment_log(directory, name="run.log", level=logging.INFO):
    """Copy the records of the block, ``level`` and above, into ``directory/name``.

    The console or ``--log-path`` handler keeps its own level.
    """
    handler = _file_handler(pathlib.Path(directory) / name)
    handler.setLevel(level)
    previous = logger.level
    if logger.getEffectiveLevel() > level:
        logger.setLevel(level)
    logger.addHandler(handler)
    try:
        yield pathlib.Path(handler.baseFilename)
    finally:
        logger.removeHandler(handler)
        handler.close()
        logger.setLevel(previous)


class MixdimFormatter(logging.Formatter):
    """``HH:MM:SS LEVEL message`` with a dimmed clock and a colored level."""

    def format(self, record):
        message = record.getMessage()
        if record.exc_info:
            message += "\n" + self.formatException(record.exc_info)
        clock = time.strftime("%H:%M:%S", self.converter(record.created))
        prefix = "".join(
            [
                Style.RESET_ALL,
                Fore.BLACK,
                Style.BRIGHT,
                "%-10s" % clock,
                Style.RESET_ALL,
                " ",
                _LEVEL_COLORS.get(record.levelname, ""),
                Style.BRIGHT,
                "%-10s" % record.levelname,
                Style.RESET_ALL,
            ]
        )
        return prefix + "  " + message.replace("\n", "\n" + " " * _INDENT)
