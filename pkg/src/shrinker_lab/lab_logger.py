"""Logger for the Shrinker Lab package.

Extends the 'f451-common' logger. Library modules log through one named
logger; console output for it goes through the Rich log handler and an
optional plain-text log file can be attached later.

Dependencies:
 - f451-common: https://pypi.org/project/f451-common/
 - rich: https://pypi.org/project/rich/
"""

import logging

import f451_common.logger as f451Logger

from rich.logging import RichHandler

__all__ = [
    'Logger',
    'get_logger',
    'LOG_DEBUG',
    'LOG_INFO',
    'LOG_WARNING',
    'LOG_ERROR',
    'LOG_CRITICAL',
    'LOG_NOTSET',
    'KWD_LOG_LEVEL',
    'KWD_LOG_FILE',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
LOG_NAME = 'shrinker_lab'
LOG_NOTSET = f451Logger.LOG_NOTSET
LOG_DEBUG = f451Logger.LOG_DEBUG
LOG_INFO = f451Logger.LOG_INFO
LOG_WARNING = f451Logger.LOG_WARNING
LOG_ERROR = f451Logger.LOG_ERROR
LOG_CRITICAL = f451Logger.LOG_CRITICAL

LOG_FMT_FILE = '%(asctime)s %(levelname)-8s %(name)s: %(message)s'
LOG_FMT_CONSOLE = '%(message)s'

KWD_LOG_LEVEL = f451Logger.KWD_LOG_LEVEL
KWD_LOG_FILE = 'LOGFILE'
# fmt: on


def get_logger():
    """Get the package logger used by library modules."""
    return logging.getLogger(LOG_NAME)


def _as_level(lvl):
    """Log level from 'int' or level name ('debug', 'INFO', ...)."""
    try:
        return int(lvl)
    except (TypeError, ValueError):
        named = logging.getLevelName(str(lvl).upper())
        return named if isinstance(named, int) else LOG_WARNING


# =========================================================
#                     M A I N   C L A S S
# =========================================================
class Logger(f451Logger.Logger):
    """Logger class for the lab runner.

    Attributes:
        logger: package 'logging.Logger' (see 'get_logger()')
        logFile: 'str' name of current log file (or None)

    Methods & Properties:
        log_debug, log_info, log_warning, log_error, log_exception: log message
        set_log_level: change log level
        set_log_file: attach a plain-text log file
    """

    def __init__(self, *args, **kwargs):
        settings = {**args[0], **kwargs} if args and isinstance(args[0], dict) else dict(kwargs)
        lvl = _as_level(settings.get(KWD_LOG_LEVEL, LOG_WARNING))
        settings[KWD_LOG_LEVEL] = lvl
        self._defaultFile = settings.pop(KWD_LOG_FILE, None)
        self.logger = get_logger()
        self.logFile = None

        # File handlers are only attached on request via 'set_log_file()'
        super().__init__(settings)
        self.logger = get_logger()
        self.logFile = None

        if not any(isinstance(h, RichHandler) for h in self.logger.handlers):
            handler = RichHandler(show_path=False, rich_tracebacks=True)
            handler.setFormatter(logging.Formatter(LOG_FMT_CONSOLE))
            self.logger.addHandler(handler)

        self.logger.propagate = False
        self.set_log_level(lvl)

    def set_log_level(self, newLvl):
        """Set log level for logger and all attached handlers."""
        lvl = _as_level(newLvl)
        self.logger.setLevel(lvl)
        for handler in self.logger.handlers:
            handler.setLevel(lvl)

    def set_log_file(self, newLvl, newFile=None):
        """Attach plain-text file handler.

        Args:
            newLvl: log level for file handler
            newFile: file name (falls back to 'LOGFILE' setting)
        """
        fName = newFile or self._defaultFile
        if not fName:
            return

        for handler in list(self.logger.handlers):
            if isinstance(handler, logging.FileHandler):
                self.logger.removeHandler(handler)
                handler.close()

        handler = logging.FileHandler(fName)
        handler.setFormatter(logging.Formatter(LOG_FMT_FILE))
        handler.setLevel(_as_level(newLvl))
        self.logger.addHandler(handler)
        self.logFile = fName

    def log_debug(self, msg):
        self.logger.debug(msg)

    def log_info(self, msg):
        self.logger.info(msg)

    def log_warning(self, msg):
        self.logger.warning(msg)

    def log_error(self, msg):
        self.logger.error(msg)

    def log_exception(self, msg):
        self.logger.exception(msg)
