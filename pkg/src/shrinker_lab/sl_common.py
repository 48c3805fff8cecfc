"""Common helpers for the Shrinker Lab package.

This module holds the pieces that every lab component shares: the custom
exception classes, the settings loader, the base runtime object used by the
CLI runner, and the base CLI parser with the common arguments. Runtime,
settings loader and parser build on the 'f451-common' library.

Dependencies:
 - f451-common: https://pypi.org/project/f451-common/
"""

import os
import platform

from pathlib import Path

import f451_common.common as f451Common

from . import sl_constants as const

__all__ = [
    'THREAD_VARS',
    'LabError',
    'ValidationError',
    'ScopeError',
    'UnsupportedExponentError',
    'DivergenceError',
    'CriterionError',
    'Runtime',
    'load_settings',
    'get_setting',
    'thread_cap',
    'apply_thread_cap',
    'init_cli_parser',
    'exit_code_for',
]

THREAD_VARS = ('OMP_NUM_THREADS', 'MKL_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'NUMEXPR_NUM_THREADS')


# =========================================================
#      C U S T O M   E X C E P T I O N   C L A S S E S
# =========================================================
class LabError(Exception):
    """Custom exception class"""

    def __init__(self, errMsg='Unknown Shrinker Lab error'):
        super().__init__(errMsg)


class ValidationError(LabError):
    """Invalid input, spec string, or configuration value"""

    def __init__(self, errMsg='Invalid input'):
        super().__init__(errMsg)


class ScopeError(ValidationError):
    """Request lies outside the scope where an inequality is stated"""

    def __init__(self, errMsg='Request outside supported scope'):
        super().__init__(errMsg)


class UnsupportedExponentError(ValidationError):
    """Sobolev exponent 2n/(n-2) is undefined for n <= 2"""

    def __init__(self, errMsg='Sobolev exponent requires n >= 3'):
        super().__init__(errMsg)


class DivergenceError(LabError):
    """Non-finite values or unreliable series tails"""

    def __init__(self, errMsg='Numerical divergence', firstFailure=None):
        super().__init__(errMsg)
        self.firstFailure = firstFailure


class CriterionError(LabError):
    """Backward solve refused because the series criterion failed"""

    def __init__(self, errMsg='Backward criterion not satisfied'):
        super().__init__(errMsg)


def exit_code_for(err):
    """Map an exception to a CLI exit code.

    Args:
        err: exception instance

    Returns:
        'int' exit code
    """
    if isinstance(err, ValidationError):
        return const.EXIT_USAGE
    if isinstance(err, CriterionError):
        return const.EXIT_FAILED
    # DivergenceError, FloatingPointError and anything unexpected
    return const.EXIT_NUMERIC


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def load_settings(settingsFile):
    """Load settings from flat TOML file.

    Every line has the form 'KEY = value'. Comments start with '#'.

    Args:
        settingsFile: path to settings file

    Returns:
        'dict' with settings

    Raises:
        ValidationError: file is missing or cannot be parsed
    """
    path = Path(settingsFile)
    if not path.is_file():
        raise ValidationError(f'Settings file not found: {path}')

    # 'f451Common.load_settings()' exits on parse errors
    try:
        settings = f451Common.load_settings(path)
    except (SystemExit, ValueError, OSError) as e:
        raise ValidationError(f'Invalid settings file {path}: {e}') from e
    if not isinstance(settings, dict):
        raise ValidationError(f'Invalid settings file {path}')

    nested = [key for key, val in settings.items() if isinstance(val, dict)]
    if nested:
        raise ValidationError(f'Settings must be flat KEY = value pairs: {nested}')

    return settings


def get_setting(settings, key, default, kind=None):
    """Get setting value with default and optional type coercion.

    Args:
        settings: 'dict' with settings
        key: keyword for setting
        default: default value
        kind: optional callable (e.g. 'int', 'float') to coerce value

    Returns:
        setting value

    Raises:
        ValidationError: value cannot be coerced
    """
    val = settings.get(key, default)
    if val is None or kind is None:
        return val
    try:
        return kind(val)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Invalid value for '{key}': {val!r}") from e


def thread_cap():
    """Get thread cap from environment (0 = no cap)."""
    raw = os.environ.get(const.ENV_THREADS, '')
    try:
        return max(int(raw), 0)
    except ValueError:
        return 0


def apply_thread_cap():
    """Pass the thread cap on to the BLAS/OpenMP pools.

    Only takes full effect when called before numpy is imported. Explicit
    pool settings in the environment win.

    Returns:
        'int' thread cap (0 = no cap)
    """
    cap = thread_cap()
    if cap:
        for var in THREAD_VARS:
            os.environ.setdefault(var, str(cap))
    return cap


def init_cli_parser(appName, appVersion, setDefaults=True):
    """Initialize CLI (ArgParse) parser with common arguments.

    Args:
        appName: 'str' with app name
        appVersion: 'str' with app version
        setDefaults: 'bool' flag indicates whether to set up default CLI args

    Returns:
        ArgParse parser instance
    """
    parser = f451Common.init_cli_parser(appName, appVersion, False)
    if not setDefaults:
        return parser

    parser.add_argument(
        '-V',
        '--version',
        action='store_true',
        help='display script version number and exit',
    )
    parser.add_argument(
        '-d',
        '--debug',
        action='store_true',
        help='run script in debug mode',
    )
    parser.add_argument(
        '--log',
        action='store',
        type=str,
        help='name of log file',
    )
    parser.add_argument(
        '--config',
        action='store',
        type=str,
        help='settings file (flat KEY = value)',
    )

    return parser


# =========================================================
#                     M A I N   C L A S S
# =========================================================
class Runtime(f451Common.Runtime):
    """Base runtime object.

    Holds app identity and loaded settings so that the app can pass a single
    object around instead of a series of globals.

    Attributes:
        appName: 'str' app name
        appVersion: 'str' app version
        appNameShort: 'str' short app name
        appLog: 'str' default log file name
        appSettings: 'str' default settings file name
        appDir: 'Path' to dir with default settings file
        config: 'dict' with loaded settings
        debugMode: 'bool' debug flag
    """

    def __init__(
        self,
        appName,
        appVersion,
        appNameShort=None,
        appLog=None,
        appSettings=None,
        appDir=None,
    ):
        appDir = Path(appDir) if appDir else Path(__file__).parent
        super().__init__(
            appName,
            appVersion,
            appNameShort or appName,
            appLog,
            appSettings,
            platform.node(),        # Get device 'hostname'
            appDir,
        )
        self.appDir = appDir
        self.appSettings = appSettings
        self.config = {}
        self.debugMode = False
        self.logger = None
        self.console = None

    def settings_path(self, override=None):
        return Path(override) if override else self.appDir.joinpath(self.appSettings)
