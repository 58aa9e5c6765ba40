"""Exception types shared across the package.

The CLI maps these onto exit codes: config/usage problems exit 2,
malformed log data exits 1.
"""


class ZeekLabelError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ZeekLabelError):
    """Ontology or rule configuration could not be parsed or validated."""


class UsageError(ZeekLabelError):
    """Inputs are structurally fine but do not fit the requested operation."""


class LogFormatError(ZeekLabelError):
    """A Zeek log file is malformed or missing required structure."""
