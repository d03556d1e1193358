"""Exception types shared across the package.

Contract violations raise early and loudly; nothing in this package returns
NaN or silently clamps.  The CLI maps usage errors to exit code 1 and the
data/model errors below to exit code 2.
"""


class SpecGateError(Exception):
    """Base class for all package errors."""


class ShapeError(SpecGateError, ValueError):
    """An array argument has the wrong shape, dtype, or extent."""


class NumericsError(SpecGateError, ArithmeticError):
    """A computation produced NaN/Inf, or autodiff contracts were violated."""


class DataError(SpecGateError, ValueError):
    """A dataset, manifest, clip directory, or image file is malformed."""


class CheckpointError(SpecGateError, ValueError):
    """A weight file is malformed or inconsistent with the running config."""


class ConfigError(SpecGateError, ValueError):
    """A configuration value is out of range or internally inconsistent."""
