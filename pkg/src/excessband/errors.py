"""Error types shared across the package.

Plain ``ValueError`` is used for bad call arguments.  The two classes here
cover the remaining failure modes: rejected configurations and measurements
that cannot produce a meaningful number.
"""


class ConfigError(Exception):
    """A configuration was internally inconsistent or out of supported range."""


class MeasurementError(RuntimeError):
    """A measurement or simulation could not produce a valid result.

    Raised for degenerate inputs (zero-power reference, constant stream) and
    for detected numerical blow-ups such as modulator state overflow.
    """
