"""Exception hierarchy.

Everything raised on bad data derives from HsadaptError so the CLI can map
data/validation failures to exit code 1 while leaving genuine bugs loud.
"""


class HsadaptError(Exception):
    """Base class for all data and validation errors."""


class FormatError(HsadaptError):
    """Malformed document or byte stream (bad magic, bad syntax, truncation)."""


class UnitsError(FormatError):
    """Wavelengths that look like microns instead of nanometers."""


class ValidationError(HsadaptError):
    """Well-formed input violating a domain invariant."""


class EmptySupportError(ValidationError):
    """A target band whose SRF never overlaps the input wavelength grid."""


class GridMismatchError(ValidationError):
    """A plan or weight matrix applied to a cube with a different wavelength grid."""


class DegenerateBaselineError(ValidationError):
    """A regression target with zero training variance; nMSE is undefined."""
