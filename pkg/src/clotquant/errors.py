"""Exception hierarchy shared across the pipeline."""


class ClotQuantError(Exception):
    """Base class for all library errors."""


class DecodeError(ClotQuantError):
    """The image bytes could not be turned into a GrayImage."""


class MalformedHeader(DecodeError):
    pass


class TruncatedData(DecodeError):
    pass


class UnsupportedMaxval(DecodeError):
    pass


class UnsupportedFormat(DecodeError):
    pass


class ImageIOError(DecodeError, OSError):
    """Reading the image file failed at the filesystem level."""


class DegenerateHistogram(ClotQuantError, ValueError):
    """All pixels share one intensity, so no threshold split exists."""


class RoiTooSmall(ClotQuantError, ValueError):
    pass


class TooFewSamples(ClotQuantError, ValueError):
    pass


class ZeroVariance(ClotQuantError, ValueError):
    pass


class AllFramesFailed(ClotQuantError):
    """Every frame of a session failed to decode."""
