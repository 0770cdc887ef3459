"""Exception hierarchy.

Everything raised for bad input data derives from :class:`VoxError`; the CLI
maps those to exit code 2.
"""


class VoxError(ValueError):
    """Base class for data / validation errors."""


class NiftiError(VoxError):
    pass


class MagicMismatch(NiftiError):
    pass


class UnsupportedDatatype(NiftiError):
    def __init__(self, code):
        super().__init__(f"unsupported NIfTI datatype code {code}")
        self.code = code


class BadDim(NiftiError):
    pass


class NonPositiveSpacing(NiftiError):
    pass


class TruncatedData(NiftiError):
    pass


class NonIntegerLabels(NiftiError):
    pass


class InvalidLabels(VoxError):
    pass


class DegenerateOutput(VoxError):
    pass


class BadPercentile(VoxError):
    pass


class NotNormalized(VoxError):
    pass


class GridMismatch(VoxError):
    pass


class EmptyMask(VoxError):
    pass


class DegenerateData(VoxError):
    pass


class TooFewGroups(VoxError):
    pass


class UnknownAdjustment(VoxError):
    pass


class SpecTooSmall(VoxError):
    pass


class InconsistentCases(VoxError):
    pass


class NoRecords(VoxError):
    pass


class InfiniteValues(VoxError):
    pass
