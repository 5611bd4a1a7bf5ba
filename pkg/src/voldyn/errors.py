"""Exception hierarchy shared by all voldyn modules.

Two broad categories drive the CLI exit codes: ``InputError`` for bad files,
bad configuration or data that violates a precondition (exit 1), and
``NumericalError`` for failures inside the numerical pipeline (exit 2).
"""


class VoldynError(Exception):
    """Base class for every error raised by this package."""


class InputError(VoldynError):
    """Bad input data, file or configuration."""


class NumericalError(VoldynError):
    """A numerical routine failed to produce a usable result."""


# ---------------------------------------------------------------------------
# volgrid
# ---------------------------------------------------------------------------

class UnparseableRow(InputError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateRow(InputError):
    def __init__(self, line, key):
        super().__init__(f"line {line}: duplicate cell {key}")
        self.line = line
        self.key = key


class NonPositiveVol(InputError):
    def __init__(self, line, value):
        super().__init__(f"line {line}: vol must be strictly positive and finite, got {value}")
        self.line = line
        self.value = value


class MissingCell(InputError):
    def __init__(self, date, coordinate):
        super().__init__(f"date {date} is missing grid point {coordinate}")
        self.date = date
        self.coordinate = coordinate


class OffGridCoordinate(InputError):
    pass


class TooFewDates(InputError):
    pass


class NonPositiveValue(InputError):
    pass


class AlreadyCentered(InputError):
    pass


# ---------------------------------------------------------------------------
# kldecomp
# ---------------------------------------------------------------------------

class NotCentered(InputError):
    pass


class TooFewSamples(InputError):
    pass


class OutOfDomain(InputError):
    pass


class SingularB(NumericalError):
    pass


class CholeskyFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class GridMismatch(InputError):
    pass


class ZeroEigenvalue(InputError):
    pass


class AllZeroSpectrum(InputError):
    pass


# ---------------------------------------------------------------------------
# fhs
# ---------------------------------------------------------------------------

class SeriesTooShort(InputError):
    pass


class NonStationaryFit(NumericalError):
    pass


class InsufficientHistory(InputError):
    pass


class DateMisalignment(InputError):
    pass


class MissingLastSmile(InputError):
    pass


# ---------------------------------------------------------------------------
# bachelier
# ---------------------------------------------------------------------------

class NegativeVol(InputError):
    pass


class NonPositiveExpiry(InputError):
    pass


class TooFewStrikes(InputError):
    pass


# ---------------------------------------------------------------------------
# backtest
# ---------------------------------------------------------------------------

class EmptySequence(InputError):
    pass


class NegativeStatistic(InputError):
    pass


# ---------------------------------------------------------------------------
# synthmarket
# ---------------------------------------------------------------------------

class RankDeficiency(NumericalError):
    pass
