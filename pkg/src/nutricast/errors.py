"""Exception types shared across the package."""


class NutricastError(Exception):
    """Base class for every error raised by this package."""


# --- catalog ingestion ---

class MissingColumn(NutricastError):
    pass


class EmptyCatalog(NutricastError):
    pass


class UnitMismatch(NutricastError):
    """A nutrient's unit cannot be converted to the catalog unit."""


class UnknownItem(NutricastError):
    pass


# --- patient state ---

class UnknownAgeBand(NutricastError):
    pass


class NegativeAmount(NutricastError):
    pass


class DuplicateDate(NutricastError):
    """A lab report for the same date already exists with different values."""


class UnknownPatient(NutricastError):
    pass


# --- feature pipeline ---

class UnsupportedAnalyte(NutricastError):
    pass


class NoLabHistory(NutricastError):
    pass


class InsufficientHistory(NutricastError):
    pass


# --- forecasting ---

class EmptyDataset(NutricastError):
    pass


class DimensionMismatch(NutricastError):
    pass


class InsufficientData(NutricastError):
    pass


class UntrainedAnalyte(NutricastError):
    pass


# --- allowance adjustment ---

class MissingRange(NutricastError):
    pass


class MissingLink(NutricastError):
    pass


class InvalidRho(NutricastError):
    pass


# --- recommendation ---

class BadC(NutricastError):
    pass


class NoFeasibleItem(NutricastError):
    """No catalog item satisfies every mandatory constraint within the remaining budget."""


# --- evaluation ---

class LengthMismatch(NutricastError):
    pass


class ZeroActual(NutricastError):
    """MAPE is undefined when an actual value is zero."""


class ConstantActuals(NutricastError):
    """R-squared is undefined when the actual series is constant."""


class InvalidConfig(NutricastError):
    pass
