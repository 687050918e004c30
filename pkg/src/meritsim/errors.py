"""Exception hierarchy shared by every module."""


class MeritSimError(Exception):
    pass


class NonMonotoneDemand(MeritSimError, ValueError):
    pass


class DurationSumMismatch(MeritSimError, ValueError):
    pass


class UnknownPlantType(MeritSimError, KeyError):
    pass


class DuplicateCostRow(MeritSimError, ValueError):
    pass


class Infeasible(MeritSimError):
    pass


class MissingAvailabilityData(MeritSimError, KeyError):
    pass


class InsufficientData(MeritSimError, ValueError):
    pass


class ForecastUnavailable(MeritSimError):
    pass


class RegistryParseError(MeritSimError, ValueError):
    pass


class ParseError(MeritSimError, ValueError):
    pass


class MissingKey(ParseError):
    pass


class UnknownKey(ParseError):
    pass


class GridMismatch(MeritSimError, ValueError):
    pass
