"""Exception hierarchy shared by every module of the package."""


class IspError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(IspError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateId(IspError):
    pass


class UnknownCategory(IspError):
    pass


class UnknownItem(IspError):
    pass


class EmptyCorpus(IspError):
    pass


class MissingItem(IspError):
    pass


class DimMismatch(IspError):
    pass


class Infeasible(IspError):
    pass


class InfeasibleCatalog(IspError):
    pass


class InvalidK(IspError):
    pass


class InvalidSize(IspError):
    pass


class InvalidQuantile(IspError):
    pass


class EmptyWarmSet(IspError):
    pass


class ConfigError(IspError):
    pass
