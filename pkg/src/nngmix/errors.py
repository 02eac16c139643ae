"""Exception hierarchy. Each class maps to a CLI exit code."""


class NNGMixError(Exception):
    exit_code = 1


class ConfigError(NNGMixError, ValueError):
    exit_code = 1


class DataError(NNGMixError, ValueError):
    exit_code = 2


class NumericalError(NNGMixError, ArithmeticError):
    exit_code = 3
