"""Exception hierarchy.

``InputError`` and subclasses signal bad user input (files, geometry,
datasets); ``NumericalError`` and subclasses signal linear-algebra
failures. The command-line front end maps them to distinct exit codes.
"""


class DDTrussError(Exception):
    pass


class InputError(DDTrussError, ValueError):
    pass


class ZeroLengthMember(InputError):
    pass


class ParseError(InputError):
    pass


class EmptyDataset(InputError):
    pass


class DegenerateDataset(InputError):
    pass


class InvalidCurveSpec(InputError):
    pass


class EmptyAllowedSet(InputError):
    pass


class TooLarge(DDTrussError):
    """Enumeration would exceed the configured limit."""


class NumericalError(DDTrussError, ArithmeticError):
    pass


class KinematicallyIndeterminate(NumericalError, InputError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NoFreeMember(DDTrussError, RuntimeError):
    pass
