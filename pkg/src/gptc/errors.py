"""Exception hierarchy shared by every gptc module."""


class GptcError(Exception):
    """Base class for all errors raised by gptc."""


# wiring / IR

class WiringError(GptcError):
    pass


class InvalidPort(WiringError):
    pass


class PortOccupied(WiringError):
    pass


class TypeMismatch(WiringError):
    pass


class WouldCreateCycle(WiringError):
    def __init__(self, message, path=()):
        super().__init__(message)
        self.path = tuple(path)


class InvalidFragment(GptcError):
    pass


# notation

class NotationError(GptcError):
    """Error in a circuit document; carries a 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class NotationSyntaxError(NotationError):
    pass


class DuplicateIndexRole(NotationError):
    pass


class TypeLetterMismatch(NotationError):
    pass


class CycleError(NotationError):
    def __init__(self, message, path=(), line=None, column=None):
        super().__init__(message, line, column)
        self.path = tuple(path)


# contraction

class ShapeMismatch(GptcError):
    pass


class UnboundOperation(GptcError):
    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__("unbound operation(s): " + ", ".join(self.missing))


class NegativeWeight(GptcError, ValueError):
    pass


# theories

class NonPhysicalOperator(GptcError, ValueError):
    pass


class NotAState(GptcError, ValueError):
    pass


class SpecInvalid(GptcError, ValueError):
    pass


class UnsupportedTheory(GptcError):
    pass


class UnknownReference(GptcError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


# postulates / constructions

class EmptyOutcomeSet(GptcError, ValueError):
    pass


class NotInFace(GptcError, ValueError):
    pass


class NotAFilter(GptcError):
    def __init__(self, clause, residual):
        self.clause = clause
        self.residual = residual
        super().__init__(f"not a filter: {clause} (residual {residual:.3e})")


class EmptyTable(GptcError, ValueError):
    pass


class AncillaUnavailable(GptcError):
    pass


class ConstructionUnavailable(GptcError):
    pass


class BadOutcomeIndex(GptcError, ValueError):
    pass


class NMismatch(GptcError, ValueError):
    pass


class UnknownSuite(GptcError, ValueError):
    pass
