"""Exception hierarchy shared by every module."""


class MQPAError(Exception):
    """Base class for all errors raised by the toolkit."""


class CapacityError(MQPAError):
    """An event would depend on more oracle bits than ``max_bits`` allows."""


class SyntaxError_(MQPAError):
    """Malformed concrete syntax; carries a 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class EvaluationError(MQPAError):
    """Term or formula evaluation failed (e.g. an unbound variable)."""


class ArityError(MQPAError):
    """A program was applied to, or built from, parts of the wrong arity."""


class OracleError(MQPAError):
    """An explicit oracle was queried outside its prefix with tail policy 'error'."""


class FuelExhausted(MQPAError):
    """The evaluation budget ran out before a result was produced.

    This signals a budget limit, never mathematical divergence.
    """


class PCFTypeError(MQPAError):
    """A PCF term is ill-typed; ``path`` locates the offending subterm."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = f" at {'/'.join(self.path) or '<root>'}"
        super().__init__(message + where)


class FragmentError(MQPAError):
    """A formula lies outside the implication fragment used by realizability."""
