"""Exception types shared across the solver modules."""


class TsplibParseError(ValueError):
    """Malformed TSPLIB text. Carries the 1-based line number when known."""

    def __init__(self, message, lineno=None, line=None):
        if lineno is not None:
            message = f"line {lineno}: {message}: {line!r}"
        super().__init__(message)
        self.lineno = lineno
        self.line = line


class ValidationError(ValueError):
    """Input is well-formed but violates a structural invariant."""


class InfeasibleError(RuntimeError):
    """No feasible walk exists for the instance.

    ``vertex`` names an uncovered task vertex when one is known.
    """

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class SearchTimeout(RuntimeError):
    """The exact search hit its deadline before proving optimality."""

    def __init__(self, message, lower_bound=None, expanded=0):
        super().__init__(message)
        self.lower_bound = lower_bound
        self.expanded = expanded
