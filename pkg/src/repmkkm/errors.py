"""Exception types shared across the package."""


class KernelError(ValueError):
    """A kernel matrix could not be constructed or normalized."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ParseError(ValueError):
    """Input file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class NumericalError(RuntimeError):
    """A numerical routine failed (e.g. eigensolver non-convergence)."""
