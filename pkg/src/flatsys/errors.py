"""Exception types raised by the kernel."""


class FlatsysError(Exception):
    """Base class for all domain errors."""

    def payload(self):
        return {"error": type(self).__name__, "message": str(self)}


class ParseError(FlatsysError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column

    def payload(self):
        d = super().payload()
        if self.line is not None:
            d["line"] = self.line
        if self.column is not None:
            d["column"] = self.column
        return d


class InvalidSurface(FlatsysError):
    """The mesh violates a structural invariant."""


class BudgetExceeded(FlatsysError):
    def __init__(self, message, budget):
        super().__init__(message)
        self.budget = budget

    def payload(self):
        d = super().payload()
        d["budget"] = self.budget
        return d


class GeometryError(FlatsysError):
    """A geometric precondition failed (embedding, admissibility, ...)."""


class KernelDefect(FlatsysError):
    """A move mandated by the theory could not be carried out."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def payload(self):
        d = super().payload()
        d["diagnostics"] = self.diagnostics
        return d
