"""Exception hierarchy shared by every layer."""


class OntoDriftError(Exception):
    """Base class for all package errors."""


class ParseError(OntoDriftError):
    def __init__(self, message: str, line: int, column: int, token: str | None = None):
        self.line = line
        self.column = column
        self.token = token
        where = f"line {line}, column {column}"
        if token is not None:
            where += f" near {token!r}"
        super().__init__(f"{where}: {message}")


class UnsupportedAxiom(OntoDriftError):
    """An axiom outside the supported EL++ fragment."""


class UnknownIndividual(OntoDriftError):
    pass


class WindowOutOfRange(OntoDriftError):
    pass


class InconsistentWindow(OntoDriftError):
    """The union of a window's assertions clashes with the ontology."""

    def __init__(self, start: int, end: int):
        self.start = start
        self.end = end
        super().__init__(f"window [{start},{end}] is inconsistent with T u A")


class InconsistentSnapshot(OntoDriftError):
    pass


class IndexMismatch(OntoDriftError):
    pass


class InsufficientSamples(OntoDriftError):
    pass


class InsufficientData(OntoDriftError):
    pass


class InfeasibleScenario(OntoDriftError):
    pass


class ModelFormatError(OntoDriftError):
    """A model file failed its version or digest check."""
