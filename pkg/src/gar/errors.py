"""Exception types shared across the package."""


class GarError(Exception):
    """Base class for all package errors."""


class ParseError(GarError):
    """A corpus/qrels/run file line could not be parsed."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DuplicateIdError(GarError):
    """An external id appeared more than once in a corpus or query set."""

    def __init__(self, external_id: str):
        self.external_id = external_id
        super().__init__(f"duplicate id: {external_id!r}")


class DocOutOfRangeError(GarError, IndexError):
    """An internal document id is outside 0..N-1."""

    def __init__(self, doc: int, n: int):
        self.doc = doc
        self.n = n
        super().__init__(f"internal id {doc} out of range for {n} documents")


class GraphFormatError(GarError):
    """A graph file is malformed; offset points at the offending bytes."""

    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"offset {offset}: {message}")


class RemoteUnavailableError(GarError):
    """The remote scoring endpoint could not be reached or returned an error status."""


class RemoteProtocolError(GarError):
    """The remote scoring endpoint answered, but the response violates the protocol."""


class InvalidConfigError(GarError, ValueError):
    """Rerank loop parameters violate their invariants."""


class InvalidSpecError(GarError, ValueError):
    """Synthetic benchmark parameters violate their invariants."""
