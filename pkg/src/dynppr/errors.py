"""Exception types raised across the package."""
from __future__ import annotations


class DynPPRError(Exception):
    pass


class DuplicateEdge(DynPPRError):
    def __init__(self, u: int, v: int) -> None:
        super().__init__(f"edge ({u}, {v}) already present")
        self.edge = (u, v)


class MissingEdge(DynPPRError):
    def __init__(self, u: int, v: int) -> None:
        super().__init__(f"edge ({u}, {v}) not present")
        self.edge = (u, v)


class ParseError(DynPPRError):
    def __init__(self, path: str, line: int, text: str) -> None:
        super().__init__(f"{path}:{line}: cannot parse {text!r}")
        self.path = path
        self.line = line


class PoolExhausted(DynPPRError):
    pass


class IndexUnderflow(DynPPRError):
    """A query needed more stored walks than the index holds for a node."""


class RefusesLargeGraph(DynPPRError):
    pass
