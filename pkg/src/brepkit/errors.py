"""Exception hierarchy shared across the toolkit.

Every failure the CLI maps to exit code 1 derives from BrepError; the
`hint` field, when set, is surfaced to the user as a remediation note.
"""


class BrepError(Exception):
    def __init__(self, message, hint=None):
        super().__init__(message)
        self.hint = hint


class StructuralError(BrepError):
    """Element lists and adjacency matrices disagree, or data is malformed."""


class ParseError(BrepError):
    """A document could not be read; message carries the record locus."""


class DegenerateGeometryError(BrepError):
    """A fit was requested on a point configuration that cannot determine it."""


class SolverFailure(BrepError):
    """The combinatorial solver found no usable assignment."""


class ExtractionError(BrepError):
    """Complex extraction cannot proceed (e.g. empty candidate set)."""
