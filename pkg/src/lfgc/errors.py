"""Exception hierarchy shared by every lfgc module."""


class LfgcError(Exception):
    """Base class for all errors raised by lfgc."""


class DataError(LfgcError, ValueError):
    """Input data violates a documented precondition."""


class MalformedStreamError(DataError):
    """A bitstream or side-info payload could not be parsed."""

    def __init__(self, offset, detail=""):
        self.offset = offset
        msg = f"malformed stream at offset {offset}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InvariantError(LfgcError, AssertionError):
    """An internal invariant was broken (a bug, not bad input)."""
