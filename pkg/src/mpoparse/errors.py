"""Exception hierarchy shared by every stage of the toolchain."""


class MpoParseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MpoParseError, ValueError):
    """A width or size argument lies outside its configured range."""


class BitRangeError(MpoParseError, IndexError):
    """A bit slice does not fit inside its word."""


class KeyPlacementError(MpoParseError, ValueError):
    """A transition key crosses a bus-word boundary."""


class SpecError(MpoParseError, ValueError):
    """The parser-graph document could not be loaded.

    ``where`` is a JSON-path-like locator (``headers[2].length``) and
    ``line`` is set for syntax errors.
    """

    def __init__(self, message, where=None, line=None):
        self.where = where
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if where:
            prefix.append(where)
        super().__init__(f"{': '.join(prefix)}: {message}" if prefix else message)


class SpecSyntaxError(SpecError):
    pass


class DuplicateIdError(SpecError):
    pass


class UnknownReferenceError(SpecError):
    pass


class ValidationError(MpoParseError):
    """Raised when a graph that failed validation is used for planning."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations)
        super().__init__(f"graph failed validation:\n{lines}")


class PlanInvariantError(MpoParseError, RuntimeError):
    """Internal inconsistency between a plan and the runtime (a planner bug)."""


class CodegenError(MpoParseError):
    pass


class PacketFormatError(MpoParseError, ValueError):
    pass


class LengthOutOfRange(MpoParseError, ValueError):
    """A variable-length header carries a length field outside its declared range."""
