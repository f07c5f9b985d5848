"""Error and signalling types shared across the package."""

from __future__ import annotations


class P4Error(Exception):
    """User-facing error (bad source, bad script, bad topology)."""

    def __init__(self, code: str, message: str, span=None):
        self.code = code
        self.message = message
        self.span = span
        where = f" at {span}" if span is not None else ""
        super().__init__(f"{code}: {message}{where}")


class LexError(P4Error):
    def __init__(self, message, span=None):
        super().__init__("LEX_ERROR", message, span)


class ParseError(P4Error):
    def __init__(self, message, span=None, expected=None):
        self.expected = frozenset(expected or ())
        if self.expected:
            message = f"{message} (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__("PARSE_ERROR", message, span)


class ElaborationError(P4Error):
    """Static check failure while building the resolved program model."""


class ControlScriptError(P4Error):
    def __init__(self, message, span=None):
        super().__init__("CONTROL_SCRIPT_ERROR", message, span)


class TopologyError(P4Error):
    def __init__(self, code, message, span=None):
        super().__init__(code, message, span)


class StfError(P4Error):
    def __init__(self, message, span=None):
        super().__init__("STF_ERROR", message, span)


class StuckError(Exception):
    """Execution reached a point with no defined semantics.

    Not a user error: this is the detection signal for unportable code.
    `reason` is a stable reason code, `site` a human-readable location.
    """

    def __init__(self, reason: str, site: str, detail: str = ""):
        self.reason = reason
        self.site = site
        self.detail = detail
        msg = f"stuck({reason}) at {site}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


# Stable stuck reason codes.
UNDEF_IN_EXPR = "UNDEF_IN_EXPR"
NEGATIVE_SHIFT = "NEGATIVE_SHIFT"
WRITE_INVALID_HEADER = "WRITE_INVALID_HEADER"
READ_INVALID_HEADER = "READ_INVALID_HEADER"
INDEX_OOB = "INDEX_OOB"
BAD_STACK_OP = "BAD_STACK_OP"
BAD_VARBIT_LEN = "BAD_VARBIT_LEN"
PARSE_LOOP_BUDGET = "PARSE_LOOP_BUDGET"
NO_BRANCH = "NO_BRANCH"
UNDEFINED_EGRESS = "UNDEFINED_EGRESS"
UNKNOWN_PRIMITIVE = "UNKNOWN_PRIMITIVE"
UNSPECIFIED_PRIMITIVE_CASE = "UNSPECIFIED_PRIMITIVE_CASE"
CALL_DEPTH = "CALL_DEPTH"
HASH_WIDTH_MISMATCH = "HASH_WIDTH_MISMATCH"


class ParserException(Exception):
    """Internal signal: a parser exception was raised while parsing a packet.

    Carries the exception name used for handler dispatch; never escapes the
    packet parsing engine.
    """

    TOO_SHORT = "pe_too_short"
    STACK_FULL = "pe_stack_full"
    CHECKSUM = "pe_checksum"

    def __init__(self, name: str, site: str = ""):
        self.name = name
        self.site = site
        super().__init__(f"parser exception {name} at {site}")
