"""Exception hierarchy shared across chainview modules."""


class ChainviewError(Exception):
    pass


# -- parsing -----------------------------------------------------------------

class ParseError(ChainviewError):
    """Raised for any structurally invalid consensus encoding.

    ``offset`` is the cursor position at which decoding failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class TruncatedError(ParseError):
    pass


class MalformedSegwitError(ParseError):
    pass


class ZeroInputsError(ParseError):
    pass


class ZeroOutputsError(ParseError):
    pass


class TrailingBytesError(ParseError):
    pass


class BadMagicError(ParseError):
    pass


class MalformedPushError(ParseError):
    pass


# -- sources -----------------------------------------------------------------

class SourceError(ChainviewError):
    pass


class GenesisNotFoundError(SourceError):
    pass


class UnreachableError(SourceError):
    pass


class AuthFailedError(SourceError):
    pass


class RpcError(SourceError):
    def __init__(self, code, message):
        super().__init__(f"RPC error {code}: {message}")
        self.code = code
        self.message = message


class RangeError(ChainviewError, ValueError):
    """Requested height interval is outside what the source can serve."""


class ScanError(ChainviewError):
    """A failure while scanning, annotated with the height being processed."""

    def __init__(self, height, cause):
        super().__init__(f"scan aborted at height {height}: {cause}")
        self.height = height
        self.cause = cause


# -- navigator ---------------------------------------------------------------

class MissingPrevoutError(ChainviewError):
    def __init__(self, outpoint):
        super().__init__(f"missing prevout {outpoint}")
        self.outpoint = outpoint


# -- enrichment --------------------------------------------------------------

class DateNotCoveredError(ChainviewError, KeyError):
    def __init__(self, date):
        super().__init__(f"no exchange rate for {date}")
        self.date = date

    def __str__(self):
        return self.args[0]


class FetchFailedError(ChainviewError):
    pass


class MalformedLineError(ChainviewError):
    def __init__(self, line_number, line=""):
        super().__init__(f"malformed line {line_number}: {line!r}")
        self.line_number = line_number


# -- sinks / analytics / generator -------------------------------------------

class UnsupportedSchemaError(ChainviewError):
    pass


class SinkClosedError(ChainviewError):
    pass


class EmptyInputError(ChainviewError, ValueError):
    pass


class InvalidSpecError(ChainviewError, ValueError):
    pass
