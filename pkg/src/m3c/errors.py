"""Engine error types.

Every raised condition carries a stable machine-readable ``code`` so callers
(and tests) can branch on failure kind without string-matching messages.
"""

from __future__ import annotations


class M3CError(Exception):
    """Base class for all engine errors."""

    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


# --- embeddings / retrieval ---

class DimMismatchError(M3CError):
    code = "DIM_MISMATCH"


# --- memory graph ---

class MalformedFragmentError(M3CError):
    code = "MALFORMED_FRAGMENT"

    def __init__(self, index: int, fragment: str = ""):
        super().__init__(f"fragment {index} lacks an attribution suffix",
                         index=index, fragment=fragment)
        self.index = index


class UnknownOrdinalError(M3CError):
    code = "UNKNOWN_ORDINAL"


class NonTextUnitError(M3CError):
    code = "NON_TEXT_UNIT"


class UnknownIdError(M3CError):
    code = "UNKNOWN_ID"


class SelfLinkError(M3CError):
    code = "SELF_LINK"


# --- backends ---

class TransportError(M3CError):
    code = "TRANSPORT"


class TimeoutError_(M3CError):
    code = "TIMEOUT"


class BackendProtocolError(M3CError):
    code = "BACKEND_PROTOCOL"

    def __init__(self, message: str = "", raw: str = "", **details):
        super().__init__(message, raw=raw, **details)
        self.raw = raw


# --- orchestrator ---

class EmptyParticipantsError(M3CError):
    code = "EMPTY_PARTICIPANTS"


class SlotsExhaustedError(M3CError):
    code = "SLOTS_EXHAUSTED"


class SessionIncompleteError(M3CError):
    code = "SESSION_INCOMPLETE"


class BadPrefixLengthError(M3CError):
    code = "BAD_PREFIX_LENGTH"


class EpisodeAbortedError(M3CError):
    """A backend failure mid-episode. Carries the completed turns so the
    partial artifact can be persisted with status=aborted."""

    code = "EPISODE_ABORTED"

    def __init__(self, cause: Exception, episode, graph):
        super().__init__(f"episode aborted: {cause}")
        self.cause = cause
        self.episode = episode
        self.graph = graph


# --- dataset pipeline ---

class EmptyInputError(M3CError):
    code = "EMPTY_INPUT"


class ScenarioExhaustedError(M3CError):
    code = "SCENARIO_EXHAUSTED"


class OutOfRangeError(M3CError):
    code = "OUT_OF_RANGE"


class DuplicateTurnError(M3CError):
    code = "DUPLICATE_TURN"


class BadLetterError(M3CError):
    code = "BAD_LETTER"


class BadNumberError(M3CError):
    code = "BAD_NUMBER"


class BadLineError(M3CError):
    code = "BAD_LINE"


# --- evaluation ---

class EmptyCasesError(M3CError):
    code = "EMPTY_CASES"


class MissingGoldError(M3CError):
    code = "MISSING_GOLD"


class InsufficientTurnsError(M3CError):
    code = "INSUFFICIENT_TURNS"


# --- service ---

class NotYourTurnError(M3CError):
    code = "NOT_YOUR_TURN"


class SessionClosedError(M3CError):
    code = "SESSION_CLOSED"


class UnknownSessionError(M3CError):
    code = "UNKNOWN_SESSION"
