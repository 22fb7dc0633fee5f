"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CandorError(Exception):
    """Base class for all errors raised by this package."""


class DomainValidationError(CandorError):
    """A domain value violates one of its invariants."""


class StageLabelError(DomainValidationError):
    """Raised when a raw stage string cannot be parsed into a legal label set."""


class EmptyStages(StageLabelError):
    pass


class UnknownCode(StageLabelError):
    def __init__(self, code: str):
        super().__init__(f"unknown stage code: {code!r}")
        self.code = code


class TooManyStages(StageLabelError):
    pass


class IllegalStart(StageLabelError):
    pass


class IllegalEnd(StageLabelError):
    pass


class MalformedMarkup(DomainValidationError):
    """Speech markup is unbalanced, carries unknown tags, or lacks the wrapper."""


class StructureInvalid(CandorError):
    """Provider output did not match the requested structure, even after repair."""


class ProviderError(CandorError):
    """Base class for provider gateway failures."""


class ProviderUnavailable(ProviderError):
    """The remote capability could not be reached within the retry budget."""


class Timeout(ProviderUnavailable):
    pass


class HttpError(ProviderUnavailable):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"provider returned HTTP {status}: {detail}")
        self.status = status


class FixtureExhausted(ProviderError):
    """A scripted session consumed more entries than the fixture provides."""


class FixtureMismatch(ProviderError):
    """The next fixture entry is for a different capability than requested."""


class EmptyAudio(ProviderError):
    pass


class SessionError(CandorError):
    pass


class SessionNotFound(SessionError):
    pass


class SessionEnded(SessionError):
    pass


class TurnInFlight(SessionError):
    pass


class TooManySessions(SessionError):
    pass


class NoTurns(SessionError):
    pass


class InvalidCase(DomainValidationError):
    pass


class CorruptLog(CandorError):
    """Event log hash chain does not verify."""
