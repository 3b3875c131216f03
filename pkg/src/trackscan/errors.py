"""Exception types raised across trackscan."""

from __future__ import annotations


class TrackscanError(Exception):
    """Base class for every error raised by this package."""


# --- APK container --------------------------------------------------------

class ApkError(TrackscanError):
    pass


class NotAZipContainer(ApkError):
    pass


class TruncatedArchive(ApkError):
    pass


class DecompressionError(ApkError):
    pass


class UnsupportedCompressionMethod(ApkError):
    pass


class MalformedXml(ApkError):
    pass


# --- DEX ------------------------------------------------------------------

class DexError(TrackscanError):
    pass


class BadMagic(DexError):
    pass


class BadEndianTag(DexError):
    pass


class TruncatedHeader(DexError):
    pass


class BoundsViolation(DexError):
    pass


class BadStringOffset(DexError):
    pass


class MissingNulTerminator(DexError):
    pass


class Mutf8DecodeError(DexError, ValueError):
    def __init__(self, reason: str, position: int):
        super().__init__(f"{reason} at byte {position}")
        self.reason = reason
        self.position = position


# --- knowledge base -------------------------------------------------------

class KBError(TrackscanError):
    pass


class ParseError(KBError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class UnknownCompanyReference(KBError):
    pass


class DuplicateDomain(KBError):
    pass


class OwnershipCycle(KBError):
    pass


class UnnormalizedDomain(KBError):
    pass


class UnknownCompany(KBError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


# --- matcher / metrics ----------------------------------------------------

class NoRegistrableDomain(TrackscanError, ValueError):
    pass


class EmptyInput(TrackscanError, ValueError):
    pass


class ZeroMean(TrackscanError, ValueError):
    pass


class UniverseTooSmall(UserWarning):
    """Two rankings share fewer than two items; their distance is reported as 0."""
