"""DEX header and string-pool parsing, MUTF-8, and hostname extraction.

Two extraction modes exist.  ``string_pool`` walks the string_ids table and
scans each decoded string; ``raw_scan`` runs the same hostname grammar over
the undecoded bytes of the file, the way a plain regex over bytecode would.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

from .apk import DexBlob
from .errors import (
    BadEndianTag,
    BadMagic,
    BadStringOffset,
    BoundsViolation,
    MissingNulTerminator,
    Mutf8DecodeError,
    TruncatedHeader,
)

HEADER_SIZE = 0x70
ENDIAN_CONSTANT = 0x12345678
REVERSE_ENDIAN_CONSTANT = 0x78563412
MAX_HOST_LENGTH = 253

STRING_POOL = "string_pool"
RAW_SCAN = "raw_scan"

# (label ".")+ tld; the lookbehind keeps a match from starting mid-label and
# the lookahead rejects TLD-shaped prefixes of longer labels ("coming").
_HOST_PATTERN = (
    r"(?<![a-z0-9])"
    r"(?:[a-z0-9](?:[a-z0-9-]*[a-z0-9])?\.)+"
    r"[a-z]{2,}"
    r"(?![a-z0-9-])"
)
HOST_RE = re.compile(_HOST_PATTERN, re.IGNORECASE | re.ASCII)
HOST_BYTES_RE = re.compile(_HOST_PATTERN.encode(), re.IGNORECASE)


@dataclass(frozen=True)
class DexHeader:
    version: int
    checksum: int
    file_size: int
    header_size: int
    endian_tag: int
    string_ids_size: int
    string_ids_off: int


@dataclass(frozen=True, order=True)
class HostCandidate:
    source_offset: int
    text: str
    source_entry: str
    mode: str


def _data(blob: DexBlob | bytes) -> bytes:
    return blob.data if isinstance(blob, DexBlob) else bytes(blob)


def parse_dex_header(blob: DexBlob | bytes) -> DexHeader:
    data = _data(blob)
    if len(data) < 8 or data[:4] != b"dex\n" or data[7] != 0 or not data[4:7].isdigit():
        raise BadMagic(f"bad DEX magic {data[:8]!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedHeader(f"DEX header needs {HEADER_SIZE} bytes, got {len(data)}")

    (checksum,) = struct.unpack_from("<I", data, 8)
    file_size, header_size, endian_tag = struct.unpack_from("<III", data, 32)
    string_ids_size, string_ids_off = struct.unpack_from("<II", data, 56)

    if endian_tag != ENDIAN_CONSTANT:
        kind = "reverse-endian" if endian_tag == REVERSE_ENDIAN_CONSTANT else "unknown"
        raise BadEndianTag(f"{kind} endian tag {endian_tag:#010x}")
    end = string_ids_off + 4 * string_ids_size
    if string_ids_size and (end > file_size or end > len(data) or string_ids_off < HEADER_SIZE):
        raise BoundsViolation(
            f"string_ids [{string_ids_off:#x}, {end:#x}) outside file of {file_size} bytes")
    return DexHeader(
        version=int(data[4:7]),
        checksum=checksum,
        file_size=file_size,
        header_size=header_size,
        endian_tag=endian_tag,
        string_ids_size=string_ids_size,
        string_ids_off=string_ids_off,
    )


def read_uleb128(data: bytes, offset: int) -> tuple[int, int]:
    """Decode a ULEB128 value; returns ``(value, next_offset)``."""
    result = 0
    shift = 0
    for i in range(5):
        if offset + i >= len(data):
            raise BadStringOffset(f"ULEB128 at {offset:#x} runs past end of data")
        byte = data[offset + i]
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, offset + i + 1
        shift += 7
    raise BadStringOffset(f"ULEB128 at {offset:#x} longer than 5 bytes")


def encode_uleb128(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def encode_mutf8(text: str) -> bytes:
    """Encode as MUTF-8: NUL as C0 80, supplementary characters as surrogate pairs."""
    out = bytearray()
    for ch in text:
        cp = ord(ch)
        if cp == 0:
            out += b"\xc0\x80"
        elif cp < 0x80:
            out.append(cp)
        elif cp < 0x800:
            out += bytes((0xC0 | cp >> 6, 0x80 | cp & 0x3F))
        elif cp < 0x10000:
            out += bytes((0xE0 | cp >> 12, 0x80 | cp >> 6 & 0x3F, 0x80 | cp & 0x3F))
        else:
            cp -= 0x10000
            for unit in (0xD800 | cp >> 10, 0xDC00 | cp & 0x3FF):
                out += bytes((0xE0 | unit >> 12, 0x80 | unit >> 6 & 0x3F, 0x80 | unit & 0x3F))
    return bytes(out)


def _decode_mutf8_slow(data: bytes) -> str:
    units: list[int] = []
    starts: list[int] = []
    i = 0
    n = len(data)
    while i < n:
        b0 = data[i]
        starts.append(i)
        if b0 < 0x80:
            units.append(b0)
            i += 1
        elif 0xC0 <= b0 < 0xE0:
            if i + 1 >= n or data[i + 1] & 0xC0 != 0x80:
                raise Mutf8DecodeError("invalid continuation byte", i + 1)
            units.append((b0 & 0x1F) << 6 | data[i + 1] & 0x3F)
            i += 2
        elif 0xE0 <= b0 < 0xF0:
            if i + 2 >= n or data[i + 1] & 0xC0 != 0x80 or data[i + 2] & 0xC0 != 0x80:
                raise Mutf8DecodeError("invalid continuation byte", i + 1)
            units.append((b0 & 0x0F) << 12 | (data[i + 1] & 0x3F) << 6 | data[i + 2] & 0x3F)
            i += 3
        else:
            raise Mutf8DecodeError(f"invalid lead byte {b0:#04x}", i)

    chars = []
    k = 0
    while k < len(units):
        u = units[k]
        if 0xD800 <= u < 0xDC00:
            if k + 1 < len(units) and 0xDC00 <= units[k + 1] < 0xE000:
                chars.append(chr(0x10000 + ((u - 0xD800) << 10) + (units[k + 1] - 0xDC00)))
                k += 2
                continue
            raise Mutf8DecodeError("unpaired high surrogate", starts[k])
        if 0xDC00 <= u < 0xE000:
            raise Mutf8DecodeError("unpaired low surrogate", starts[k])
        chars.append(chr(u))
        k += 1
    return "".join(chars)


def decode_mutf8(data: bytes) -> str:
    if data.isascii() and b"\x00" not in data:
        return data.decode("ascii")
    # MUTF-8 equals UTF-8 when there is no encoded NUL and no surrogate
    if b"\xc0" not in data and b"\xed" not in data and max(data) < 0xF0:
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError:
            pass
    return _decode_mutf8_slow(data)


def string_pool_entries(blob: DexBlob | bytes) -> list[tuple[int, str]]:
    """Return ``(data_offset, text)`` for each string_id, in table order.

    ``data_offset`` is the file offset of the first MUTF-8 byte, after the
    ULEB128 length prefix.
    """
    data = _data(blob)
    header = parse_dex_header(data)
    ids = struct.unpack_from(f"<{header.string_ids_size}I", data, header.string_ids_off)
    limit = min(len(data), header.file_size)
    out = []
    for idx, off in enumerate(ids):
        if off >= limit or off < HEADER_SIZE:
            raise BadStringOffset(f"string_id[{idx}] points to {off:#x}, file is {limit} bytes")
        _utf16_len, start = read_uleb128(data, off)
        end = data.find(b"\x00", start, limit)
        if end < 0:
            raise MissingNulTerminator(f"string_id[{idx}] at {off:#x} has no NUL terminator")
        try:
            text = decode_mutf8(data[start:end])
        except Mutf8DecodeError as exc:
            raise Mutf8DecodeError(f"string_id[{idx}]: {exc.reason}", start + exc.position) from exc
        out.append((start, text))
    return out


def extract_string_pool(blob: DexBlob | bytes) -> list[str]:
    return [text for _off, text in string_pool_entries(blob)]


def _valid_host(text: str) -> bool:
    return len(text) <= MAX_HOST_LENGTH


def scan_hosts_structured(
    strings: Iterable[str],
    source_entry: str,
    offsets: Sequence[int] | None = None,
) -> list[HostCandidate]:
    """Find hostname-shaped substrings in decoded strings.

    ``offsets`` gives the file offset of each string's first byte (as from
    :func:`string_pool_entries`).  Without it, offsets are positions in the
    MUTF-8 encoding of the strings laid end to end with NUL separators.
    """
    found = []
    running = 0
    for idx, s in enumerate(strings):
        if offsets is not None:
            base = offsets[idx]
        else:
            base = running
            running += len(encode_mutf8(s)) + 1
        for m in HOST_RE.finditer(s):
            text = m.group().lower()
            if not _valid_host(text):
                continue
            pos = base + (m.start() if s.isascii() else len(encode_mutf8(s[: m.start()])))
            found.append(HostCandidate(pos, text, source_entry, STRING_POOL))
    found.sort()
    return found


def scan_hosts_raw(blob: DexBlob | bytes, source_entry: str | None = None) -> list[HostCandidate]:
    """Scan undecoded bytes for ASCII hostname runs; no DEX structure needed."""
    data = _data(blob)
    if source_entry is None:
        source_entry = blob.entry_name if isinstance(blob, DexBlob) else ""
    found = []
    for m in HOST_BYTES_RE.finditer(data):
        text = m.group().decode("ascii").lower()
        if _valid_host(text):
            found.append(HostCandidate(m.start(), text, source_entry, RAW_SCAN))
    return found


def scan_dex(blob: DexBlob, mode: str = STRING_POOL) -> list[HostCandidate]:
    if mode == STRING_POOL:
        entries = string_pool_entries(blob)
        return scan_hosts_structured(
            [t for _o, t in entries], blob.entry_name, [o for o, _t in entries])
    if mode == RAW_SCAN:
        return scan_hosts_raw(blob)
    raise ValueError(f"unknown scan mode {mode!r}")
