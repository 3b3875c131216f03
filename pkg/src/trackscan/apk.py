"""Reading APK containers: entry listing, DEX extraction, manifest permissions."""

from __future__ import annotations

import os
import re
import warnings
import zipfile
import zlib
from dataclasses import dataclass, field
from typing import BinaryIO, Union
from xml.etree import ElementTree

from .errors import (
    DecompressionError,
    MalformedXml,
    NotAZipContainer,
    TruncatedArchive,
    UnsupportedCompressionMethod,
)

ANDROID_NS = "http://schemas.android.com/apk/res/android"
DEX_NAME_RE = re.compile(r"classes([0-9]*)\.dex")

STORED = "stored"
DEFLATE = "deflate"
_METHODS = {zipfile.ZIP_STORED: STORED, zipfile.ZIP_DEFLATED: DEFLATE}

PathOrFile = Union[str, "os.PathLike[str]", BinaryIO]


@dataclass(frozen=True)
class ApkEntry:
    name: str
    compressed_size: int
    uncompressed_size: int
    method: str
    supported: bool
    # position in the central directory; disambiguates duplicate names
    index: int


@dataclass
class ApkArchive:
    source_path: str
    entries: list[ApkEntry] = field(default_factory=list)
    _source: PathOrFile | None = field(default=None, repr=False, compare=False)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def duplicates(self) -> list[str]:
        seen: set[str] = set()
        dups: list[str] = []
        for e in self.entries:
            if e.name in seen and e.name not in dups:
                dups.append(e.name)
            seen.add(e.name)
        return dups

    def last_entry(self, name: str) -> ApkEntry | None:
        found = None
        for e in self.entries:
            if e.name == name:
                found = e
        return found

    def read(self, name: str) -> bytes:
        """Decompress one entry (the last one, if the name is duplicated)."""
        entry = self.last_entry(name)
        if entry is None:
            raise KeyError(name)
        if self.duplicates() and name in self.duplicates():
            warnings.warn(f"{self.source_path}: duplicate entry {name!r}, using the last one",
                          stacklevel=2)
        return _read_entry(self, entry)


def _open_zip(source: PathOrFile) -> zipfile.ZipFile:
    if hasattr(source, "seek"):
        source.seek(0)  # type: ignore[union-attr]
    try:
        return zipfile.ZipFile(source, "r")  # type: ignore[arg-type]
    except zipfile.BadZipFile as exc:
        msg = str(exc)
        if "not a zip file" in msg.lower():
            raise NotAZipContainer(msg) from exc
        raise TruncatedArchive(msg) from exc
    except (EOFError, ValueError) as exc:
        raise TruncatedArchive(str(exc)) from exc


def open_apk(path: PathOrFile) -> ApkArchive:
    """List the entries of an APK without decompressing any payload.

    ``path`` may also be a seekable binary file object; the archive then keeps
    a reference to it for later extraction.
    """
    if isinstance(path, (str, os.PathLike)):
        source_path = os.fspath(path)
        source: PathOrFile = source_path
        # raise the plain OSError for missing/unreadable files
        with open(source_path, "rb"):
            pass
    else:
        source_path = getattr(path, "name", "<stream>")
        source = path
    with _open_zip(source) as zf:
        entries = [
            ApkEntry(
                name=info.filename,
                compressed_size=info.compress_size,
                uncompressed_size=info.file_size,
                method=_METHODS.get(info.compress_type, f"method-{info.compress_type}"),
                supported=info.compress_type in _METHODS,
                index=i,
            )
            for i, info in enumerate(zf.infolist())
        ]
    return ApkArchive(source_path=str(source_path), entries=entries, _source=source)


def _read_entry(archive: ApkArchive, entry: ApkEntry) -> bytes:
    if not entry.supported:
        raise UnsupportedCompressionMethod(
            f"{archive.source_path}: {entry.name} uses unsupported {entry.method}")
    source = archive._source if archive._source is not None else archive.source_path
    with _open_zip(source) as zf:
        info = zf.infolist()[entry.index]
        try:
            with zf.open(info) as fh:
                return fh.read()
        except (zlib.error, EOFError, zipfile.BadZipFile) as exc:
            raise DecompressionError(f"{archive.source_path}: {entry.name}: {exc}") from exc


def _dex_sort_key(name: str) -> tuple[int, str]:
    m = DEX_NAME_RE.fullmatch(name)
    assert m is not None
    return (int(m.group(1)) if m.group(1) else 1, name)


@dataclass(frozen=True)
class DexBlob:
    entry_name: str
    data: bytes

    def __len__(self) -> int:
        return len(self.data)


def extract_dex_files(archive: ApkArchive) -> list[DexBlob]:
    """Decompress every top-level ``classes[N].dex`` entry, classes.dex first."""
    names = sorted({e.name for e in archive.entries if DEX_NAME_RE.fullmatch(e.name)},
                   key=_dex_sort_key)
    dups = set(archive.duplicates())
    blobs = []
    for name in names:
        if name in dups:
            warnings.warn(f"{archive.source_path}: duplicate entry {name!r}, using the last one",
                          stacklevel=2)
        entry = archive.last_entry(name)
        assert entry is not None
        blobs.append(DexBlob(name, _read_entry(archive, entry)))
    return blobs


def extract_manifest_permissions(manifest_xml: str | bytes) -> list[str]:
    """Return ``uses-permission`` names from a decoded (text) AndroidManifest.xml.

    Duplicates are dropped, keeping document order of first occurrence.
    """
    try:
        root = ElementTree.fromstring(manifest_xml)
    except ElementTree.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    perms: dict[str, None] = {}
    for el in root.iter():
        if el.tag != "uses-permission":
            continue
        name = el.get(f"{{{ANDROID_NS}}}name") or el.get("name")
        if name:
            perms.setdefault(name, None)
    return list(perms)
