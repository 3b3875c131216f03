import io
import zipfile
import zlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import LoggingReader, build_apk, build_dex, list_central_directory, payload_ranges, raw_zip
from trackscan.apk import extract_dex_files, extract_manifest_permissions, open_apk
from trackscan.errors import (
    DecompressionError,
    MalformedXml,
    NotAZipContainer,
    TruncatedArchive,
    UnsupportedCompressionMethod,
)

MANIFEST = """<?xml version="1.0" encoding="utf-8"?>
<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="com.example.app">
    <uses-permission android:name="android.permission.INTERNET" />
    <uses-permission android:name="android.permission.ACCESS_FINE_LOCATION" />
    <application android:label="x" />
</manifest>
"""


@pytest.fixture
def minimal_apk(tmp_path):
    path = tmp_path / "minimal.apk"
    path.write_bytes(build_apk({"classes.dex": build_dex(["hello"]).data}))
    return path


def test_open_minimal_apk(minimal_apk):
    archive = open_apk(minimal_apk)
    assert archive.names() == ["classes.dex"]
    reference = list_central_directory(minimal_apk.read_bytes())
    assert [(e.name, 8, e.compressed_size, e.uncompressed_size) for e in archive.entries] == reference
    assert archive.entries[0].method == "deflate"


def test_open_empty_zip(tmp_path):
    path = tmp_path / "empty.apk"
    with zipfile.ZipFile(path, "w"):
        pass
    assert open_apk(path).entries == []


def test_text_file_is_not_a_zip(tmp_path):
    path = tmp_path / "notes.apk"
    path.write_text("just some text, no container here\n")
    with pytest.raises(NotAZipContainer):
        open_apk(path)


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        open_apk(tmp_path / "nope.apk")


def test_truncated_central_directory(tmp_path):
    data = build_apk({"classes.dex": build_dex(["a"]).data, "res/x": b"1" * 100})
    eocd = data.rfind(b"PK\x05\x06")
    # chop the central directory but keep the end record
    cd_start = data.rfind(b"PK\x01\x02")
    broken = data[:cd_start + 10] + data[eocd:]
    path = tmp_path / "trunc.apk"
    path.write_bytes(broken)
    with pytest.raises(TruncatedArchive):
        open_apk(path)


def test_extract_multidex_order(tmp_path):
    d1, d2, d10 = (build_dex([s]).data for s in ("one", "two", "ten"))
    path = tmp_path / "multi.apk"
    path.write_bytes(build_apk({"classes10.dex": d10, "classes2.dex": d2, "classes.dex": d1,
                                "assets/classes3.dex": b"x", "AndroidManifest.xml": b"\x03\x00"}))
    blobs = extract_dex_files(open_apk(path))
    assert [b.entry_name for b in blobs] == ["classes.dex", "classes2.dex", "classes10.dex"]
    assert [b.data for b in blobs] == [d1, d2, d10]


def test_no_dex_entries(tmp_path):
    path = tmp_path / "nodex.apk"
    path.write_bytes(build_apk({"res/raw/a.txt": b"abc"}))
    assert extract_dex_files(open_apk(path)) == []


def test_truncated_deflate_stream(tmp_path):
    dex = build_dex(["https://ads.example.com/v1"] * 50).data
    comp = zlib.compressobj(9, zlib.DEFLATED, -15)
    c = comp.compress(dex) + comp.flush()
    path = tmp_path / "corrupt.apk"
    path.write_bytes(raw_zip([("classes.dex", dex, 8, c[: len(c) // 2])]))
    archive = open_apk(path)
    with pytest.raises(DecompressionError):
        extract_dex_files(archive)


def test_unsupported_method_is_flagged_not_fatal(tmp_path):
    dex = build_dex(["x"]).data
    path = tmp_path / "bz.apk"
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("classes.dex", dex, compress_type=zipfile.ZIP_DEFLATED)
        zf.writestr("assets/blob.bin", b"y" * 1000, compress_type=zipfile.ZIP_BZIP2)
    path.write_bytes(buf.getvalue())
    archive = open_apk(path)
    flags = {e.name: e.supported for e in archive.entries}
    assert flags == {"classes.dex": True, "assets/blob.bin": False}
    assert [b.data for b in extract_dex_files(archive)] == [dex]


def test_unsupported_method_on_dex_raises(tmp_path):
    path = tmp_path / "lz.apk"
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("classes.dex", build_dex(["x"]).data, compress_type=zipfile.ZIP_LZMA)
    path.write_bytes(buf.getvalue())
    with pytest.raises(UnsupportedCompressionMethod):
        extract_dex_files(open_apk(path))


def test_duplicate_entries_listed_and_last_wins(tmp_path):
    first, last = build_dex(["first"]).data, build_dex(["last"]).data
    path = tmp_path / "dup.apk"
    path.write_bytes(raw_zip([("classes.dex", first, 8, None), ("classes.dex", last, 0, None)]))
    archive = open_apk(path)
    assert archive.names() == ["classes.dex", "classes.dex"]
    assert archive.duplicates() == ["classes.dex"]
    with pytest.warns(UserWarning, match="duplicate"):
        blobs = extract_dex_files(archive)
    assert [b.data for b in blobs] == [last]


def test_open_reads_no_payload_bytes():
    data = build_apk({"classes.dex": build_dex(["a.b.com"] * 200).data,
                      "classes2.dex": build_dex(["c.d.com"] * 200).data})
    ranges = payload_ranges(data)
    reader = LoggingReader(data)
    archive = open_apk(reader)
    for pos, length in reader.reads:
        for start, end in ranges.values():
            assert pos + length <= start or pos >= end, (pos, length)
    # extraction afterwards does touch them
    reader.reads.clear()
    extract_dex_files(archive)
    touched = [(p, n) for p, n in reader.reads if any(p < e and p + n > s for s, e in ranges.values())]
    assert touched


@settings(max_examples=30, deadline=None)
@given(st.lists(st.binary(min_size=0, max_size=2000), min_size=1, max_size=4),
       st.sampled_from([zipfile.ZIP_STORED, zipfile.ZIP_DEFLATED]))
def test_round_trip_bytes(payloads, method):
    files = {("classes.dex" if i == 0 else f"classes{i + 1}.dex"): p for i, p in enumerate(payloads)}
    archive = open_apk(io.BytesIO(build_apk(files, method)))
    assert [b.data for b in extract_dex_files(archive)] == payloads


def test_order_depends_on_names_only(tmp_path):
    blobs = {f"classes{n}.dex" if n > 1 else "classes.dex": build_dex([str(n)]).data for n in (1, 2, 3)}
    orders = []
    for names in (["classes3.dex", "classes.dex", "classes2.dex"],
                  ["classes2.dex", "classes3.dex", "classes.dex"]):
        archive = open_apk(io.BytesIO(build_apk({n: blobs[n] for n in names})))
        orders.append([b.entry_name for b in extract_dex_files(archive)])
    assert orders[0] == orders[1] == ["classes.dex", "classes2.dex", "classes3.dex"]


def test_manifest_permissions():
    assert extract_manifest_permissions(MANIFEST) == [
        "android.permission.INTERNET", "android.permission.ACCESS_FINE_LOCATION"]


def test_manifest_without_permissions():
    assert extract_manifest_permissions('<manifest package="x"><application/></manifest>') == []


def test_manifest_duplicate_permission_listed_once():
    doubled = MANIFEST.replace("<application", '<uses-permission android:name="android.permission.INTERNET" />\n<application')
    assert extract_manifest_permissions(doubled) == [
        "android.permission.INTERNET", "android.permission.ACCESS_FINE_LOCATION"]


def test_malformed_manifest():
    with pytest.raises(MalformedXml):
        extract_manifest_permissions("<manifest><uses-permission></manifest>")
