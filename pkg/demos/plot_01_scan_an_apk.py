"""
Scanning an APK for tracker hosts
=================================

Builds a tiny APK in memory, pulls host-shaped strings out of its bytecode
and attributes them to tracker companies using the bundled seed KB.
"""

# %%
# A minimal DEX file: header, string_ids table, then the string data items.
import io
import struct
import zipfile

from trackscan import dex, seed_kb
from trackscan.apk import extract_dex_files, open_apk
from trackscan.matcher import profile_app


def tiny_dex(strings):
    ids_end = 0x70 + 4 * len(strings)
    body, offsets = b"", []
    for s in strings:
        offsets.append(ids_end + len(body))
        body += dex.encode_uleb128(len(s.encode("utf-16-le")) // 2) + dex.encode_mutf8(s) + b"\0"
    header = bytearray(0x70)
    header[:8] = b"dex\n035\0"
    struct.pack_into("<III", header, 32, ids_end + len(body), 0x70, 0x12345678)
    struct.pack_into("<II", header, 56, len(strings), 0x70)
    return bytes(header) + b"".join(struct.pack("<I", o) for o in offsets) + body


strings = [
    "Lcom/example/MainActivity;",
    "https://data.flurry.com/aap",
    "googleads.g.doubleclick.net",
    "http://cdn.example.org/logo.png",
    "Unable to reach server",
]
buf = io.BytesIO()
with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
    zf.writestr("classes.dex", tiny_dex(strings))
    zf.writestr("res/raw/readme.txt", "not bytecode")

# %%
# Extract the bytecode and list host candidates in both scan modes.
archive = open_apk(io.BytesIO(buf.getvalue()))
print("entries:", archive.names())
blobs = extract_dex_files(archive)
for mode in (dex.STRING_POOL, dex.RAW_SCAN):
    found = [c for b in blobs for c in dex.scan_dex(b, mode)]
    print(f"{mode:12s}", [(c.source_offset, c.text) for c in found])

# %%
# Attribute the candidates. cdn.example.org is not in the KB and is ignored.
kb = seed_kb()
candidates = [c for b in blobs for c in dex.scan_dex(b, dex.STRING_POOL)]
profile = profile_app("com.example", candidates, kb)
print("tracker domains:", sorted(profile.tracker_domains))
print("companies:      ", sorted(profile.companies))
print("root parents:   ", sorted(profile.root_parents))
print("countries:      ", sorted(profile.countries))
