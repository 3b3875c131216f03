import json
import random

import pytest

from builders import build_apk, build_dex, write_synthetic_corpus
from trackscan.errors import EmptyInput
from trackscan.metrics import load_genre_map
from trackscan.report import (
    ManifestError,
    analyze_corpus,
    check_report_consistency,
    emit_histogram,
    read_hosts_file,
    read_manifest,
    scan_apk,
    write_report,
)

MANIFEST_XML = b"""<manifest xmlns:android="http://schemas.android.com/apk/res/android">
<uses-permission android:name="android.permission.INTERNET"/></manifest>"""


def test_histogram_hand_binned():
    assert emit_histogram([0, 1, 1, 5], 2) == [(0, 2, 3), (4, 6, 1)]


def test_histogram_single():
    assert emit_histogram([0], 1) == [(0, 1, 1)]


def test_histogram_conservation():
    rng = random.Random(3)
    for _ in range(200):
        values = [rng.randint(0, 50) for _ in range(rng.randint(1, 100))]
        width = rng.randint(1, 7)
        rows = emit_histogram(values, width)
        assert sum(c for _, _, c in rows) == len(values)
        for lo, hi, c in rows:
            assert hi - lo == width and lo % width == 0
            assert c == sum(lo <= v < hi for v in values)


def test_histogram_errors():
    with pytest.raises(EmptyInput):
        emit_histogram([], 1)
    with pytest.raises(ValueError):
        emit_histogram([1], 0)


def test_read_hosts_file(tmp_path):
    p = tmp_path / "h.txt"
    p.write_text("# comment\nhttps://ads.doubleclick.net/x\n\nflurry.com  # inline\n")
    assert [c.text for c in read_hosts_file(p)] == ["ads.doubleclick.net", "flurry.com"]


def test_manifest_validation(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("app_id,apk_path,hosts_path,genre,family_flag,store\n"
                 "a,x.apk,h.txt,Tools,false,US\n")
    with pytest.raises(ManifestError, match="exactly one"):
        read_manifest(m)
    m.write_text("app_id,apk_path,hosts_path,genre,family_flag,store\n"
                 "a,,h.txt,Tools,false,US\na,,h.txt,Tools,true,US\n")
    with pytest.raises(ManifestError, match="duplicate"):
        read_manifest(m)


def test_manifest_paths_relative(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("app_id,apk_path,hosts_path,genre,family_flag,store\n"
                 "a,,hosts/a.txt,Tools,yes,UK\n")
    (row,) = read_manifest(m)
    assert row.hosts_path == tmp_path / "hosts" / "a.txt"
    assert row.family_flag and row.store == "UK"


def test_scan_apk_profiles_seed_domains(tmp_path, kb):
    dex = build_dex(["https://googleads.g.doubleclick.net/pagead", "Lcom/flurry/Agent;",
                     "data.flurry.com", "hello world"]).data
    apk = tmp_path / "app.apk"
    apk.write_bytes(build_apk({"classes.dex": dex, "AndroidManifest.xml": MANIFEST_XML}))
    p = scan_apk(apk, kb)
    assert p.app_id == "app"
    assert p.tracker_domains == {"doubleclick.net", "flurry.com"}
    assert p.root_parents == {"alphabet", "verizon"}
    assert p.permissions == ["android.permission.INTERNET"]
    raw = scan_apk(apk, kb, mode="raw_scan")
    assert raw.tracker_domains == p.tracker_domains


def test_binary_manifest_ignored(tmp_path, kb):
    apk = tmp_path / "app.apk"
    apk.write_bytes(build_apk({"classes.dex": build_dex(["flurry.com"]).data,
                               "AndroidManifest.xml": b"\x03\x00\x08\x00binary"}))
    assert scan_apk(apk, kb).permissions == []


@pytest.fixture
def corpus(tmp_path, kb):
    truth = write_synthetic_corpus(tmp_path / "c", kb.domains, n_apps=40, seed=5,
                                   broken={"com.synthetic.app007"})
    return tmp_path / "c" / "manifest.csv", truth


def test_corpus_partial_failure(corpus, kb):
    manifest, truth = corpus
    report = analyze_corpus(manifest, kb, load_genre_map())
    assert len(report.profiles) == 39
    assert [a for a, _ in report.failures] == ["com.synthetic.app007"]
    for p in report.profiles:
        assert p.tracker_domains == truth[p.app_id][1]


def test_corpus_report_consistency(corpus, kb):
    manifest, _ = corpus
    data = analyze_corpus(manifest, kb, load_genre_map()).to_dict()
    assert check_report_consistency(data) == []
    assert set(data["genres"]) == {"Games & Entertainment", "News", "Productivity & Tools",
                                   "Education"}
    assert data["stores"] == {"UK": 20, "US": 19}


def test_consistency_check_detects_tampering(corpus, kb):
    manifest, _ = corpus
    data = analyze_corpus(manifest, kb, load_genre_map()).to_dict()
    data["prevalence"]["root_parent"]["rows"][0]["pct_apps"] += 0.01
    assert check_report_consistency(data) == ["prevalence.root_parent." +
                                              data["prevalence"]["root_parent"]["rows"][0]["entity"]]


def test_write_report_is_deterministic(corpus, kb, tmp_path):
    manifest, _ = corpus
    outs = []
    for i, jobs in enumerate((1, 2)):
        report = analyze_corpus(manifest, kb, load_genre_map(), jobs=jobs)
        files = write_report(report, tmp_path / f"out{i}", kb)
        outs.append({name: path.read_bytes() for name, path in files.items()})
    assert outs[0] == outs[1]
    assert {"report.json", "profiles.jsonl", "prevalence_subsidiary.csv",
            "prevalence_root_parent.csv", "prevalence_country.csv", "companies_table.csv",
            "genre_stats.csv", "genre_distances.csv", "histogram_hosts.csv",
            "histogram_companies.csv", "histogram_countries.csv"} <= set(outs[0])
    data = json.loads(outs[0]["report.json"])
    assert data["kb_version"] == "seed-2018.1"


def test_companies_table_nests_subsidiaries(corpus, kb, tmp_path):
    manifest, _ = corpus
    report = analyze_corpus(manifest, kb, load_genre_map())
    files = write_report(report, tmp_path / "o", kb)
    lines = files["companies_table.csv"].read_text().splitlines()
    assert lines[0] == "root_parent,root_pct_apps,subsidiary,subsidiary_pct_apps,country"
    current_root_pct = None
    for line in lines[1:]:
        root, root_pct, sub, sub_pct, country = line.split(",")
        if root:
            current_root_pct = float(root_pct)
        assert float(sub_pct) <= current_root_pct


def test_all_failed_genre_still_listed(tmp_path, kb):
    m = tmp_path / "m.csv"
    (tmp_path / "a.txt").write_text("flurry.com\n")
    m.write_text("app_id,apk_path,hosts_path,genre,family_flag,store\n"
                 "a,,a.txt,Tools,false,US\nb,,missing.txt,Comics,false,US\n")
    data = analyze_corpus(m, kb, load_genre_map()).to_dict()
    assert data["genres"]["Games & Entertainment"]["n_apps"] == 0
    assert data["genres"]["Games & Entertainment"]["hosts"] is None
    assert data["n_failures"] == 1
