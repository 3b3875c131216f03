"""Corpus manifests, per-app scanning, and deterministic report emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .apk import extract_dex_files, extract_manifest_permissions, open_apk
from .dex import RAW_SCAN, STRING_POOL, HostCandidate, scan_dex, scan_hosts_structured
from .errors import EmptyInput, MalformedXml, TrackscanError, ZeroMean
from .kb import TrackerKB
from .matcher import AppProfile, profile_app
from .metrics import (
    DescriptiveStats,
    Level,
    PrevalenceTable,
    descriptive_stats,
    gini,
    pairwise_genre_distances,
    prevalence_table,
    ranking_from_prevalence,
    super_genre_map,
)

log = logging.getLogger(__name__)

MANIFEST_FIELDS = ("app_id", "apk_path", "hosts_path", "genre", "family_flag", "store")
HOST_THRESHOLD = 20
COMPANY_THRESHOLD = 10
COUNTRY_THRESHOLD = 1


class ManifestError(TrackscanError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    app_id: str
    genre: str
    family_flag: bool = False
    store: str = ""
    apk_path: Path | None = None
    hosts_path: Path | None = None


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"", "0", "false", "no", "n", "f"}


def read_manifest(path: str | Path) -> list[ManifestRow]:
    """Parse a corpus manifest CSV.  Relative paths resolve against its directory."""
    path = Path(path)
    base = path.parent
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"app_id", "genre"} - set(reader.fieldnames or ())
        if missing:
            raise ManifestError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        for rec in reader:
            lineno = reader.line_num
            app_id = (rec.get("app_id") or "").strip()
            if not app_id:
                raise ManifestError(f"{path}:{lineno}: empty app_id")
            if app_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate app_id {app_id!r}")
            seen.add(app_id)
            apk = (rec.get("apk_path") or "").strip()
            hosts = (rec.get("hosts_path") or "").strip()
            if bool(apk) == bool(hosts):
                raise ManifestError(
                    f"{path}:{lineno}: exactly one of apk_path/hosts_path must be set")
            flag = (rec.get("family_flag") or "").strip().lower()
            if flag not in _TRUE | _FALSE:
                raise ManifestError(f"{path}:{lineno}: bad family_flag {flag!r}")
            rows.append(ManifestRow(
                app_id=app_id,
                genre=(rec.get("genre") or "").strip(),
                family_flag=flag in _TRUE,
                store=(rec.get("store") or "").strip(),
                apk_path=base / apk if apk else None,
                hosts_path=base / hosts if hosts else None,
            ))
    return rows


def read_hosts_file(path: str | Path) -> list[HostCandidate]:
    """Host candidates from a pre-extracted list: one host or URL per line."""
    path = Path(path)
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return scan_hosts_structured(lines, path.name)


def scan_apk(
    path: str | Path,
    kb: TrackerKB,
    *,
    app_id: str | None = None,
    mode: str = STRING_POOL,
    paper_compat: bool = False,
    manifest_xml: str | bytes | None = None,
) -> AppProfile:
    """Extract candidates from every DEX in an APK and profile them.

    Permissions come from ``manifest_xml`` when given, otherwise from the
    archive's AndroidManifest.xml if that entry is plain-text XML.
    """
    archive = open_apk(path)
    candidates: list[HostCandidate] = []
    for blob in extract_dex_files(archive):
        candidates.extend(scan_dex(blob, mode))
    if manifest_xml is None and archive.last_entry("AndroidManifest.xml") is not None:
        raw = archive.read("AndroidManifest.xml")
        if raw.lstrip(b"\xef\xbb\xbf \t\r\n").startswith(b"<"):
            manifest_xml = raw
    permissions: list[str] = []
    if manifest_xml is not None:
        try:
            permissions = extract_manifest_permissions(manifest_xml)
        except MalformedXml as exc:
            log.warning("%s: unreadable manifest: %s", path, exc)
    return profile_app(app_id or Path(path).stem, candidates, kb,
                       paper_compat=paper_compat, permissions=permissions)


def emit_histogram(values: Iterable[int], bin_width: int) -> list[tuple[int, int, int]]:
    """``(low, high, count)`` for each non-empty bin ``[low, high)`` starting at 0."""
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    counts: dict[int, int] = {}
    n = 0
    for v in values:
        if v < 0:
            raise ValueError("histogram values must be non-negative")
        b = int(v) // bin_width
        counts[b] = counts.get(b, 0) + 1
        n += 1
    if n == 0:
        raise EmptyInput("emit_histogram needs at least one value")
    return [(b * bin_width, (b + 1) * bin_width, counts[b]) for b in sorted(counts)]


@dataclass
class AppResult:
    row: ManifestRow
    profile: AppProfile | None = None
    error: str | None = None


def _process(args: tuple[ManifestRow, TrackerKB, str, bool]) -> AppResult:
    row, kb, mode, paper_compat = args
    try:
        if row.hosts_path is not None:
            cands = read_hosts_file(row.hosts_path)
            profile = profile_app(row.app_id, cands, kb, paper_compat=paper_compat)
        else:
            assert row.apk_path is not None
            profile = scan_apk(row.apk_path, kb, app_id=row.app_id, mode=mode,
                               paper_compat=paper_compat)
    except (OSError, TrackscanError, KeyError) as exc:
        return AppResult(row, error=f"{type(exc).__name__}: {exc}")
    return AppResult(row, profile=profile)


def profile_corpus(rows: Sequence[ManifestRow], kb: TrackerKB, *, mode: str = STRING_POOL,
                   paper_compat: bool = False, jobs: int = 1) -> list[AppResult]:
    """Profile every manifest row; results keep manifest order whatever ``jobs`` is."""
    tasks = [(r, kb, mode, paper_compat) for r in rows]
    if jobs <= 1 or len(tasks) < 2:
        return [_process(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_process, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# --- report -----------------------------------------------------------------

def _pct(x: float) -> float:
    return round(x, 2)


def stats_dict(s: DescriptiveStats) -> dict:
    return {
        "n": s.n,
        "median": s.median,
        "q1": s.q1,
        "q3": s.q3,
        "threshold": s.threshold,
        "n_above_threshold": s.n_above_threshold,
        "pct_above_threshold": _pct(s.pct_above_threshold),
        "n_zero": s.n_zero,
        "pct_zero": _pct(s.pct_zero),
    }


def table_dict(t: PrevalenceTable) -> dict:
    return {
        "level": t.level.value,
        "corpus_size": t.corpus_size,
        "rows": [{"entity": r.entity, "apps_present": r.apps_present, "pct_apps": _pct(r.pct_apps)}
                 for r in t.rows],
    }


@dataclass
class CorpusReport:
    """Everything computed for one corpus run, plus the profiles behind it."""

    profiles: list[AppProfile]
    super_genres: dict[str, str]
    stores: dict[str, str]
    failures: list[tuple[str, str]] = field(default_factory=list)
    kb_version: str = ""
    top_k: int | None = 20
    tool_version: str = __version__

    def __post_init__(self) -> None:
        self.tables = {lvl: prevalence_table(self.profiles, lvl) for lvl in Level}

    def genre_profiles(self) -> dict[str, list[AppProfile]]:
        # genres whose apps all failed still get an (empty) entry
        groups: dict[str, list[AppProfile]] = {g: [] for g in self.super_genres.values()}
        for p in self.profiles:
            groups.setdefault(self.super_genres[p.app_id], []).append(p)
        return {g: groups[g] for g in sorted(groups)}

    def to_dict(self) -> dict:
        hosts = [p.host_count for p in self.profiles]
        comps = [len(p.companies) for p in self.profiles]
        countries = [len(p.countries) for p in self.profiles]

        def dist(values: list[int], threshold: int) -> dict | None:
            return stats_dict(descriptive_stats(values, threshold)) if values else None

        try:
            g = gini(hosts) if hosts else None
        except ZeroMean:
            g = None

        genres = {}
        genre_rankings = {}
        for name, members in self.genre_profiles().items():
            genres[name] = {
                "n_apps": len(members),
                "hosts": dist([p.host_count for p in members], HOST_THRESHOLD),
                "companies": dist([len(p.companies) for p in members], COMPANY_THRESHOLD),
                "subsidiary_prevalence": table_dict(prevalence_table(members, Level.SUBSIDIARY)),
                "country_prevalence": table_dict(prevalence_table(members, Level.COUNTRY)),
            }
            if members:
                genre_rankings[name] = ranking_from_prevalence(
                    prevalence_table(members, Level.SUBSIDIARY), self.top_k)

        reference = ranking_from_prevalence(self.tables[Level.SUBSIDIARY], self.top_k)
        distances = None
        if len(genre_rankings) >= 2:
            d = pairwise_genre_distances(genre_rankings, reference)
            distances = {
                "genres": sorted(genre_rankings),
                "vs_reference": d.vs_reference,
                "sum_pairwise": d.sum_pairwise,
                "matrix": d.matrix,
                "rankings": {k: list(v) for k, v in genre_rankings.items()},
                "reference": list(reference),
            }

        store_counts: dict[str, int] = {}
        for p in self.profiles:
            s = self.stores.get(p.app_id, "")
            store_counts[s] = store_counts.get(s, 0) + 1

        return {
            "tool_version": self.tool_version,
            "kb_version": self.kb_version,
            "n_apps": len(self.profiles),
            "n_failures": len(self.failures),
            "failures": [{"app_id": a, "reason": r} for a, r in self.failures],
            "stores": dict(sorted(store_counts.items())),
            "hosts": dist(hosts, HOST_THRESHOLD),
            "companies": dist(comps, COMPANY_THRESHOLD),
            "countries": dist(countries, COUNTRY_THRESHOLD),
            "gini_hosts": g,
            "prevalence": {lvl.value: table_dict(t) for lvl, t in self.tables.items()},
            "genres": genres,
            "genre_distances": distances,
            "top_k": self.top_k,
        }


def build_report(results: Sequence[AppResult], genre_map, *, kb_version: str = "",
                 top_k: int | None = 20) -> CorpusReport:
    profiles = []
    super_genres = {}
    stores = {}
    failures = []
    for res in results:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            super_genres[res.row.app_id] = super_genre_map(res.row.genre, genre_map,
                                                           res.row.family_flag)
        for w in caught:
            log.warning("%s: %s", res.row.app_id, w.message)
        stores[res.row.app_id] = res.row.store
        if res.profile is None:
            failures.append((res.row.app_id, res.error or "unknown error"))
        else:
            profiles.append(res.profile)
    return CorpusReport(profiles, super_genres, stores, failures, kb_version, top_k)


def analyze_corpus(manifest: str | Path, kb: TrackerKB, genre_map, *, mode: str = STRING_POOL,
                   paper_compat: bool = False, jobs: int = 1,
                   top_k: int | None = 20) -> CorpusReport:
    rows = read_manifest(manifest)
    results = profile_corpus(rows, kb, mode=mode, paper_compat=paper_compat, jobs=jobs)
    return build_report(results, genre_map, kb_version=kb.version, top_k=top_k)


def _csv(rows: Iterable[Sequence[object]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (f"{v:.2f}" if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def company_table_rows(report: CorpusReport, kb: TrackerKB) -> list[tuple]:
    """Root parents with their subsidiaries nested below, Table-1 style."""
    subs = report.tables[Level.SUBSIDIARY]
    rows = []
    for root in report.tables[Level.ROOT_PARENT].rows:
        children = [r for r in subs.rows if kb.ancestry(r.entity)[-1] == root.entity]
        for i, r in enumerate(children):
            rows.append((root.entity if i == 0 else "", root.pct_apps if i == 0 else None,
                         r.entity, r.pct_apps, kb.company(r.entity).country))
    return rows


def write_report(report: CorpusReport, out_dir: str | Path, kb: TrackerKB) -> dict[str, Path]:
    """Write report.json, profiles.jsonl and the CSV tables/histograms to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = report.to_dict()
    files: dict[str, str] = {
        "report.json": json.dumps(data, indent=2, sort_keys=True) + "\n",
        "profiles.jsonl": "".join(json.dumps(p.to_dict(), sort_keys=True) + "\n"
                                  for p in report.profiles),
    }
    for lvl, t in report.tables.items():
        files[f"prevalence_{lvl.value}.csv"] = _csv(
            ((r.entity, r.apps_present, r.pct_apps) for r in t.rows),
            ("entity", "apps_present", "pct_apps"))
    files["companies_table.csv"] = _csv(
        company_table_rows(report, kb),
        ("root_parent", "root_pct_apps", "subsidiary", "subsidiary_pct_apps", "country"))

    genre_rows = []
    for name, g in data["genres"].items():
        c = g["companies"]
        if c is None:
            genre_rows.append((name, 0, None, None, None, None, None))
            continue
        genre_rows.append((name, g["n_apps"], c["median"], c["q1"], c["q3"],
                           c["pct_above_threshold"], c["pct_zero"]))
    files["genre_stats.csv"] = _csv(
        genre_rows, ("super_genre", "n_apps", "median", "q1", "q3",
                     f"pct_above_{COMPANY_THRESHOLD}", "pct_zero"))
    gd = data["genre_distances"]
    if gd is not None:
        files["genre_distances.csv"] = _csv(
            ((g, f"{gd['vs_reference'][g]:.4f}", f"{gd['sum_pairwise'][g]:.4f}")
             for g in gd["genres"]), ("super_genre", "k_vs_all", "sum_k"))
    if report.profiles:
        for name, values in (
            ("hosts", [p.host_count for p in report.profiles]),
            ("companies", [len(p.companies) for p in report.profiles]),
            ("countries", [len(p.countries) for p in report.profiles]),
        ):
            files[f"histogram_{name}.csv"] = _csv(emit_histogram(values, 1),
                                                  ("bin_low", "bin_high", "count"))
    written = {}
    for name in sorted(files):
        path = out / name
        path.write_text(files[name], encoding="utf-8")
        written[name] = path
    return written


def check_report_consistency(data: dict) -> list[str]:
    """Recompute every percentage in a report dict from its count fields."""
    problems = []

    def check_stats(where: str, s: dict | None) -> None:
        if s is None:
            return
        for count, pct in (("n_above_threshold", "pct_above_threshold"), ("n_zero", "pct_zero")):
            if round(100.0 * s[count] / s["n"], 2) != s[pct]:
                problems.append(f"{where}.{pct}")

    def check_table(where: str, t: dict) -> None:
        for row in t["rows"]:
            if round(100.0 * row["apps_present"] / t["corpus_size"], 2) != row["pct_apps"]:
                problems.append(f"{where}.{row['entity']}")

    for key in ("hosts", "companies", "countries"):
        check_stats(key, data.get(key))
    for lvl, t in data["prevalence"].items():
        check_table(f"prevalence.{lvl}", t)
    for name, g in data["genres"].items():
        check_stats(f"genres.{name}.hosts", g["hosts"])
        check_stats(f"genres.{name}.companies", g["companies"])
        check_table(f"genres.{name}.subsidiary_prevalence", g["subsidiary_prevalence"])
        check_table(f"genres.{name}.country_prevalence", g["country_prevalence"])
    return problems


__all__ = [
    "AppResult", "CorpusReport", "ManifestError", "ManifestRow", "analyze_corpus",
    "build_report", "check_report_consistency", "emit_histogram", "profile_corpus",
    "read_hosts_file", "read_manifest", "scan_apk", "write_report", "RAW_SCAN", "STRING_POOL",
]
