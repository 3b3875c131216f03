"""Tracker knowledge base: domain ownership, parent companies, countries.

A KB lives in a directory holding two CSV files::

    domains.csv    domain,company_id
    companies.csv  company_id,display_name,parent_id,country

An empty ``parent_id`` marks a root parent.  Either file may start with a
``# version: <string>`` comment line.  An optional ``suffixes.txt`` next to
them overrides the bundled public-suffix snapshot.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping

from .errors import (
    DuplicateDomain,
    KBError,
    NoRegistrableDomain,
    OwnershipCycle,
    ParseError,
    UnknownCompany,
    UnknownCompanyReference,
    UnnormalizedDomain,
)
from .suffixes import SuffixList, default_suffix_list, load_suffix_list, normalize_host

DOMAINS_HEADER = ["domain", "company_id"]
COMPANIES_HEADER = ["company_id", "display_name", "parent_id", "country"]
KB_DIR_ENV = "TRACKSCAN_KB_DIR"

_COUNTRY_RE = re.compile(r"[A-Z]{2}")
_VERSION_RE = re.compile(r"#\s*version\s*[:=]?\s*(.*\S)", re.IGNORECASE)


@dataclass(frozen=True)
class Company:
    id: str
    display_name: str
    parent_id: str | None
    country: str


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.subject}: {self.detail}"


@dataclass(frozen=True)
class TrackerKB:
    companies: Mapping[str, Company]
    domains: Mapping[str, str]
    version: str = ""
    suffixes: SuffixList = field(default_factory=default_suffix_list, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "companies", MappingProxyType(dict(self.companies)))
        object.__setattr__(self, "domains", MappingProxyType(dict(self.domains)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrackerKB):
            return NotImplemented
        return (dict(self.companies) == dict(other.companies)
                and dict(self.domains) == dict(other.domains)
                and self.version == other.version)

    def __reduce__(self):
        return (TrackerKB, (dict(self.companies), dict(self.domains), self.version,
                            frozenset(self.suffixes)))

    def company(self, company_id: str) -> Company:
        try:
            return self.companies[company_id]
        except KeyError:
            raise UnknownCompany(f"unknown company {company_id!r}") from None

    def ancestry(self, company_id: str) -> list[str]:
        """``company_id`` followed by each parent up to the root."""
        chain = [company_id]
        seen = {company_id}
        parent = self.company(company_id).parent_id
        while parent is not None:
            if parent in seen:
                raise OwnershipCycle(f"ownership cycle through {parent!r}")
            chain.append(parent)
            seen.add(parent)
            parent = self.company(parent).parent_id
        return chain

    def root_parents(self) -> list[str]:
        return sorted(c.id for c in self.companies.values() if c.parent_id is None)


def resolve_company(kb: TrackerKB, domain: str) -> str | None:
    return kb.domains.get(domain)


def root_parent(kb: TrackerKB, company_id: str) -> str:
    return kb.ancestry(company_id)[-1]


def company_country(kb: TrackerKB, company_id: str) -> str:
    return kb.company(company_id).country


def validate_kb(kb: TrackerKB) -> list[Violation]:
    """Check every KB invariant; an empty list means the KB is valid."""
    out: list[Violation] = []
    companies = kb.companies
    for cid in sorted(companies):
        c = companies[cid]
        if not cid:
            out.append(Violation("ParseError", repr(cid), "empty company id"))
        if not _COUNTRY_RE.fullmatch(c.country or ""):
            out.append(Violation("InvalidCountry", cid,
                                 f"country {c.country!r} is not an ISO 3166-1 alpha-2 code"))
        if c.parent_id is not None and c.parent_id not in companies:
            out.append(Violation("UnknownCompanyReference", cid,
                                 f"parent {c.parent_id!r} does not exist"))
    out.extend(_cycles(companies))
    for domain in sorted(kb.domains):
        cid = kb.domains[domain]
        try:
            normal = normalize_host(domain, kb.suffixes)
        except NoRegistrableDomain as exc:
            normal = None
            reason = str(exc)
        else:
            reason = f"normalizes to {normal!r}"
        if normal != domain:
            out.append(Violation("UnnormalizedDomain", domain, reason))
        if cid not in companies:
            out.append(Violation("UnknownCompanyReference", domain,
                                 f"company {cid!r} does not exist"))
    return out


def _cycles(companies: Mapping[str, Company]) -> list[Violation]:
    # colour walk: 0 unseen, 1 on current path, 2 finished
    state: dict[str, int] = {}
    out = []
    for start in sorted(companies):
        path = []
        node: str | None = start
        while node is not None and node in companies and state.get(node, 0) == 0:
            state[node] = 1
            path.append(node)
            node = companies[node].parent_id
        if node is not None and state.get(node) == 1:
            cycle = path[path.index(node):]
            out.append(Violation("OwnershipCycle", node,
                                 " -> ".join(cycle + [node])))
        for p in path:
            state[p] = 2
    return out


_ERRORS = {
    "UnknownCompanyReference": UnknownCompanyReference,
    "OwnershipCycle": OwnershipCycle,
    "UnnormalizedDomain": UnnormalizedDomain,
    "DuplicateDomain": DuplicateDomain,
}


def _rows(text: str, path: str, header: list[str]) -> tuple[str, Iterator[tuple[int, list[str]]]]:
    """Split off comment lines (returning the version) and yield numbered CSV rows."""
    version = ""
    lines = text.splitlines()
    data_lines: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines, start=1):
        if line.lstrip().startswith("#"):
            m = _VERSION_RE.match(line.strip())
            if m and not version:
                version = m.group(1)
            continue
        if line.strip():
            data_lines.append((lineno, line))
    if not data_lines:
        return version, iter(())
    first_no, first = data_lines[0]
    got = [h.strip() for h in next(csv.reader([first]))]
    if got != header:
        raise ParseError(f"expected header {','.join(header)}, got {first!r}", path, first_no)

    def gen() -> Iterator[tuple[int, list[str]]]:
        for lineno, line in data_lines[1:]:
            row = next(csv.reader([line]))
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            yield lineno, [f.strip() for f in row]

    return version, gen()


def parse_kb(domains_text: str, companies_text: str, *, suffixes: SuffixList | None = None,
             domains_name: str = "domains.csv",
             companies_name: str = "companies.csv", validate: bool = True) -> TrackerKB:
    """Build a KB from CSV text.

    With ``validate`` (the default) any violation aborts the load.  Without it
    the KB is returned as parsed so :func:`validate_kb` can list every problem;
    malformed rows and duplicate domains still raise.
    """
    if suffixes is None:
        suffixes = default_suffix_list()
    cversion, crows = _rows(companies_text, companies_name, COMPANIES_HEADER)
    companies: dict[str, Company] = {}
    lines: dict[str, int] = {}
    for lineno, (cid, name, parent, country) in crows:
        if not cid:
            raise ParseError("empty company_id", companies_name, lineno)
        if cid in companies:
            raise ParseError(f"duplicate company_id {cid!r}", companies_name, lineno)
        companies[cid] = Company(cid, name or cid, parent or None, country)
        lines[cid] = lineno

    dversion, drows = _rows(domains_text, domains_name, DOMAINS_HEADER)
    domains: dict[str, str] = {}
    for lineno, (domain, cid) in drows:
        if not domain or not cid:
            raise ParseError("empty domain or company_id", domains_name, lineno)
        if domain in domains:
            raise DuplicateDomain(f"{domains_name}:{lineno}: domain {domain!r} listed twice")
        domains[domain] = cid
        lines[domain] = lineno

    kb = TrackerKB(companies, domains, dversion or cversion, suffixes)
    if not validate:
        return kb
    violations = validate_kb(kb)
    if violations:
        v = violations[0]
        line = lines.get(v.subject)
        where = domains_name if v.subject in domains else companies_name
        msg = f"{where}:{line}: {v}" if line else str(v)
        raise _ERRORS.get(v.kind, ParseError)(msg)
    return kb


def load_kb(domains_file: str | Path, companies_file: str | Path,
            suffix_file: str | Path | None = None, *, validate: bool = True) -> TrackerKB:
    suffixes = load_suffix_list(suffix_file) if suffix_file else None
    return parse_kb(
        Path(domains_file).read_text(encoding="utf-8"),
        Path(companies_file).read_text(encoding="utf-8"),
        suffixes=suffixes,
        domains_name=str(domains_file),
        companies_name=str(companies_file),
        validate=validate,
    )


def load_kb_dir(directory: str | Path, *, validate: bool = True) -> TrackerKB:
    d = Path(directory)
    suffix_file = d / "suffixes.txt"
    return load_kb(d / "domains.csv", d / "companies.csv",
                   suffix_file if suffix_file.exists() else None, validate=validate)


def seed_kb_dir() -> Path:
    """Filesystem path of the bundled seed KB."""
    return Path(str(resources.files("trackscan").joinpath("data/seed")))


def seed_kb() -> TrackerKB:
    return load_kb_dir(seed_kb_dir())


def default_kb_dir() -> Path:
    env = os.environ.get(KB_DIR_ENV)
    return Path(env) if env else seed_kb_dir()


def dump_kb(kb: TrackerKB) -> tuple[str, str]:
    """Serialize to ``(domains_csv, companies_csv)`` text, rows sorted."""
    def render(header: list[str], rows: list[list[str]]) -> str:
        buf = io.StringIO()
        if kb.version:
            buf.write(f"# version: {kb.version}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()

    domains = render(DOMAINS_HEADER, [[d, kb.domains[d]] for d in sorted(kb.domains)])
    companies = render(COMPANIES_HEADER, [
        [c.id, c.display_name, c.parent_id or "", c.country]
        for c in (kb.companies[k] for k in sorted(kb.companies))
    ])
    return domains, companies


def save_kb(kb: TrackerKB, directory: str | Path) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    domains, companies = dump_kb(kb)
    (d / "domains.csv").write_text(domains, encoding="utf-8")
    (d / "companies.csv").write_text(companies, encoding="utf-8")
    return d


__all__ = [
    "Company", "KBError", "TrackerKB", "Violation", "company_country", "default_kb_dir",
    "dump_kb", "load_kb", "load_kb_dir", "parse_kb", "resolve_company", "root_parent",
    "save_kb", "seed_kb", "seed_kb_dir", "validate_kb",
]
