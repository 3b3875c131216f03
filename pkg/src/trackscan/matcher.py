"""Matching extracted host candidates against the tracker KB."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Container, Iterable

from .dex import HostCandidate
from .errors import NoRegistrableDomain
from .kb import TrackerKB, company_country, resolve_company
from .suffixes import SuffixList, normalize_host

__all__ = ["AppProfile", "match_candidate", "normalize_host", "profile_app"]


def _right_ok(text: str, end: int) -> bool:
    return end == len(text) or not (text[end] == "." or text[end].isalpha())


def match_candidate(tracker_domain: str, candidate_text: str, *, paper_compat: bool = False) -> bool:
    """True if ``tracker_domain`` occurs in ``candidate_text`` as a whole domain.

    The character after the occurrence must be absent or neither a dot nor a
    letter, so ``google.com`` matches ``google.com/somepath`` but neither
    ``google.com.domain`` nor ``google.coming``.  Unless ``paper_compat`` is
    set, the character before it must also be absent or a dot, which stops
    ``google.com`` from matching ``notgoogle.com``.
    """
    if not tracker_domain:
        return False
    start = candidate_text.find(tracker_domain)
    while start >= 0:
        end = start + len(tracker_domain)
        left_ok = paper_compat or start == 0 or candidate_text[start - 1] == "."
        if left_ok and _right_ok(candidate_text, end):
            return True
        start = candidate_text.find(tracker_domain, start + 1)
    return False


def _compat_matches(text: str, domains: Container[str]) -> set[str]:
    # Every KB domain occurring with a valid right boundary; candidate ends are
    # few (usually only len(text)), so test each substring ending there.
    hits = set()
    ends = [j for j in range(1, len(text) + 1) if _right_ok(text, j)]
    for j in ends:
        for i in range(j):
            if text[i:j] in domains:
                hits.add(text[i:j])
    return hits


@dataclass
class AppProfile:
    app_id: str
    tracker_domains: set[str] = field(default_factory=set)
    companies: set[str] = field(default_factory=set)
    root_parents: set[str] = field(default_factory=set)
    # countries of the matched companies and all their ancestors
    countries: set[str] = field(default_factory=set)
    # countries of the matched companies only
    subsidiary_countries: set[str] = field(default_factory=set)
    permissions: list[str] = field(default_factory=list)
    candidate_count: int = 0
    unnormalizable: int = 0

    @property
    def host_count(self) -> int:
        return len(self.tracker_domains)

    def to_dict(self) -> dict:
        return {
            "app_id": self.app_id,
            "tracker_domains": sorted(self.tracker_domains),
            "companies": sorted(self.companies),
            "root_parents": sorted(self.root_parents),
            "countries": sorted(self.countries),
            "subsidiary_countries": sorted(self.subsidiary_countries),
            "permissions": list(self.permissions),
            "candidate_count": self.candidate_count,
            "unnormalizable": self.unnormalizable,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AppProfile":
        return cls(
            app_id=d["app_id"],
            tracker_domains=set(d.get("tracker_domains", ())),
            companies=set(d.get("companies", ())),
            root_parents=set(d.get("root_parents", ())),
            countries=set(d.get("countries", ())),
            subsidiary_countries=set(d.get("subsidiary_countries", ())),
            permissions=list(d.get("permissions", ())),
            candidate_count=int(d.get("candidate_count", 0)),
            unnormalizable=int(d.get("unnormalizable", 0)),
        )


def profile_app(
    app_id: str,
    candidates: Iterable[HostCandidate | str],
    kb: TrackerKB,
    suffix_list: SuffixList | None = None,
    *,
    paper_compat: bool = False,
    permissions: Iterable[str] = (),
) -> AppProfile:
    """Attribute an app's host candidates to tracker domains, companies and countries.

    A candidate counts when its registrable domain is a KB domain.  With
    ``paper_compat`` any KB domain that :func:`match_candidate` finds inside
    the candidate text (right boundary only) counts as well.
    """
    suffixes = kb.suffixes if suffix_list is None else suffix_list
    profile = AppProfile(app_id, permissions=list(dict.fromkeys(permissions)))
    for cand in candidates:
        text = cand.text if isinstance(cand, HostCandidate) else cand
        profile.candidate_count += 1
        try:
            normal = normalize_host(text, suffixes)
        except NoRegistrableDomain:
            profile.unnormalizable += 1
            normal = None
        if normal is not None and normal in kb.domains:
            profile.tracker_domains.add(normal)
        if paper_compat:
            profile.tracker_domains |= _compat_matches(text.lower(), kb.domains)

    for domain in profile.tracker_domains:
        cid = resolve_company(kb, domain)
        assert cid is not None
        profile.companies.add(cid)
    for cid in profile.companies:
        chain = kb.ancestry(cid)
        profile.root_parents.add(chain[-1])
        profile.subsidiary_countries.add(company_country(kb, cid))
        profile.countries.update(company_country(kb, a) for a in chain)
    return profile
