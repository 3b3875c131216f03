"""Public-suffix lookup and registrable-domain normalization."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import AbstractSet, Iterable

from .errors import NoRegistrableDomain

SuffixList = AbstractSet[str]


def parse_suffix_list(lines: Iterable[str]) -> frozenset[str]:
    """Parse public-suffix rules, one per line.  ``#`` and ``//`` start comments.

    Wildcard (``*.ck``) and exception (``!www.ck``) rules are kept verbatim.
    """
    rules = set()
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("//"):
            continue
        rules.add(line.split()[0].lower().strip("."))
    return frozenset(rules)


def load_suffix_list(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return parse_suffix_list(fh)


def default_suffix_list() -> frozenset[str]:
    """The snapshot subset of the public suffix list bundled with the seed KB."""
    text = resources.files("trackscan").joinpath("data/seed/suffixes.txt").read_text("utf-8")
    return parse_suffix_list(text.splitlines())


def public_suffix(labels: list[str], suffixes: SuffixList) -> int:
    """Number of trailing labels forming the longest matching public suffix.

    Falls back to 1 (the final label) when no rule matches.
    """
    n = len(labels)
    for i in range(n):
        tail = ".".join(labels[i:])
        if "!" + tail in suffixes:
            return n - i - 1
        if tail in suffixes:
            return n - i
        if i + 1 < n and "*." + ".".join(labels[i + 1:]) in suffixes:
            return n - i
    return 1


def normalize_host(raw: str, suffixes: SuffixList) -> str:
    """Reduce a hostname to its registrable domain: public suffix plus one label.

    >>> normalize_host("subdomain.example.com", {"com"})
    'example.com'
    """
    host = raw.strip().strip(".").lower()
    labels = host.split(".") if host else []
    if not labels or any(not lab for lab in labels):
        raise NoRegistrableDomain(f"{raw!r} is not a hostname")
    k = public_suffix(labels, suffixes)
    if k >= len(labels):
        raise NoRegistrableDomain(f"{raw!r} is a bare public suffix")
    return ".".join(labels[-(k + 1):])
