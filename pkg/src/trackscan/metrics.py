"""Corpus statistics: distributions, Gini, prevalence tables, genre rankings."""

from __future__ import annotations

import csv
import enum
import warnings
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyInput, UniverseTooSmall, ZeroMean
from .matcher import AppProfile

OTHER = "Other"
FAMILY = "Family"


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    median: int
    q1: int
    q3: int
    threshold: int
    n_above_threshold: int
    n_zero: int

    @property
    def pct_above_threshold(self) -> float:
        return 100.0 * self.n_above_threshold / self.n

    @property
    def pct_zero(self) -> float:
        return 100.0 * self.n_zero / self.n


def _nearest_rank_lower(sorted_values: Sequence[int], num: int, den: int) -> int:
    # 1-based rank ceil(p*n) with p = num/den, in integer arithmetic
    n = len(sorted_values)
    rank = max(1, -(-num * n // den))
    return sorted_values[rank - 1]


def descriptive_stats(values: Iterable[int], threshold: int) -> DescriptiveStats:
    """Median and quartiles (nearest-rank, lower) plus threshold and zero counts.

    ``n_above_threshold`` counts values strictly greater than ``threshold``.
    """
    xs = sorted(int(v) for v in values)
    if not xs:
        raise EmptyInput("descriptive_stats needs at least one value")
    if xs[0] < 0:
        raise ValueError("values must be non-negative")
    return DescriptiveStats(
        n=len(xs),
        median=_nearest_rank_lower(xs, 1, 2),
        q1=_nearest_rank_lower(xs, 1, 4),
        q3=_nearest_rank_lower(xs, 3, 4),
        threshold=threshold,
        n_above_threshold=sum(1 for x in xs if x > threshold),
        n_zero=sum(1 for x in xs if x == 0),
    )


def gini(values: Iterable[float]) -> float:
    """Gini coefficient as the mean absolute difference over twice the mean.

    Uses the sorted-rank form ``sum((2i - n - 1) * x_(i)) / (n * sum(x))``,
    which equals ``sum_ij |x_i - x_j| / (2 n^2 mean)``.
    """
    xs = np.sort(np.asarray(list(values), dtype=np.float64))
    n = xs.size
    if n == 0:
        raise EmptyInput("gini needs at least one value")
    if xs[0] < 0:
        raise ValueError("gini is undefined for negative values")
    total = xs.sum()
    if total <= 0:
        raise ZeroMean("gini is undefined when the mean is zero")
    weights = 2.0 * np.arange(1, n + 1) - n - 1
    return float(max(np.dot(weights, xs) / (n * total), 0.0))


class Level(str, enum.Enum):
    SUBSIDIARY = "subsidiary"
    ROOT_PARENT = "root_parent"
    COUNTRY = "country"
    # countries of the immediate owners only, without ancestors
    SUBSIDIARY_COUNTRY = "subsidiary_country"


_LEVEL_ATTR = {
    Level.SUBSIDIARY: "companies",
    Level.ROOT_PARENT: "root_parents",
    Level.COUNTRY: "countries",
    Level.SUBSIDIARY_COUNTRY: "subsidiary_countries",
}


@dataclass(frozen=True)
class PrevalenceRow:
    entity: str
    apps_present: int
    pct_apps: float


@dataclass(frozen=True)
class PrevalenceTable:
    level: Level
    corpus_size: int
    rows: tuple[PrevalenceRow, ...] = ()

    def pct(self, entity: str) -> float:
        for row in self.rows:
            if row.entity == entity:
                return row.pct_apps
        return 0.0


def prevalence_table(profiles: Sequence[AppProfile], level: Level | str) -> PrevalenceTable:
    """Share of apps with at least one tracker attributed to each entity."""
    level = Level(level)
    attr = _LEVEL_ATTR[level]
    counts: dict[str, int] = {}
    for p in profiles:
        for entity in getattr(p, attr):
            counts[entity] = counts.get(entity, 0) + 1
    n = len(profiles)
    rows = sorted(
        (PrevalenceRow(e, c, 100.0 * c / n) for e, c in counts.items()),
        key=lambda r: (-r.apps_present, r.entity),
    )
    return PrevalenceTable(level, n, tuple(rows))


GenreMap = Mapping[str, str]


def load_genre_map(path: str | Path | None = None) -> dict[str, str]:
    """Read a ``genre,super_genre`` CSV; defaults to the bundled grouping."""
    if path is None:
        text = resources.files("trackscan").joinpath("data/genres.csv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader, [])]
    if header != ["genre", "super_genre"]:
        raise ValueError(f"{path}: expected header genre,super_genre, got {header}")
    return {row[0].strip(): row[1].strip() for row in reader if row}


def super_genre_map(genre: str, mapping: GenreMap, family: bool = False) -> str:
    if family:
        return FAMILY
    try:
        return mapping[genre]
    except KeyError:
        warnings.warn(f"genre {genre!r} has no super genre; using {OTHER!r}", stacklevel=2)
        return OTHER


@dataclass(frozen=True)
class Ranking:
    items: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if len(set(self.items)) != len(self.items):
            raise ValueError("ranking contains duplicate items")

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def reversed(self) -> "Ranking":
        return Ranking(self.items[::-1])


def ranking_from_prevalence(table: PrevalenceTable, top_k: int | None = None) -> Ranking:
    items = [r.entity for r in table.rows]
    return Ranking(tuple(items if top_k is None else items[:top_k]))


@dataclass(frozen=True)
class RankDistance:
    raw_k: int
    normalized_k: float
    universe_size: int


def _count_inversions(seq: list[int]) -> int:
    """Inversions in ``seq`` by merge sort, O(n log n)."""
    if len(seq) < 2:
        return 0
    mid = len(seq) // 2
    left, right = seq[:mid], seq[mid:]
    inv = _count_inversions(left) + _count_inversions(right)
    left.sort()
    right.sort()
    i = 0
    for x in right:
        while i < len(left) and left[i] < x:
            i += 1
        inv += len(left) - i
    return inv


def kendall_distance(r1: Ranking | Sequence[str], r2: Ranking | Sequence[str]) -> RankDistance:
    """Number of item pairs ordered differently by two rankings.

    Only items present in both rankings take part.  Fewer than two shared items
    give a distance of 0 and a :class:`UniverseTooSmall` warning.
    """
    a = list(r1)
    b = list(r2)
    common = set(a) & set(b)
    n = len(common)
    if n < 2:
        warnings.warn(f"rankings share {n} item(s); distance set to 0",
                      UniverseTooSmall, stacklevel=2)
        return RankDistance(0, 0.0, n)
    pos_b = {item: i for i, item in enumerate(x for x in b if x in common)}
    seq = [pos_b[x] for x in a if x in common]
    raw = _count_inversions(seq)
    return RankDistance(raw, raw / max(1, n * (n - 1) // 2), n)


@dataclass
class GenreDistances:
    vs_reference: dict[str, float] = field(default_factory=dict)
    sum_pairwise: dict[str, float] = field(default_factory=dict)
    matrix: dict[str, dict[str, float]] = field(default_factory=dict)


def pairwise_genre_distances(rankings: Mapping[str, Ranking], reference: Ranking) -> GenreDistances:
    """Normalized distance of each genre ranking to the reference and to every other genre."""
    genres = sorted(rankings)
    if len(genres) < 2:
        raise ValueError("pairwise_genre_distances needs at least two genres")
    out = GenreDistances()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UniverseTooSmall)
        for g in genres:
            out.vs_reference[g] = kendall_distance(rankings[g], reference).normalized_k
            out.matrix[g] = {g: 0.0}
        for g, h in combinations(genres, 2):
            d = kendall_distance(rankings[g], rankings[h]).normalized_k
            out.matrix[g][h] = d
            out.matrix[h][g] = d
    for g in genres:
        out.sum_pairwise[g] = sum(out.matrix[g][h] for h in genres if h != g)
    return out
