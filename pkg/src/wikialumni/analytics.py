"""Descriptive statistics, university rankings, and rank correlations.

View sums are exact integer arithmetic; correlations run in double
precision.  Spearman (rank correlation with average-rank ties) is the
default method; Pearson on raw scores is available behind a flag.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .alumni import AlumniRecord
from .errors import CorrelationError, ExternalRankingError
from .registry import Registry

SCORE_ALUMNI = "alumni_view_sum"
SCORE_UNIVERSITY_PAGE = "university_page_views"
SCORE_EXTERNAL = "external"

METHOD_SPEARMAN = "spearman"
METHOD_PEARSON = "pearson_on_scores"


@dataclass(frozen=True)
class FilterSpec:
    min_birth_year: int | None = None
    max_birth_year: int | None = None
    min_views_exclusive: int | None = None
    require_birth_year: bool = False

    def __post_init__(self):
        if (
            self.min_birth_year is not None
            and self.max_birth_year is not None
            and self.min_birth_year > self.max_birth_year
        ):
            raise ValueError("min_birth_year exceeds max_birth_year")
        if self.min_views_exclusive is not None and self.min_views_exclusive < 0:
            raise ValueError("min_views_exclusive must be >= 0")

    @property
    def has_year_bound(self) -> bool:
        return self.min_birth_year is not None or self.max_birth_year is not None


@dataclass(frozen=True)
class DescriptiveStats:
    n_alumni: int
    n_universities: int
    mean_views: float | None
    median_views: float | None
    stddev_views: float | None


@dataclass(frozen=True)
class Ranking:
    """Entries sorted by score descending; view-sum ties break by
    canonical name ascending."""

    entries: tuple[tuple[int, float], ...]
    score_kind: str
    filter: FilterSpec | None = None
    name: str = ""

    def ids(self) -> list[int]:
        return [uid for uid, _ in self.entries]

    def scores(self) -> dict[int, float]:
        return dict(self.entries)


class CorrelationResult(NamedTuple):
    coefficient: float
    n_common: int
    method: str


def apply_filter(
    records: Iterable[AlumniRecord], spec: FilterSpec
) -> list[AlumniRecord]:
    out = []
    for rec in records:
        if spec.has_year_bound or spec.require_birth_year:
            if rec.birth_year is None:
                continue
            if spec.min_birth_year is not None and rec.birth_year < spec.min_birth_year:
                continue
            if spec.max_birth_year is not None and rec.birth_year > spec.max_birth_year:
                continue
        if spec.min_views_exclusive is not None:
            if rec.views_total is None or rec.views_total <= spec.min_views_exclusive:
                continue
        out.append(rec)
    return out


def describe(records: Sequence[AlumniRecord]) -> DescriptiveStats:
    """Mean/median/stddev of views_total; stddev uses the population
    form (divisor n), median averages the two middle values for even n."""
    views = [r.views_total for r in records]
    if any(v is None for v in views):
        raise ValueError("describe requires views_total on every record")
    n = len(views)
    n_universities = len({r.university_id for r in records})
    if n == 0:
        return DescriptiveStats(0, 0, None, None, None)
    arr = np.array(views, dtype=np.float64)
    return DescriptiveStats(
        n_alumni=n,
        n_universities=n_universities,
        mean_views=float(arr.mean()),
        median_views=float(np.median(arr)),
        stddev_views=float(arr.std(ddof=0)),
    )


def rank_universities(
    records: Iterable[AlumniRecord],
    spec: FilterSpec | None = None,
    registry: Registry | None = None,
    name: str = "",
) -> Ranking:
    """Rank by exact integer sum of views_total per university over the
    records surviving the filter."""
    if spec is not None:
        records = apply_filter(records, spec)
    sums: dict[int, int] = {}
    names: dict[int, str] = {}
    for rec in records:
        if rec.views_total is None:
            continue
        sums[rec.university_id] = sums.get(rec.university_id, 0) + rec.views_total
        names[rec.university_id] = (
            registry.name_of(rec.university_id) if registry else rec.university_name
        )
    ordered = sorted(sums.items(), key=lambda kv: (-kv[1], names[kv[0]]))
    return Ranking(
        entries=tuple((uid, float(score)) for uid, score in ordered),
        score_kind=SCORE_ALUMNI,
        filter=spec,
        name=name,
    )


def ranking_from_scores(
    scores: dict[int, float],
    score_kind: str,
    names: dict[int, str] | None = None,
    name: str = "",
) -> Ranking:
    names = names or {}
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], names.get(kv[0], str(kv[0]))))
    return Ranking(entries=tuple(ordered), score_kind=score_kind, name=name)


def correlate(
    rank_a: Ranking, rank_b: Ranking, method: str = METHOD_SPEARMAN
) -> CorrelationResult:
    """Correlation over the entity intersection of the two rankings.

    Spearman is the Pearson correlation of the score-derived rank
    vectors with average-rank tie handling.
    """
    if method not in (METHOD_SPEARMAN, METHOD_PEARSON):
        raise ValueError(f"unknown correlation method: {method}")
    scores_a = rank_a.scores()
    scores_b = rank_b.scores()
    common = sorted(set(scores_a) & set(scores_b))
    if len(common) < 3:
        raise CorrelationError(
            f"rankings share only {len(common)} entities; need at least 3 "
            "for a meaningful correlation"
        )
    a = np.array([scores_a[uid] for uid in common], dtype=np.float64)
    b = np.array([scores_b[uid] for uid in common], dtype=np.float64)
    if method == METHOD_SPEARMAN:
        ra = stats.rankdata(a)
        rb = stats.rankdata(b)
        coef = _pearson(ra, rb)
    else:
        coef = _pearson(a, b)
    return CorrelationResult(coefficient=coef, n_common=len(common), method=method)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0:
        raise CorrelationError("constant scores; correlation undefined")
    return float((xc * yc).sum() / denom)


def correlation_matrix(
    rankings: Sequence[Ranking], method: str = METHOD_SPEARMAN
) -> np.ndarray:
    """Symmetric matrix with unit diagonal; cells whose pair cannot be
    correlated are NaN."""
    if len(rankings) < 2:
        raise ValueError("need at least 2 rankings")
    n = len(rankings)
    matrix = np.full((n, n), np.nan)
    np.fill_diagonal(matrix, 1.0)
    for i in range(n):
        for j in range(i):
            try:
                coef = correlate(rankings[i], rankings[j], method).coefficient
            except CorrelationError:
                coef = np.nan
            matrix[i, j] = matrix[j, i] = coef
    return matrix


def render_matrix(matrix: np.ndarray, labels: Sequence[str]) -> str:
    """Lower-triangular text rendering."""
    lines = ["\t" + "\t".join(labels)]
    for i, label in enumerate(labels):
        cells = []
        for j in range(len(labels)):
            if j > i:
                cells.append("")
            elif np.isnan(matrix[i, j]):
                cells.append("n/a")
            else:
                cells.append(f"{matrix[i, j]:.2f}")
        lines.append(label + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


def load_external_ranking(
    ranking_file: str | Path,
    name: str,
    registry: Registry,
    mapping_file: str | Path,
    max_unmapped_fraction: float = 0.2,
) -> tuple[Ranking, list[str]]:
    """Load an external ranking aligned to registry ids.

    ranking file: TSV with header (name, rank) or (name, score); the
    mapping file is TSV with header (external_name, university_id).
    Returns (ranking, unmapped names).  Rank positions are negated into
    scores so that "sorted by score descending" means "best rank first".
    """
    mapping: dict[str, int] = {}
    map_path = Path(mapping_file)
    lines = map_path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != ["external_name", "university_id"]:
        raise ExternalRankingError(f"{map_path}: expected header external_name\tuniversity_id")
    for line in lines[1:]:
        if not line:
            continue
        ext_name, uid = line.split("\t")
        mapping[ext_name] = int(uid)

    path = Path(ranking_file)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t") if lines else []
    if header not in (["name", "rank"], ["name", "score"]):
        raise ExternalRankingError(
            f"{path}: expected header name\trank or name\tscore, got {header}"
        )
    is_rank = header[1] == "rank"
    scores: dict[int, float] = {}
    names: dict[int, str] = {}
    unmapped: list[str] = []
    total = 0
    for line in lines[1:]:
        if not line:
            continue
        ext_name, value = line.split("\t")
        total += 1
        uid = mapping.get(ext_name)
        if uid is None or uid not in registry.universities:
            unmapped.append(ext_name)
            continue
        scores[uid] = -float(value) if is_rank else float(value)
        names[uid] = registry.name_of(uid)
    if total and len(unmapped) / total > max_unmapped_fraction:
        raise ExternalRankingError(
            f"{path}: {len(unmapped)}/{total} names unmapped "
            f"(limit {max_unmapped_fraction:.0%}): {unmapped[:5]}"
        )
    ranking = ranking_from_scores(scores, SCORE_EXTERNAL, names, name=name)
    return ranking, unmapped


def audit_sample(
    records: Sequence[AlumniRecord], rate: float, seed: int
) -> list[AlumniRecord]:
    """Uniform seeded sample for manual review; deterministic per seed."""
    if not 0 < rate <= 1:
        raise ValueError("rate must be in (0, 1]")
    rng = random.Random(seed)
    return [rec for rec in records if rng.random() < rate]


def write_audit_file(sample: Sequence[AlumniRecord], path: str | Path) -> Path:
    path = Path(path)
    lines = ["person_link\tuniversity_name\ttrigger\tsentence"]
    for rec in sample:
        sentence = " ".join(rec.sentence.split())
        lines.append(f"{rec.person_link}\t{rec.university_name}\t{rec.trigger}\t{sentence}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
