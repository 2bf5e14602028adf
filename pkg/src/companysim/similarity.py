"""Embedding-space peer selection scored against realized return
co-movement, plus GICS-membership baselines and sector outlier scores.

The headline number for a peer set is the average pairwise Pearson
correlation of daily returns: for company i with peers P(i),
rho_i = mean_j corr(r_i, r_j), and the portfolio-level score is the mean of
rho_i over companies that produced at least one valid pair. Scores are
computed within calendar years and then averaged across years so that
regime changes do not blur the comparison.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import (
    DataValidationError,
    InsufficientOverlapError,
    ZeroVarianceError,
    ZeroVectorError,
)

logger = logging.getLogger(__name__)

DEFAULT_MIN_OVERLAP = 60
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
RETURNS_HEADER = ["company_id", "date", "return"]


@dataclass
class ReturnPanel:
    """Daily simple returns keyed company -> date -> value."""

    series: dict[str, dict[str, float]]

    def companies(self) -> list[str]:
        return sorted(self.series)

    def years(self) -> list[int]:
        seen = {int(date[:4]) for obs in self.series.values() for date in obs}
        return sorted(seen)

    def restrict_year(self, year: int) -> "ReturnPanel":
        prefix = f"{year:04d}-"
        out: dict[str, dict[str, float]] = {}
        for company_id, obs in self.series.items():
            kept = {d: r for d, r in obs.items() if d.startswith(prefix)}
            if kept:
                out[company_id] = kept
        return ReturnPanel(out)

    def subset(self, ids: Sequence[str]) -> "ReturnPanel":
        return ReturnPanel({i: self.series[i] for i in ids if i in self.series})


def load_returns_csv(path: str | Path) -> ReturnPanel:
    """Strict long-format CSV: header company_id,date,return."""
    series: dict[str, dict[str, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != RETURNS_HEADER:
            raise DataValidationError(
                f"returns file must start with {','.join(RETURNS_HEADER)!r}, "
                f"got {header!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise DataValidationError(f"line {line_no}: expected 3 columns")
            company_id, date, raw_value = row
            if not _DATE_RE.match(date):
                raise DataValidationError(
                    f"line {line_no}: bad date {date!r}, expected YYYY-MM-DD"
                )
            if not company_id:
                raise DataValidationError(f"line {line_no}: empty company id")
            try:
                value = float(raw_value)
            except ValueError:
                raise DataValidationError(
                    f"line {line_no}: bad return value {raw_value!r}"
                ) from None
            if not np.isfinite(value):
                raise DataValidationError(f"line {line_no}: non-finite return")
            obs = series.setdefault(company_id, {})
            if date in obs:
                raise DataValidationError(
                    f"line {line_no}: duplicate observation {company_id}/{date}"
                )
            obs[date] = value
    if not series:
        raise DataValidationError(f"no return observations in {path}")
    return ReturnPanel(series)


def save_returns_csv(panel: ReturnPanel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RETURNS_HEADER)
        for company_id in panel.companies():
            obs = panel.series[company_id]
            for date in sorted(obs):
                writer.writerow([company_id, date, repr(obs[date])])


# ---------------------------------------------------------------------------
# Core math


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    return float(a @ b) / (norm_a * norm_b)


def pearson_correlation(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson_correlation needs two equal-length 1-d arrays")
    if x.size < 2:
        raise InsufficientOverlapError("need at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(np.linalg.norm(xc)) * float(np.linalg.norm(yc))
    if denom == 0.0:
        raise ZeroVarianceError("constant series has undefined correlation")
    return float(xc @ yc) / denom


def pairwise_return_correlation(
    panel: ReturnPanel,
    id_a: str,
    id_b: str,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
) -> float:
    """Pearson correlation over the dates both series observe."""
    try:
        obs_a = panel.series[id_a]
        obs_b = panel.series[id_b]
    except KeyError as e:
        raise DataValidationError(f"no return series for {e.args[0]!r}") from None
    common = sorted(set(obs_a) & set(obs_b))
    if len(common) < max(2, min_overlap):
        raise InsufficientOverlapError(
            f"{id_a}/{id_b}: {len(common)} common dates < {min_overlap}"
        )
    x = np.array([obs_a[d] for d in common])
    y = np.array([obs_b[d] for d in common])
    return pearson_correlation(x, y)


def _unit_rows(matrix: EmbeddingMatrix) -> np.ndarray:
    rows = matrix.matrix.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0.0):
        bad = [matrix.ids[i] for i in np.flatnonzero(norms == 0.0)]
        raise ZeroVectorError(f"zero embedding rows for {bad[:5]}")
    return rows / norms[:, None]


def top_k_peers(
    matrix: EmbeddingMatrix, company_id: str, k: int
) -> list[tuple[str, float]]:
    """The k nearest companies by cosine similarity, excluding the company
    itself; exact similarity ties break toward the lexicographically
    smaller id. k is clamped to the number of candidates."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    unit = _unit_rows(matrix)
    sims = unit @ unit[matrix.index(company_id)]
    ranked = sorted(
        (
            (other, float(sims[i]))
            for i, other in enumerate(matrix.ids)
            if other != company_id
        ),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]


@dataclass
class CorrelationReport:
    """Average peer return correlation, overall and by year/company."""

    rho_bar: float
    per_year: dict[int, float]
    per_company: dict[str, float]
    years: list[int]
    k: int | None
    n_companies: int
    skipped_pairs: int
    excluded_companies: list[str]

    def to_dict(self) -> dict:
        return {
            "rho_bar": self.rho_bar,
            "per_year": {str(y): v for y, v in sorted(self.per_year.items())},
            "per_company": dict(sorted(self.per_company.items())),
            "years": self.years,
            "k": self.k,
            "n_companies": self.n_companies,
            "skipped_pairs": self.skipped_pairs,
            "excluded_companies": self.excluded_companies,
        }


def _score_peer_sets(
    peer_sets: Mapping[str, Sequence[str]],
    panel: ReturnPanel,
    years: Sequence[int],
    min_overlap: int,
    k: int | None,
) -> CorrelationReport:
    """Shared scorer: given each company's peer list, average pairwise
    correlations per year, then across years."""
    per_year: dict[int, float] = {}
    company_scores: dict[str, list[float]] = {}
    skipped_pairs = 0
    for year in years:
        year_panel = panel.restrict_year(year)
        year_scores: dict[str, float] = {}
        for company_id in sorted(peer_sets):
            if company_id not in year_panel.series:
                continue
            correlations = []
            for peer in peer_sets[company_id]:
                if peer not in year_panel.series:
                    skipped_pairs += 1
                    continue
                try:
                    correlations.append(
                        pairwise_return_correlation(
                            year_panel, company_id, peer, min_overlap
                        )
                    )
                except (InsufficientOverlapError, ZeroVarianceError):
                    skipped_pairs += 1
            if correlations:
                year_scores[company_id] = float(np.mean(correlations))
        if year_scores:
            per_year[year] = float(np.mean(list(year_scores.values())))
            for company_id, score in year_scores.items():
                company_scores.setdefault(company_id, []).append(score)
    if not per_year:
        raise DataValidationError(
            "no company produced a valid peer correlation in any year"
        )
    per_company = {
        company_id: float(np.mean(scores))
        for company_id, scores in sorted(company_scores.items())
    }
    excluded = sorted(set(peer_sets) - set(per_company))
    return CorrelationReport(
        rho_bar=float(np.mean([per_year[y] for y in sorted(per_year)])),
        per_year=per_year,
        per_company=per_company,
        years=sorted(per_year),
        k=k,
        n_companies=len(per_company),
        skipped_pairs=skipped_pairs,
        excluded_companies=excluded,
    )


def avg_peer_correlation(
    matrix: EmbeddingMatrix,
    panel: ReturnPanel,
    k: int,
    years: Sequence[int] | None = None,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
) -> CorrelationReport:
    """Score embedding-space top-k peer sets against realized returns.

    Peers are chosen once from the full embedding matrix, restricted to
    companies that also have return data; correlations are then computed
    within each requested year.
    """
    universe = [i for i in matrix.ids if i in panel.series]
    if len(universe) < 2:
        raise DataValidationError(
            "need at least 2 companies with both embeddings and returns"
        )
    sub = matrix.subset(sorted(universe))
    use_years = list(years) if years is not None else panel.years()
    if not use_years:
        raise DataValidationError("no years with return data")
    peer_sets = {
        company_id: [peer for peer, _ in top_k_peers(sub, company_id, k)]
        for company_id in sub.ids
    }
    return _score_peer_sets(peer_sets, panel, use_years, min_overlap, k)


def gics_baseline_correlation(
    labels: Mapping[str, str],
    panel: ReturnPanel,
    years: Sequence[int] | None = None,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
) -> CorrelationReport:
    """Same scorer with membership peer sets: every other company sharing
    the company's label (so k varies with group size)."""
    universe = sorted(i for i in labels if i in panel.series)
    if len(universe) < 2:
        raise DataValidationError(
            "need at least 2 companies with both labels and returns"
        )
    by_label: dict[str, list[str]] = {}
    for company_id in universe:
        by_label.setdefault(labels[company_id], []).append(company_id)
    peer_sets = {
        company_id: [p for p in by_label[labels[company_id]] if p != company_id]
        for company_id in universe
    }
    peer_sets = {c: peers for c, peers in peer_sets.items() if peers}
    if not peer_sets:
        raise DataValidationError("every label group has a single member")
    use_years = list(years) if years is not None else panel.years()
    return _score_peer_sets(peer_sets, panel, use_years, min_overlap, k=None)


def save_correlation_report(report: CorrelationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, sort_keys=True, indent=2)
        f.write("\n")


# ---------------------------------------------------------------------------
# Sector outlier scores


def sector_outlier_scores(
    matrix: EmbeddingMatrix, sector_labels: Mapping[str, str]
) -> dict[str, float]:
    """How much farther a company sits from its own sector centroid than
    from the nearest other sector's centroid, in cosine distance. Positive
    scores flag companies whose text does not match their assigned sector.
    """
    ids = [i for i in matrix.ids if i in sector_labels]
    if not ids:
        raise DataValidationError("no overlap between embeddings and sector labels")
    sectors = sorted({sector_labels[i] for i in ids})
    if len(sectors) < 2:
        raise DataValidationError("outlier scores need at least 2 sectors")
    unit = _unit_rows(matrix)
    centroids = {}
    for sector in sectors:
        rows = [matrix.index(i) for i in ids if sector_labels[i] == sector]
        centroid = unit[rows].mean(axis=0)
        norm = float(np.linalg.norm(centroid))
        if norm == 0.0:
            raise ZeroVectorError(f"sector {sector!r} centroid is zero")
        centroids[sector] = centroid / norm
    scores: dict[str, float] = {}
    for company_id in ids:
        row = unit[matrix.index(company_id)]
        own = 1.0 - float(row @ centroids[sector_labels[company_id]])
        others = [
            1.0 - float(row @ centroids[s])
            for s in sectors
            if s != sector_labels[company_id]
        ]
        scores[company_id] = own - min(others)
    return scores
