"""Confidence set reports and their CSV row format."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import frobenius_norm, nuclear_norm

__all__ = ["ConfidenceReport", "report_csv_header", "report_csv_row"]

CSV_COLUMNS = "method,norm_kind,alpha,n,d,statistic_value,radius_sq,covered,k_hat"


@dataclass(frozen=True)
class ConfidenceReport:
    """A confidence ball: membership is ||v - center||^2 <= radius_sq in the
    declared norm.  ``statistic_value`` keeps the raw statistic, which may be
    negative even when the clamped radius is zero."""

    center: np.ndarray
    radius_sq: float
    norm_kind: str  # "frobenius" | "nuclear"
    level_alpha: float
    method: str  # RSS | UStat | ReAvg | PairedRSS | NuclearS1
    statistic_value: float
    n: int
    d: int
    k_hat: int | None = None

    def __post_init__(self):
        if self.radius_sq < 0:
            raise ValueError("radius_sq must be nonnegative")
        if self.norm_kind not in ("frobenius", "nuclear"):
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        if not 0 < self.level_alpha < 1:
            raise ValueError("alpha must be in (0, 1)")

    def distance_sq(self, v) -> float:
        diff = np.asarray(v, dtype=complex) - self.center
        if self.norm_kind == "frobenius":
            return frobenius_norm(diff) ** 2
        return nuclear_norm(diff) ** 2

    def contains(self, v) -> bool:
        return self.distance_sq(v) <= self.radius_sq


def report_csv_header() -> str:
    return CSV_COLUMNS


def report_csv_row(report: ConfidenceReport, truth=None) -> str:
    covered = "" if truth is None else str(int(report.contains(truth)))
    k_hat = "" if report.k_hat is None else str(report.k_hat)
    return (
        f"{report.method},{report.norm_kind},{report.level_alpha:.17g},"
        f"{report.n},{report.d},{report.statistic_value:.17g},"
        f"{report.radius_sq:.17g},{covered},{k_hat}"
    )
