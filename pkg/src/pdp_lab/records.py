"""Record types shared by the replicate generators and the verification suites."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .measures import FunctionSpec, function_label

#: Recognized limit-law tags: "bvm" (centered, scaled posterior), "pd_clt"
#: (centered prior measure, positive discount), "dirichlet_clt" (zero discount).
LIMIT_SOURCES = ("bvm", "pd_clt", "dirichlet_clt")


@dataclass(frozen=True)
class GaussianLimit:
    """A centered Gaussian law on a finite function family."""

    labels: tuple
    mean: np.ndarray
    covariance: np.ndarray
    source: str

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=np.float64)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "mean", np.zeros(cov.shape[0]))
        if self.source not in LIMIT_SOURCES:
            raise ValueError(f"unknown limit source {self.source!r}")
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != len(self.labels):
            raise ValueError("covariance must be square and match the label count")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0.0):
            raise ValueError("covariance must be symmetric within 1e-12")
        if np.any(np.diag(cov) < 0.0):
            raise ValueError("covariance diagonal must be nonnegative")


@dataclass(frozen=True)
class ReplicateSet:
    """M rows of centered-process evaluations over a function family."""

    labels: tuple
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        object.__setattr__(self, "rows", rows)
        if rows.ndim != 2 or rows.shape[1] != len(self.labels):
            raise ValueError("rows must be an M x len(labels) matrix")
        if not np.all(np.isfinite(rows)):
            raise ValueError("rows must be finite")

    @property
    def m(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class FunctionCheck:
    """Per-function outcome of a normality test."""

    label: str
    ks_statistic: float
    p_value: float
    empirical_variance: float
    theoretical_variance: float
    relative_error: float
    degenerate: bool = False


@dataclass(frozen=True)
class TestReport:
    """Outcome of one normality-and-covariance verification.

    `passed` is a pure function of the recorded numbers and thresholds.
    """

    checks: List[FunctionCheck]
    covariance_max_relative_error: float
    p_min: float
    cov_tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "per_function": [
                {
                    "label": c.label,
                    "ks_statistic": c.ks_statistic,
                    "p_value": c.p_value,
                    "empirical_variance": c.empirical_variance,
                    "theoretical_variance": c.theoretical_variance,
                    "relative_error": c.relative_error,
                    "degenerate": c.degenerate,
                }
                for c in self.checks
            ],
            "covariance_max_relative_error": self.covariance_max_relative_error,
            "thresholds": {"p_min": self.p_min, "cov_tol": self.cov_tol},
            "passed": self.passed,
        }


def labels_for(f_list) -> tuple:
    return tuple(function_label(f) for f in f_list)
