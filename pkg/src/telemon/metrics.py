"""Evaluation metrics: ROC/PR curves, AUCs, score histograms, model comparison
and permutation feature importance.

Threshold semantics are fixed everywhere: a sample is predicted positive at
threshold t iff its score >= t, so discrete rule scores and model
probabilities are handled identically. AUCPR uses step-wise rectangular
area (no trapezoid interpolation between recall points).
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass
class ScoredSet:
    """Scores in [0,1] paired with true labels, with optional provenance."""

    scores: np.ndarray
    labels: np.ndarray
    provenance: list[tuple[str, str]] | None = None  # (patient_id, iso date)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=bool)
        if self.scores.shape != self.labels.shape:
            raise ValidationError("scores and labels must have the same length")
        if self.scores.size == 0:
            raise ValidationError("scored set must be nonempty")

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return int((~self.labels).sum())

    def label_digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.labels.astype(np.uint8).tobytes())
        if self.provenance is not None:
            for pid, day in self.provenance:
                h.update(f"{pid}|{day};".encode())
        return h.hexdigest()


def _require_both_classes(scored: ScoredSet) -> None:
    if scored.n_pos == 0 or scored.n_neg == 0:
        raise ValidationError("need at least one positive and one negative sample")


def _sweep(scored: ScoredSet):
    """Cumulative TP/FP after each distinct score, thresholds descending."""
    order = np.argsort(-scored.scores, kind="stable")
    scores = scored.scores[order]
    labels = scored.labels[order]
    tps = np.cumsum(labels)
    fps = np.cumsum(~labels)
    # Last index of each run of equal scores = counts at that threshold.
    last = np.r_[np.flatnonzero(np.diff(scores)), scores.size - 1]
    return scores[last], tps[last], fps[last]


def roc_curve(scored: ScoredSet) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) points, starting at (0, 0) and ending at (1, 1)."""
    _require_both_classes(scored)
    thresholds, tps, fps = _sweep(scored)
    points = [(0.0, 0.0, float("inf"))]
    for t, tp, fp in zip(thresholds, tps, fps):
        points.append((float(fp / scored.n_neg), float(tp / scored.n_pos), float(t)))
    return points


def auc_roc(scored: ScoredSet) -> float:
    """Trapezoidal area under the ROC curve.

    Equal to the tie-corrected rank statistic
    P(score+ > score-) + 0.5 * P(score+ = score-).
    """
    points = roc_curve(scored)
    area = 0.0
    for (f0, t0, _), (f1, t1, _) in zip(points[:-1], points[1:]):
        area += (f1 - f0) * (t1 + t0) / 2.0
    return float(area)


def pr_curve(scored: ScoredSet) -> list[tuple[float, float, float]]:
    """(recall, precision, threshold) points over the descending sweep."""
    if scored.n_pos == 0:
        raise ValidationError("precision-recall needs at least one positive sample")
    thresholds, tps, fps = _sweep(scored)
    points = []
    for t, tp, fp in zip(thresholds, tps, fps):
        precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
        points.append((float(tp / scored.n_pos), float(precision), float(t)))
    return points


def auc_pr(scored: ScoredSet) -> float:
    """Step-wise area under the PR curve: sum of (r_i - r_{i-1}) * p_i."""
    points = pr_curve(scored)
    area = 0.0
    prev_recall = 0.0
    for recall, precision, _ in points:
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def score_histograms(scored: ScoredSet, n_bins: int = 20) -> tuple[list[int], list[int]]:
    """Per-class counts over equal-width bins on [0, 1]; last bin right-closed."""
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    idx = np.minimum((scored.scores * n_bins).astype(int), n_bins - 1)
    neg = np.bincount(idx[~scored.labels], minlength=n_bins)
    pos = np.bincount(idx[scored.labels], minlength=n_bins)
    return neg.tolist(), pos.tolist()


@dataclass
class MetricsReport:
    """Everything the evaluation exports for one scorer on one scored set."""

    roc_points: list[tuple[float, float, float]]
    aucroc: float
    pr_points: list[tuple[float, float, float]]
    aucpr: float
    neg_hist: list[int]
    pos_hist: list[int]
    n_pos: int
    n_neg: int
    label_digest: str = ""


def compute_report(scored: ScoredSet, n_bins: int = 20) -> MetricsReport:
    _require_both_classes(scored)
    neg_hist, pos_hist = score_histograms(scored, n_bins)
    return MetricsReport(
        roc_points=roc_curve(scored),
        aucroc=auc_roc(scored),
        pr_points=pr_curve(scored),
        aucpr=auc_pr(scored),
        neg_hist=neg_hist,
        pos_hist=pos_hist,
        n_pos=scored.n_pos,
        n_neg=scored.n_neg,
        label_digest=scored.label_digest(),
    )


MATCHED_SPECIFICITIES = (0.7, 0.8, 0.9)


def sensitivity_at_specificity(roc_points, specificity: float) -> float:
    """Best TPR among operating points with FPR <= 1 - specificity."""
    limit = 1.0 - specificity
    best = 0.0
    for fpr, tpr, _ in roc_points:
        if fpr <= limit + 1e-12:
            best = max(best, tpr)
    return best


@dataclass
class ComparisonReport:
    aucroc_a: float
    aucroc_b: float
    aucroc_delta: float
    aucpr_a: float
    aucpr_b: float
    aucpr_delta: float
    sensitivity: dict[float, tuple[float, float, float]] = field(default_factory=dict)


def compare(report_a: MetricsReport, report_b: MetricsReport) -> ComparisonReport:
    """Deltas (a minus b) of AUCs plus sensitivity at matched specificities."""
    if (report_a.n_pos, report_a.n_neg) != (report_b.n_pos, report_b.n_neg):
        raise ValidationError("reports computed on different label sets")
    if report_a.label_digest and report_b.label_digest and report_a.label_digest != report_b.label_digest:
        raise ValidationError("reports computed on different label sets")
    sens = {}
    for spec in MATCHED_SPECIFICITIES:
        sa = sensitivity_at_specificity(report_a.roc_points, spec)
        sb = sensitivity_at_specificity(report_b.roc_points, spec)
        sens[spec] = (sa, sb, sa - sb)
    return ComparisonReport(
        aucroc_a=report_a.aucroc,
        aucroc_b=report_b.aucroc,
        aucroc_delta=report_a.aucroc - report_b.aucroc,
        aucpr_a=report_a.aucpr,
        aucpr_b=report_b.aucpr,
        aucpr_delta=report_a.aucpr - report_b.aucpr,
        sensitivity=sens,
    )


@dataclass
class ImportanceResult:
    """Permutation importance: mean AUCROC drop per feature, plus raw repeats."""

    baseline_auc: float
    mean_drop: np.ndarray  # (n_features,)
    drops: np.ndarray  # (n_repeats, n_features)


def permutation_importance(predict, X: np.ndarray, y: np.ndarray,
                           n_repeats: int = 10, seed: int = 0) -> ImportanceResult:
    """Mean AUCROC drop when each feature column is shuffled.

    `predict` maps a raw feature matrix to scores (a trained estimator's
    predict_risk or a rule scorer). One permutation of the sample index is
    drawn per repeat and applied to each column in turn, so importances do
    not depend on feature order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    baseline = auc_roc(ScoredSet(predict(X), y))
    rng = np.random.default_rng(seed)
    drops = np.zeros((n_repeats, X.shape[1]))
    work = X.copy()
    for r in range(n_repeats):
        perm = rng.permutation(X.shape[0])
        for j in range(X.shape[1]):
            work[:, j] = X[perm, j]
            drops[r, j] = baseline - auc_roc(ScoredSet(predict(work), y))
            work[:, j] = X[:, j]
    return ImportanceResult(baseline_auc=baseline, mean_drop=drops.mean(axis=0), drops=drops)


# --- CSV exports (headers fixed for golden-file tests) ---

ROC_HEADER = ["fpr", "tpr", "threshold"]
PR_HEADER = ["recall", "precision", "threshold"]
HIST_HEADER = ["bin_lo", "bin_hi", "neg_count", "pos_count"]
SUMMARY_HEADER = ["metric", "value"]


def write_report_csvs(report: MetricsReport, out_dir: str | Path, prefix: str = "") -> list[Path]:
    """Write roc/pr/hist/summary CSVs; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{prefix}_" if prefix else ""
    paths = []

    def _write(name: str, header: list[str], rows) -> None:
        path = out / f"{tag}{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        paths.append(path)

    _write("roc", ROC_HEADER, ([repr(f), repr(t), repr(th)] for f, t, th in report.roc_points))
    _write("pr", PR_HEADER, ([repr(r), repr(p), repr(th)] for r, p, th in report.pr_points))
    n_bins = len(report.neg_hist)
    _write("hist", HIST_HEADER, (
        [repr(i / n_bins), repr((i + 1) / n_bins), neg, pos]
        for i, (neg, pos) in enumerate(zip(report.neg_hist, report.pos_hist))
    ))
    _write("summary", SUMMARY_HEADER, [
        ["aucroc", repr(report.aucroc)],
        ["aucpr", repr(report.aucpr)],
        ["n_pos", report.n_pos],
        ["n_neg", report.n_neg],
    ])
    return paths
