"""ROC/PR metrics against hand-derived values and a brute-force pair oracle."""

import numpy as np
import pytest

from telemon import metrics
from telemon.errors import ValidationError
from telemon.metrics import MetricsReport, ScoredSet


def pair_statistic_auc(scores, labels) -> float:
    """Independent oracle: tie-corrected P(score+ > score-) by brute force."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pos = scores[labels]
    neg = scores[~labels]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


PERFECT = ScoredSet([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
HAND = ScoredSet([0.8, 0.6, 0.4, 0.2], [1, 0, 1, 0])


def test_roc_perfect_separation():
    points = [(f, t) for f, t, _ in metrics.roc_curve(PERFECT)]
    for expected in [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]:
        assert expected in points


def test_roc_all_scores_equal():
    scored = ScoredSet([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    points = metrics.roc_curve(scored)
    assert [(f, t) for f, t, _ in points] == [(0.0, 0.0), (1.0, 1.0)]


def test_roc_hand_enumerated_points():
    # Thresholds 0.8, 0.6, 0.4, 0.2 give (fpr, tpr) of
    # (0, .5), (.5, .5), (.5, 1), (1, 1) -- enumerated by hand.
    points = [(f, t) for f, t, _ in metrics.roc_curve(HAND)]
    assert points == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]


def test_roc_single_class_rejected():
    with pytest.raises(ValidationError):
        metrics.roc_curve(ScoredSet([0.1, 0.9], [1, 1]))


def test_auc_trivial_values():
    assert metrics.auc_roc(PERFECT) == 1.0
    assert metrics.auc_roc(ScoredSet([0.5] * 6, [1, 0, 1, 0, 1, 0])) == 0.5


def test_auc_hand_value_and_oracle():
    # 3 of the 4 (positive, negative) pairs are correctly ordered.
    assert metrics.auc_roc(HAND) == pytest.approx(0.75, abs=1e-12)
    assert pair_statistic_auc(HAND.scores, HAND.labels) == pytest.approx(0.75, abs=1e-12)


def test_pr_perfect_and_constant():
    assert metrics.auc_pr(ScoredSet([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])) == pytest.approx(1.0)
    constant = ScoredSet([0.3] * 8, [1, 0, 0, 0, 1, 0, 0, 0])
    assert metrics.auc_pr(constant) == pytest.approx(0.25)


def test_pr_hand_enumerated_curve():
    points = metrics.pr_curve(HAND)
    expected = [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3), (1.0, 0.5)]
    assert [(r, p) for r, p, _ in points] == pytest.approx(expected)
    assert metrics.auc_pr(HAND) == pytest.approx(0.5 * 1.0 + 0.5 * (2 / 3), abs=1e-12)


def test_pr_needs_positives():
    with pytest.raises(ValidationError):
        metrics.pr_curve(ScoredSet([0.2, 0.4], [0, 0]))


def test_histograms_basic_and_conservation():
    neg, pos = metrics.score_histograms(ScoredSet([0.0, 1.0], [0, 1]), n_bins=2)
    assert neg == [1, 0] and pos == [0, 1]

    rng = np.random.default_rng(0)
    scored = ScoredSet(rng.random(500), rng.random(500) < 0.3)
    neg, pos = metrics.score_histograms(scored)
    assert sum(neg) == scored.n_neg and sum(pos) == scored.n_pos


def _report(aucroc, aucpr=0.5, n_pos=10, n_neg=90):
    return MetricsReport(roc_points=[(0.0, 0.0, float("inf")), (1.0, 1.0, 0.0)],
                         aucroc=aucroc, pr_points=[(1.0, 0.1, 0.0)], aucpr=aucpr,
                         neg_hist=[n_neg], pos_hist=[n_pos], n_pos=n_pos, n_neg=n_neg)


def test_compare_delta_and_antisymmetry():
    a, b = _report(0.84), _report(0.73)
    comparison = metrics.compare(a, b)
    assert comparison.aucroc_delta == pytest.approx(0.11)
    reverse = metrics.compare(b, a)
    assert reverse.aucroc_delta == pytest.approx(-comparison.aucroc_delta)
    same = metrics.compare(a, a)
    assert same.aucroc_delta == 0.0 and same.aucpr_delta == 0.0
    for _, _, delta in same.sensitivity.values():
        assert delta == 0.0


def test_compare_rejects_mismatched_labels():
    with pytest.raises(ValidationError):
        metrics.compare(_report(0.8, n_pos=10), _report(0.8, n_pos=11))


def test_sensitivity_at_specificity():
    points = metrics.roc_curve(HAND)
    assert metrics.sensitivity_at_specificity(points, 0.9) == 0.5
    assert metrics.sensitivity_at_specificity(points, 0.5) == 1.0


# --- permutation importance ---

def test_importance_ignored_feature_is_zero():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 4))
    y = rng.random(300) < 0.4
    weights = np.array([1.0, 0.0, -2.0, 0.5])  # feature 1 is ignored

    def predict(M):
        return 1 / (1 + np.exp(-(M @ weights)))

    result = metrics.permutation_importance(predict, X, y, n_repeats=6, seed=3)
    assert (result.drops[:, 1] == 0.0).all()


def test_importance_informative_feature_ranks_first():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(400, 6))
    y = rng.random(400) < 0.5
    X[:, 4] = np.where(y, 1.0, -1.0) + rng.normal(0, 0.2, 400)

    def predict(M):
        return 1 / (1 + np.exp(-M[:, 4]))

    result = metrics.permutation_importance(predict, X, y, n_repeats=10, seed=4)
    assert result.mean_drop.argmax() == 4
    assert (result.drops.argmax(axis=1) == 4).all()


def test_importance_invariant_to_feature_order():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 5))
    y = rng.random(200) < 0.5
    weights = rng.normal(size=5)

    def predict(M):
        return 1 / (1 + np.exp(-(M @ weights)))

    order = np.array([3, 0, 4, 1, 2])

    def predict_reordered(M):
        return 1 / (1 + np.exp(-(M @ weights[order])))

    base = metrics.permutation_importance(predict, X, y, n_repeats=5, seed=6)
    swapped = metrics.permutation_importance(predict_reordered, X[:, order], y, n_repeats=5, seed=6)
    assert np.allclose(base.mean_drop[order], swapped.mean_drop)


# --- property suites ---

def test_auc_equals_pair_statistic_on_random_sets():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 201))
        labels = rng.random(n) < rng.uniform(0.1, 0.9)
        if labels.all() or not labels.any():
            labels[0] = True
            labels[-1] = False
        # quantized scores force plenty of ties
        scores = np.round(rng.random(n), int(rng.integers(1, 3)))
        scored = ScoredSet(scores, labels)
        assert abs(metrics.auc_roc(scored) - pair_statistic_auc(scores, labels)) < 1e-12


def test_auc_label_flip_symmetry():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(4, 120))
        labels = rng.random(n) < 0.5
        if labels.all() or not labels.any():
            labels[0] = True
            labels[-1] = False
        scores = np.round(rng.random(n), 2)
        original = metrics.auc_roc(ScoredSet(scores, labels))
        flipped = metrics.auc_roc(ScoredSet(-scores, ~labels))
        assert abs(original - flipped) < 1e-12


def test_auc_invariant_under_monotone_transforms():
    rng = np.random.default_rng(9)
    scores = np.round(rng.random(80), 2)
    labels = rng.random(80) < 0.4
    labels[0], labels[-1] = True, False
    base_points = [(f, t) for f, t, _ in metrics.roc_curve(ScoredSet(scores, labels))]
    base_auc = metrics.auc_roc(ScoredSet(scores, labels))
    for transform in (lambda s: s**3 + 2 * s, np.exp, lambda s: 10 * s - 3):
        scored = ScoredSet(transform(scores), labels)
        assert [(f, t) for f, t, _ in metrics.roc_curve(scored)] == base_points
        assert metrics.auc_roc(scored) == base_auc


def test_random_scores_near_half_auc():
    rng = np.random.default_rng(10)
    scores = rng.random(10_000)
    labels = np.arange(10_000) % 2 == 0
    auc = metrics.auc_roc(ScoredSet(scores, labels))
    assert 0.47 <= auc <= 0.53


def test_report_csv_headers(tmp_path, separable_split):
    scored = ScoredSet(HAND.scores, HAND.labels)
    report = metrics.compute_report(scored)
    paths = metrics.write_report_csvs(report, tmp_path, prefix="model")
    by_name = {p.name: p for p in paths}
    assert set(by_name) == {"model_roc.csv", "model_pr.csv", "model_hist.csv", "model_summary.csv"}
    assert by_name["model_roc.csv"].read_text().splitlines()[0] == "fpr,tpr,threshold"
    assert by_name["model_pr.csv"].read_text().splitlines()[0] == "recall,precision,threshold"
    assert by_name["model_hist.csv"].read_text().splitlines()[0] == "bin_lo,bin_hi,neg_count,pos_count"
    summary = dict(line.split(",") for line in by_name["model_summary.csv"].read_text().splitlines()[1:])
    assert float(summary["aucroc"]) == 0.75
    assert int(summary["n_pos"]) == 2
