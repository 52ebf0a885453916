"""Rule DSL parsing, evaluation semantics and the default rule set."""

import numpy as np
import pytest

from telemon import features, rules
from telemon.errors import ValidationError


def normal_day(**overrides):
    day = {name: 0.0 for name in features.FEATURE_NAMES}
    day.update({
        "age": 70, "weight_kg": 80.0, "sys_bp_mmhg": 120.0, "dia_bp_mmhg": 75.0,
        "spo2_pct": 96.0, "hr_bpm": 70.0, "sinus_rhythm": 1.0, "wellbeing": 4.0,
    })
    day.update(overrides)
    return day


def test_parse_single_rule_with_weight():
    ruleset = rules.parse_ruleset("low_spo2: spo2_pct < 90 weight 2\n")
    assert len(ruleset.rules) == 1
    rule = ruleset.rules[0]
    assert rule.name == "low_spo2"
    assert rule.feature == "spo2_pct"
    assert rule.comparator == "<"
    assert rule.threshold == 90.0
    assert rule.weight == 2.0


def test_parse_defaults_weight_to_one_and_skips_comments():
    ruleset = rules.parse_ruleset("# comment\n\nhot: hr_bpm > 100\n")
    assert ruleset.rules[0].weight == 1.0


def test_parse_rejects_unknown_feature():
    with pytest.raises(ValidationError, match="unknown feature"):
        rules.parse_ruleset("x: heart_rate_xyz > 1\n")


def test_parse_rejects_duplicates_and_malformed_lines():
    with pytest.raises(ValidationError, match="duplicate"):
        rules.parse_ruleset("a: hr_bpm > 1\na: hr_bpm > 2\n")
    with pytest.raises(ValidationError, match="malformed"):
        rules.parse_ruleset("a hr_bpm > 1\n")
    with pytest.raises(ValidationError, match="malformed"):
        rules.parse_ruleset("a: hr_bpm >> 1\n")


def test_empty_ruleset_scores_zero():
    ruleset = rules.parse_ruleset("")
    assert ruleset.rules == []
    assert rules.evaluate(ruleset, normal_day()) == 0.0


def test_evaluate_weighted_fraction():
    text = "\n".join(f"r{i}: age > {100 + i}" for i in range(8))
    ruleset = rules.parse_ruleset(text)
    assert rules.evaluate(ruleset, normal_day(age=99.0)) == 0.0
    # exactly one of eight unit-weight rules fires
    assert rules.evaluate(ruleset, normal_day(age=100.5)) == pytest.approx(1 / 8)
    assert rules.evaluate(ruleset, normal_day(age=200)) == 1.0


def test_evaluate_missing_feature_errors():
    ruleset = rules.parse_ruleset("a: spo2_pct < 90\n")
    day = normal_day()
    del day["spo2_pct"]
    with pytest.raises(ValidationError, match="missing feature"):
        rules.evaluate(ruleset, day)


def test_default_ruleset_composition():
    ruleset = rules.default_ruleset()
    assert len(ruleset.rules) == 10
    assert ruleset.total_weight == 13.0
    assert ruleset.version == "default-v1"
    names = [r.name for r in ruleset.rules]
    assert names[0] == "low_spo2" and "poor_wellbeing" in names


def test_default_ruleset_quiet_on_normal_day():
    assert rules.evaluate(rules.default_ruleset(), normal_day()) == 0.0


def test_default_ruleset_fires_on_derived_example():
    # spo2 88 trips low_spo2; +2.5 kg over 3 days trips rapid_weight_gain
    day = normal_day(spo2_pct=88.0, weight_diff_3d=2.5)
    fired = {r.name for r in rules.fired_rules(rules.default_ruleset(), day)}
    assert fired == {"low_spo2", "rapid_weight_gain"}
    assert rules.evaluate(rules.default_ruleset(), day) == pytest.approx(4 / 13)


def test_default_ruleset_round_trips():
    ruleset = rules.default_ruleset()
    assert rules.parse_ruleset(rules.serialize_ruleset(ruleset)) == ruleset


def test_equality_comparator_on_flags():
    ruleset = rules.parse_ruleset("af: atrial_fibrillation = 1\n")
    assert rules.evaluate(ruleset, normal_day(atrial_fibrillation=1.0)) == 1.0
    assert rules.evaluate(ruleset, normal_day(atrial_fibrillation=0.5)) == 0.0


def test_score_range_and_monotonicity():
    ruleset = rules.default_ruleset()
    rng = np.random.default_rng(3)
    days = []
    for _ in range(200):
        days.append(normal_day(
            spo2_pct=rng.uniform(80, 100), weight_diff_3d=rng.uniform(-3, 4),
            weight_diff_8d=rng.uniform(-3, 5), sys_bp_mmhg=rng.uniform(80, 180),
            hr_bpm=rng.uniform(40, 140), atrial_fibrillation=float(rng.random() < 0.3),
            ventricular_tachycardia=float(rng.random() < 0.1),
            wellbeing=float(rng.integers(1, 6)),
        ))
    scored = [(frozenset(r.name for r in rules.fired_rules(ruleset, d)),
               rules.evaluate(ruleset, d)) for d in days]
    for fired, score in scored:
        assert 0.0 <= score <= 1.0
    for fired_a, score_a in scored:
        for fired_b, score_b in scored:
            if fired_a <= fired_b:
                assert score_a <= score_b + 1e-12


def test_score_matrix_matches_evaluate():
    ruleset = rules.default_ruleset()
    rng = np.random.default_rng(4)
    days = []
    for _ in range(50):
        days.append(normal_day(
            spo2_pct=rng.uniform(80, 100), weight_diff_3d=rng.uniform(-3, 4),
            hr_bpm=rng.uniform(40, 140), wellbeing=float(rng.integers(1, 6)),
        ))
    X = np.array([[d[name] for name in features.FEATURE_NAMES] for d in days])
    vectorized = rules.score_matrix(ruleset, X)
    scalar = np.array([rules.evaluate(ruleset, d) for d in days])
    assert np.allclose(vectorized, scalar)


def test_evaluate_is_stateless():
    ruleset = rules.default_ruleset()
    day = normal_day(spo2_pct=85.0)
    assert rules.evaluate(ruleset, day) == rules.evaluate(ruleset, day)
