"""Configurable threshold rule engine: the rule-based baseline scorer.

Rules live in a tiny DSL, one rule per line:

    name: feature comparator threshold [weight w]

with `#` starting a comment and features drawn from the feature schema
(derived quantities like weight_diff_3d included). The score for a
patient-day is the weight of fired rules divided by the total weight, so
rule output is a graded risk in [0, 1] directly comparable with the
model's probabilities on ROC/PR axes.

The default rule set shipped here is a documented, clinically plausible
stand-in and is versioned so deployments can override it wholesale.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import features
from .errors import ValidationError

COMPARATORS = ("<=", ">=", "<", ">", "=")

_RULE_RE = re.compile(
    r"^(?P<name>[A-Za-z_]\w*)\s*:\s*(?P<feature>[A-Za-z_]\w*)\s*"
    r"(?P<cmp><=|>=|<|>|=)\s*(?P<threshold>[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"
    r"(?:\s+weight\s+(?P<weight>[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?))?\s*$"
)

_VERSION_COMMENT = "# ruleset-version:"


@dataclass
class Rule:
    name: str
    feature: str
    comparator: str
    threshold: float
    weight: float = 1.0

    def fires(self, value: float) -> bool:
        if self.comparator == "<":
            return value < self.threshold
        if self.comparator == "<=":
            return value <= self.threshold
        if self.comparator == ">":
            return value > self.threshold
        if self.comparator == ">=":
            return value >= self.threshold
        return value == self.threshold


@dataclass
class RuleSet:
    rules: list[Rule] = field(default_factory=list)
    version: str = "custom"

    @property
    def total_weight(self) -> float:
        return sum(r.weight for r in self.rules)


def parse_ruleset(text: str, version: str | None = None) -> RuleSet:
    """Parse rule DSL text into a validated RuleSet."""
    rules: list[Rule] = []
    names: set[str] = set()
    parsed_version = version
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith(_VERSION_COMMENT):
            parsed_version = parsed_version or line[len(_VERSION_COMMENT):].strip()
            continue
        if not line or line.startswith("#"):
            continue
        m = _RULE_RE.match(line)
        if not m:
            raise ValidationError(f"line {line_no}: malformed rule {line!r}")
        name = m.group("name")
        if name in names:
            raise ValidationError(f"line {line_no}: duplicate rule name {name!r}")
        names.add(name)
        feature = m.group("feature")
        if feature not in features.FEATURE_INDEX:
            raise ValidationError(f"line {line_no}: unknown feature {feature!r}")
        weight = float(m.group("weight")) if m.group("weight") else 1.0
        if weight <= 0:
            raise ValidationError(f"line {line_no}: rule weight must be positive")
        rules.append(Rule(
            name=name,
            feature=feature,
            comparator=m.group("cmp"),
            threshold=float(m.group("threshold")),
            weight=weight,
        ))
    return RuleSet(rules=rules, version=parsed_version or "custom")


def serialize_ruleset(ruleset: RuleSet) -> str:
    lines = [f"{_VERSION_COMMENT} {ruleset.version}"]
    for r in ruleset.rules:
        lines.append(f"{r.name}: {r.feature} {r.comparator} {repr(r.threshold)} weight {repr(r.weight)}")
    return "\n".join(lines) + "\n"


def fired_rules(ruleset: RuleSet, day_features: Mapping[str, float]) -> list[Rule]:
    fired = []
    for rule in ruleset.rules:
        if rule.feature not in day_features:
            raise ValidationError(f"rule {rule.name!r} references missing feature {rule.feature!r}")
        if rule.fires(float(day_features[rule.feature])):
            fired.append(rule)
    return fired


def evaluate(ruleset: RuleSet, day_features: Mapping[str, float]) -> float:
    """Weighted fraction of fired rules; 0.0 for an empty rule set."""
    if not ruleset.rules:
        return 0.0
    return sum(r.weight for r in fired_rules(ruleset, day_features)) / ruleset.total_weight


def score_matrix(ruleset: RuleSet, X_raw: np.ndarray) -> np.ndarray:
    """evaluate() over schema-ordered raw feature rows."""
    X_raw = np.asarray(X_raw, dtype=np.float64)
    if X_raw.ndim == 1:
        X_raw = X_raw[None, :]
    if X_raw.shape[1] != features.N_FEATURES:
        raise ValidationError(f"expected {features.N_FEATURES} features, got {X_raw.shape[1]}")
    if not ruleset.rules:
        return np.zeros(X_raw.shape[0])
    scores = np.zeros(X_raw.shape[0])
    for rule in ruleset.rules:
        col = X_raw[:, features.FEATURE_INDEX[rule.feature]]
        if rule.comparator == "<":
            hit = col < rule.threshold
        elif rule.comparator == "<=":
            hit = col <= rule.threshold
        elif rule.comparator == ">":
            hit = col > rule.threshold
        elif rule.comparator == ">=":
            hit = col >= rule.threshold
        else:
            hit = col == rule.threshold
        scores += hit * rule.weight
    return scores / ruleset.total_weight


DEFAULT_RULESET_VERSION = "default-v1"

_DEFAULT_RULES = """\
# Stand-in heart-failure monitoring thresholds; override per deployment.
low_spo2: spo2_pct < 90 weight 2
rapid_weight_gain: weight_diff_3d >= 2.0 weight 2
weight_gain_8d: weight_diff_8d >= 2.5
hypotension: sys_bp_mmhg < 90
hypertension: sys_bp_mmhg > 160
bradycardia: hr_bpm < 50
tachycardia: hr_bpm > 120
new_af: atrial_fibrillation = 1
vt: ventricular_tachycardia = 1 weight 2
poor_wellbeing: wellbeing <= 2
"""


def default_ruleset() -> RuleSet:
    """The documented default rule set (version default-v1)."""
    return parse_ruleset(_DEFAULT_RULES, version=DEFAULT_RULESET_VERSION)
