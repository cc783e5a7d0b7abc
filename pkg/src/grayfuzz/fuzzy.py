"""Triangular membership partitions, rule learning from numeric pairs, and
min/max inference with centroid decoding over the [0, 255] intensity domain.

Partitions are Ruspini by construction: interior regions are triangles whose
feet sit on the neighbouring peaks, the two boundary regions are shoulders
anchored at 0 and 255, so memberships sum to one everywhere.

Rule learning is the classic one-pass numeric procedure: every data pair
votes for the cell combination where its memberships peak, carries a degree
equal to the product of those memberships, and conflicting votes per
antecedent are resolved by keeping the strongest.

Inference fires each stored rule at ``degree * min(antecedent memberships)``
and aggregates by pointwise max over a 256-sample output curve.  A rule's
consequent envelope is the discretized prototype of its output region: a
unit spike at the region's peak level.  Decoding the aggregated spikes with
the centroid therefore interpolates between learned prototypes, and an input
sitting exactly on a prototype reproduces it exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .image_core import round_half_up

__all__ = [
    "MembershipFunction",
    "FuzzyPartition",
    "FuzzyRule",
    "RuleBase",
    "FuzzyOutput",
    "DefuzzResult",
    "build_partition",
    "membership",
    "generate_rules",
    "combine",
    "infer",
    "defuzzify",
    "DEFAULT_CLUSTER_GAP",
    "RULEBASE_SCHEMA",
]

DOMAIN_MAX = 255.0
DEFAULT_CLUSTER_GAP = 8.0
RULEBASE_SCHEMA = "grayfuzz.rulebase/1"


@dataclass(frozen=True)
class MembershipFunction:
    """Triangle with feet (left, right) and peak (center); a boundary region
    degenerates one side (left == center or center == right) and is flat at
    1 toward the domain edge."""

    left: float
    center: float
    right: float

    def __post_init__(self):
        if not (self.left <= self.center <= self.right):
            raise ValueError("need left <= center <= right")

    def __call__(self, x: float) -> float:
        return float(self.evaluate(np.asarray(x, dtype=np.float64)))

    def evaluate(self, x) -> np.ndarray:
        """Piecewise-linear membership of x (scalar or array)."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        if self.center > self.left:
            rising = (x >= self.left) & (x < self.center)
            out = np.where(rising, (x - self.left) / (self.center - self.left), out)
        else:
            out = np.where(x < self.center, 1.0, out)  # flat shoulder
        if self.right > self.center:
            falling = (x > self.center) & (x <= self.right)
            out = np.where(falling, (self.right - x) / (self.right - self.center), out)
        else:
            out = np.where(x > self.center, 1.0, out)  # flat shoulder
        out = np.where(x == self.center, 1.0, out)
        return out


@dataclass(frozen=True)
class FuzzyPartition:
    """Ordered Ruspini family covering [0, 255]; one function per region."""

    functions: Tuple[MembershipFunction, ...]

    def __post_init__(self):
        if len(self.functions) < 2:
            raise ValueError("a partition needs at least two regions")
        peaks = [f.center for f in self.functions]
        if any(b <= a for a, b in zip(peaks, peaks[1:])):
            raise ValueError("region centers must be strictly increasing")

    @property
    def region_count(self) -> int:
        return len(self.functions)

    @property
    def peaks(self) -> List[float]:
        return [f.center for f in self.functions]

    def evaluate(self, region_index: int, x) -> np.ndarray:
        if not 0 <= region_index < self.region_count:
            raise IndexError(f"region {region_index} out of range")
        return self.functions[region_index].evaluate(x)

    def memberships(self, x) -> np.ndarray:
        """All region memberships at x; shape (region_count,) + x.shape."""
        x = np.asarray(x, dtype=np.float64)
        return np.stack([f.evaluate(x) for f in self.functions])

    def best_regions(self, x) -> np.ndarray:
        """Index of the maximum-membership region (lowest index on ties)."""
        return np.argmax(self.memberships(x), axis=0)

    def spike_level(self, region_index: int) -> int:
        """Discretized prototype of a region: its peak as an intensity level."""
        if not 0 <= region_index < self.region_count:
            raise IndexError(f"region {region_index} out of range")
        level = int(round_half_up(self.functions[region_index].center))
        return min(max(level, 0), 255)

    def to_json_dict(self) -> dict:
        return {"peaks": self.peaks}


def _partition_from_peaks(peaks: Sequence[float]) -> FuzzyPartition:
    peaks = [float(p) for p in peaks]
    functions = []
    for i, center in enumerate(peaks):
        left = peaks[i - 1] if i > 0 else center
        right = peaks[i + 1] if i + 1 < len(peaks) else center
        functions.append(MembershipFunction(left=left, center=center, right=right))
    return FuzzyPartition(functions=tuple(functions))


def _cluster_anchors(anchors: Sequence[float], gap: float) -> List[float]:
    # single linkage: chain anchors whose consecutive spacing stays below gap
    ordered = sorted(float(a) for a in anchors)
    clusters: List[List[float]] = [[ordered[0]]]
    for a in ordered[1:]:
        if a - clusters[-1][-1] < gap:
            clusters[-1].append(a)
        else:
            clusters.append([a])
    return [sum(c) / len(c) for c in clusters]


def build_partition(
    anchors: Sequence[float],
    min_regions: int = 2,
    cluster_gap: float = DEFAULT_CLUSTER_GAP,
) -> FuzzyPartition:
    """Anchor-derived Ruspini partition.

    Near-identical anchors (spacing < cluster_gap) merge into one cluster
    whose mean becomes an interior peak; shoulder regions at 0 and 255 are
    always added.  If that yields fewer than ``min_regions`` regions, the
    widest peak gap (leftmost on ties) is split at its midpoint until the
    count is reached.
    """
    anchors = list(anchors)
    if not anchors:
        raise ValueError("need at least one anchor")
    if any(a < 0 or a > DOMAIN_MAX for a in anchors):
        raise ValueError("anchors must lie in [0, 255]")
    if min_regions < 2:
        raise ValueError("min_regions must be at least 2")
    centers = [c for c in _cluster_anchors(anchors, cluster_gap) if 0.0 < c < DOMAIN_MAX]
    peaks = [0.0] + centers + [DOMAIN_MAX]
    while len(peaks) < min_regions:
        gaps = [b - a for a, b in zip(peaks, peaks[1:])]
        widest = gaps.index(max(gaps))
        peaks.insert(widest + 1, (peaks[widest] + peaks[widest + 1]) / 2.0)
    return _partition_from_peaks(peaks)


def membership(partition: FuzzyPartition, region_index: int, x: float) -> float:
    """Degree of x in one region of the partition."""
    if not 0.0 <= x <= DOMAIN_MAX:
        raise ValueError(f"x={x} outside [0, 255]")
    return float(partition.evaluate(region_index, x))


@dataclass(frozen=True)
class FuzzyRule:
    """One learned rule: antecedent region per input, consequent region,
    and the membership-product degree of the pair that produced it."""

    antecedent: Tuple[int, ...]
    consequent: int
    degree: float


@dataclass(frozen=True)
class RuleBase:
    """Conflict-resolved rule collection plus the partitions it was built
    against; immutable, safe for concurrent read-only inference."""

    rules: Dict[Tuple[int, ...], Tuple[int, float]]
    in_partitions: Tuple[FuzzyPartition, ...]
    out_partition: FuzzyPartition

    def __len__(self) -> int:
        return len(self.rules)

    def sorted_rules(self) -> List[FuzzyRule]:
        return [
            FuzzyRule(antecedent=ant, consequent=cons, degree=deg)
            for ant, (cons, deg) in sorted(self.rules.items())
        ]

    def to_json_dict(self) -> dict:
        return {
            "schema": RULEBASE_SCHEMA,
            "inputs": [p.to_json_dict() for p in self.in_partitions],
            "output": self.out_partition.to_json_dict(),
            "rules": [
                {"antecedent": list(r.antecedent), "consequent": r.consequent,
                 "degree": r.degree}
                for r in self.sorted_rules()
            ],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RuleBase":
        if payload.get("schema") != RULEBASE_SCHEMA:
            raise ValueError(f"unsupported rule base schema {payload.get('schema')!r}")
        in_parts = tuple(_partition_from_peaks(p["peaks"]) for p in payload["inputs"])
        out_part = _partition_from_peaks(payload["output"]["peaks"])
        rules = {
            tuple(r["antecedent"]): (int(r["consequent"]), float(r["degree"]))
            for r in payload["rules"]
        }
        return cls(rules=rules, in_partitions=in_parts, out_partition=out_part)

    @classmethod
    def from_json_text(cls, text: str) -> "RuleBase":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class FuzzyOutput:
    """Aggregated output curve sampled at the 256 intensity levels."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if samples.shape != (256,):
            raise ValueError("output curve needs exactly 256 samples")
        if samples.min() < 0.0 or samples.max() > 1.0:
            raise ValueError("samples must lie in [0, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class DefuzzResult:
    level: int
    no_rule_fired: bool


def generate_rules(
    pairs: Sequence[Tuple[Sequence[float], float]],
    in_partitions: Sequence[FuzzyPartition],
    out_partition: FuzzyPartition,
) -> List[FuzzyRule]:
    """One candidate rule per data pair.

    Every coordinate (inputs and output) lands in its maximum-membership
    region, lower index winning ties; the rule degree is the product of
    those memberships.
    """
    if not pairs:
        return []
    n_inputs = len(in_partitions)
    inputs = np.asarray([list(p[0]) for p in pairs], dtype=np.float64)
    outputs = np.asarray([p[1] for p in pairs], dtype=np.float64)
    if inputs.shape[1] != n_inputs:
        raise ValueError("input tuple width does not match partition count")
    if inputs.min() < 0 or inputs.max() > DOMAIN_MAX or outputs.min() < 0 or outputs.max() > DOMAIN_MAX:
        raise ValueError("pair values must lie in [0, 255]")

    chosen_regions = []
    chosen_degrees = []
    for k, part in enumerate(in_partitions):
        grades = part.memberships(inputs[:, k])
        idx = np.argmax(grades, axis=0)
        chosen_regions.append(idx)
        chosen_degrees.append(grades[idx, np.arange(idx.size)])
    out_grades = out_partition.memberships(outputs)
    out_idx = np.argmax(out_grades, axis=0)
    out_degree = out_grades[out_idx, np.arange(out_idx.size)]

    degree = out_degree.copy()
    for d in chosen_degrees:
        degree = degree * d

    rules = []
    for j in range(len(pairs)):
        rules.append(
            FuzzyRule(
                antecedent=tuple(int(chosen_regions[k][j]) for k in range(n_inputs)),
                consequent=int(out_idx[j]),
                degree=float(degree[j]),
            )
        )
    return rules


def combine(
    rules: Iterable[FuzzyRule],
    in_partitions: Sequence[FuzzyPartition],
    out_partition: FuzzyPartition,
) -> RuleBase:
    """Resolve conflicts: one rule per antecedent, maximum degree winning,
    lower consequent index breaking exact ties.  Order-independent."""
    resolved: Dict[Tuple[int, ...], Tuple[int, float]] = {}
    for rule in rules:
        current = resolved.get(rule.antecedent)
        candidate = (rule.consequent, rule.degree)
        if (
            current is None
            or candidate[1] > current[1]
            or (candidate[1] == current[1] and candidate[0] < current[0])
        ):
            resolved[rule.antecedent] = candidate
    return RuleBase(
        rules=resolved,
        in_partitions=tuple(in_partitions),
        out_partition=out_partition,
    )


def infer(base: RuleBase, inputs: Sequence[float]) -> FuzzyOutput:
    """Max-min composition over the stored rules at one input point.

    firing = degree * min(antecedent memberships); each rule contributes its
    consequent envelope (unit spike at the region prototype) clipped at the
    firing strength; curves aggregate by pointwise max.
    """
    if len(base.rules) == 0:
        raise ValueError("empty rule base")
    if len(inputs) != len(base.in_partitions):
        raise ValueError("input arity does not match the rule base")
    curve = np.zeros(256, dtype=np.float64)
    for antecedent, (consequent, degree) in sorted(base.rules.items()):
        grades = [
            float(base.in_partitions[k].evaluate(region, inputs[k]))
            for k, region in enumerate(antecedent)
        ]
        strength = degree * min(grades)
        if strength <= 0.0:
            continue
        level = base.out_partition.spike_level(consequent)
        if strength > curve[level]:
            curve[level] = strength
    return FuzzyOutput(samples=curve)


def defuzzify(out: FuzzyOutput) -> DefuzzResult:
    """Centroid of the sampled curve, rounded half-up; an all-zero curve
    returns level 0 with the no_rule_fired flag set."""
    mass = float(out.samples.sum())
    if mass <= 0.0:
        return DefuzzResult(level=0, no_rule_fired=True)
    levels = np.arange(256, dtype=np.float64)
    centroid = float((levels * out.samples).sum()) / mass
    level = int(round_half_up(centroid))
    return DefuzzResult(level=min(max(level, 0), 255), no_rule_fired=False)
