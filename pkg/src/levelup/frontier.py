"""Accuracy/objective trade-off frontiers over constraint sweeps.

A frontier point records the policy, its pooled accuracy, the achieved
objective value (not the swept constraint parameter), and a per-group
statistics snapshot, so per-group trajectories along the sweep can be
read straight off the frontier.

Dominance is non-strict on one coordinate: point p is dominated by q
when q is at least as accurate and strictly better on the objective, or
strictly more accurate and at least as good on the objective.  Points
equal on both coordinates survive together.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics as M
from .data import DataError
from .metrics import FairnessMeasure, tracked_statistics
from .policy import (
    Equality,
    EnforcementResult,
    InfeasibleConstraintError,
    MinimumRate,
    ThresholdPolicy,
    Unconstrained,
    enforce,
    policy_from_json_dict,
    policy_to_json_dict,
)
from .scoring import ScoredDataset

__all__ = [
    "FrontierPoint",
    "FrontierResult",
    "pareto_prune",
    "equality_frontier",
    "mrc_frontier",
    "frontier_to_jsonl",
    "frontier_from_jsonl",
    "frontier_to_tsv",
]


@dataclass(frozen=True)
class FrontierPoint:
    """One policy on (or considered for) a frontier."""

    policy: ThresholdPolicy
    accuracy: float
    objective_value: float
    constraint_value: float | None
    per_group: M.GroupMetrics


@dataclass(frozen=True)
class FrontierResult:
    """Pruned frontier plus sweep bookkeeping.

    objective_direction is "min" when smaller objective values are better
    (disparity) and "max" when larger are better (minimum group rate).
    skipped lists sweep values that produced no feasible policy.
    """

    points: tuple[FrontierPoint, ...]
    objective: str
    objective_direction: str
    perfectly_fair_point_exists: bool
    skipped: tuple[str, ...]


def _dominates(a: FrontierPoint, b: FrontierPoint, direction: str) -> bool:
    """True when a dominates b."""
    if direction == "min":
        better = a.objective_value < b.objective_value
        no_worse = a.objective_value <= b.objective_value
    else:
        better = a.objective_value > b.objective_value
        no_worse = a.objective_value >= b.objective_value
    return (a.accuracy >= b.accuracy and better) or (
        a.accuracy > b.accuracy and no_worse
    )


def pareto_prune(
    points: list[FrontierPoint], direction: str = "min"
) -> list[FrontierPoint]:
    """Non-dominated subset, sorted by objective value (ascending).

    Single sorted sweep rather than the quadratic pairwise scan; the two
    agree, which the test suite checks against a brute-force oracle.
    """
    if direction not in ("min", "max"):
        raise DataError("direction must be 'min' or 'max'")
    if not points:
        return []
    sign = 1.0 if direction == "min" else -1.0
    order = sorted(
        range(len(points)),
        key=lambda i: (sign * points[i].objective_value, -points[i].accuracy),
    )
    keep: list[int] = []
    best_prior_acc = -np.inf  # over strictly better objectives
    i = 0
    while i < len(order):
        j = i
        tie_obj = points[order[i]].objective_value
        group = []
        while j < len(order) and points[order[j]].objective_value == tie_obj:
            group.append(order[j])
            j += 1
        top_acc = max(points[k].accuracy for k in group)
        for k in group:
            acc = points[k].accuracy
            if acc <= best_prior_acc:
                continue  # dominated from a strictly better objective
            if acc < top_acc:
                continue  # dominated within the tie group
            keep.append(k)
        best_prior_acc = max(best_prior_acc, top_acc)
        i = j
    keep.sort(key=lambda k: (sign * points[k].objective_value, points[k].accuracy))
    return [points[k] for k in keep]


def _point(result: EnforcementResult, objective_value: float,
           constraint_value: float | None) -> FrontierPoint:
    return FrontierPoint(
        policy=result.policy,
        accuracy=result.accuracy,
        objective_value=objective_value,
        constraint_value=constraint_value,
        per_group=result.metrics,
    )


def _dedup(points: list[FrontierPoint]) -> list[FrontierPoint]:
    seen = set()
    out = []
    for p in points:
        key = (p.policy.thresholds, p.accuracy, p.objective_value)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def equality_frontier(
    scored: ScoredDataset,
    measure: FairnessMeasure,
    resolution: int = 50,
) -> FrontierResult:
    """Sweep the equality tolerance from 0 to the unconstrained disparity.

    The sweep is linear in epsilon, endpoints included, and the
    unconstrained policy itself is added before pruning.  The objective
    recorded per point is the achieved disparity, which can sit well
    below the swept epsilon.
    """
    if resolution < 2:
        raise DataError("resolution must be >= 2")
    uncon = enforce(scored, Unconstrained())
    d0 = M.disparity(uncon.metrics, measure)
    if d0 is None:
        raise DataError(
            f"disparity of {measure.value} is undefined under the "
            "unconstrained policy; no frontier exists"
        )
    raw: list[FrontierPoint] = [_point(uncon, d0, None)]
    skipped: list[str] = []
    for eps in np.linspace(0.0, d0, resolution):
        try:
            res = enforce(scored, Equality(measure, float(eps)))
        except InfeasibleConstraintError as exc:
            skipped.append(f"epsilon={float(eps):.6g}: {exc}")
            continue
        d = M.disparity(res.metrics, measure)
        assert d is not None and d <= eps + 1e-12
        raw.append(_point(res, d, float(eps)))
    pts = pareto_prune(_dedup(raw), "min")
    return FrontierResult(
        points=tuple(pts),
        objective=f"disparity:{measure.value}",
        objective_direction="min",
        perfectly_fair_point_exists=any(p.objective_value == 0.0 for p in pts),
        skipped=tuple(skipped),
    )


def mrc_frontier(
    scored: ScoredDataset,
    statistic: str = "selection_rate",
    resolution: int = 50,
) -> FrontierResult:
    """Sweep a minimum rate from the unconstrained minimum up to 1.

    The objective recorded per point is the achieved minimum group value
    of the statistic.  Sweep values with no feasible policy are skipped
    and noted, not silently dropped.
    """
    if resolution < 2:
        raise DataError("resolution must be >= 2")
    uncon = enforce(scored, Unconstrained())
    vals = uncon.metrics.values(statistic)
    if any(v is None for v in vals):
        raise DataError(
            f"{statistic} is undefined for some group under the "
            "unconstrained policy; no frontier exists"
        )
    lo = min(vals)
    raw: list[FrontierPoint] = [_point(uncon, lo, None)]
    skipped: list[str] = []
    for tau in np.linspace(lo, 1.0, resolution):
        try:
            res = enforce(scored, MinimumRate(statistic, float(tau)))
        except InfeasibleConstraintError as exc:
            skipped.append(f"tau={float(tau):.6g}: {exc}")
            continue
        achieved = res.metrics.values(statistic)
        assert all(v is not None for v in achieved)
        raw.append(_point(res, min(achieved), float(tau)))
    pts = pareto_prune(_dedup(raw), "max")
    return FrontierResult(
        points=tuple(pts),
        objective=f"min_group:{statistic}",
        objective_direction="max",
        perfectly_fair_point_exists=False,
        skipped=tuple(skipped),
    )


# ---------------------------------------------------------------------------
# serialization

def _point_to_dict(p: FrontierPoint) -> dict:
    return {
        "policy": policy_to_json_dict(p.policy),
        "accuracy": p.accuracy,
        "objective_value": p.objective_value,
        "constraint_value": p.constraint_value,
        "per_group": M.metrics_to_json_dict(p.per_group),
    }


def frontier_to_jsonl(result: FrontierResult, path: str | Path) -> None:
    """One JSON object per line: a header line, then one line per point."""
    with open(path, "w", encoding="utf-8") as handle:
        header = {
            "objective": result.objective,
            "objective_direction": result.objective_direction,
            "perfectly_fair_point_exists": result.perfectly_fair_point_exists,
            "skipped": list(result.skipped),
            "points": len(result.points),
        }
        handle.write(json.dumps(header) + "\n")
        for p in result.points:
            handle.write(json.dumps(_point_to_dict(p)) + "\n")


def frontier_from_jsonl(path: str | Path) -> FrontierResult:
    with open(path, encoding="utf-8") as handle:
        lines = [json.loads(line) for line in handle if line.strip()]
    if not lines:
        raise DataError(f"{path} is empty")
    header, rows = lines[0], lines[1:]
    points = []
    for row in rows:
        gm_raw = row["per_group"]
        names = tuple(gm_raw.keys())
        stats = tuple(
            M.GroupStats(**{k: v for k, v in gm_raw[n].items() if k != "undefined"})
            for n in names
        )
        points.append(
            FrontierPoint(
                policy=policy_from_json_dict(row["policy"]),
                accuracy=row["accuracy"],
                objective_value=row["objective_value"],
                constraint_value=row["constraint_value"],
                per_group=M.GroupMetrics(stats=stats, group_names=names),
            )
        )
    return FrontierResult(
        points=tuple(points),
        objective=header["objective"],
        objective_direction=header["objective_direction"],
        perfectly_fair_point_exists=header["perfectly_fair_point_exists"],
        skipped=tuple(header["skipped"]),
    )


def frontier_to_tsv(result: FrontierResult, path: str | Path) -> None:
    """Two plot-ready columns: objective value and accuracy."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("objective\taccuracy\n")
        for p in result.points:
            handle.write(f"{p.objective_value!r}\t{p.accuracy!r}\n")
