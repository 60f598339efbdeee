"""Per-group decision thresholds and constrained threshold selection.

Decision rule: predict positive iff score >= threshold, with one
threshold per group.  Thresholds live in [0, 1] except the sentinel
REJECT_ALL (the only permitted value above 1), which rejects every row.

Candidate grid.  For a group with n distinct scores the useful
thresholds are 0 (accept all), the n - 1 midpoints between consecutive
distinct scores, and REJECT_ALL: n + 1 candidates that realize every
achievable confusion outcome for that group exactly once.

Search.  enforce() maximizes pooled accuracy over the product of
per-group candidate grids subject to the constraint.  Accuracy ties are
broken, in order, by lower disparity of the constraint's statistic,
higher minimum group value of that statistic, then the lexicographically
smallest threshold vector.  Unconstrained has no relevant statistic, so
its ties go straight to the lexicographic rule.  The search is exact for
separable constraints (Unconstrained, MinimumRate, MaximumRate) at any
group count and for Equality up to 3 groups; Equality with 4 or more
groups falls back to multi-start coordinate descent and the result is
flagged approximate.

Levelling-up floor.  MinimumRate enforcement never returns a policy in
which any group's constrained statistic falls below the value that group
gets under Unconstrained: the feasible set is statistic >= max(tau,
unconstrained value).  Equality carries no such floor; dragging the
better-off group down is exactly the behaviour it is allowed to exhibit,
and the audit module exists to expose it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import metrics as M
from .data import DataError
from .metrics import FairnessMeasure, harm_profile, tracked_statistics
from .scoring import ScoredDataset

__all__ = [
    "REJECT_ALL",
    "ThresholdPolicy",
    "Provenance",
    "Equality",
    "MinimumRate",
    "MaximumRate",
    "Unconstrained",
    "Constraint",
    "EnforcementResult",
    "InfeasibleConstraintError",
    "candidate_thresholds",
    "enforce",
    "partial_level_up",
    "full_level_up",
    "policy_to_json_dict",
    "policy_from_json_dict",
]

REJECT_ALL = 1.5

MIN_RATE_STATISTICS = ("selection_rate", "tpr", "tnr", "precision")

# How each statistic responds to raising the threshold; "up" means the
# statistic can only grow as the threshold grows.
_THRESHOLD_RESPONSE = {
    "selection_rate": "down",
    "tpr": "down",
    "tnr": "up",
    "fpr": "down",
    "fnr": "up",
    "precision": "nonmonotone",
    "npv": "nonmonotone",
    "accuracy": "nonmonotone",
}


@dataclass(frozen=True)
class Provenance:
    """How a policy was produced, for the serialized record."""

    constraint: str
    parameters: dict
    search: str
    approximate: bool = False
    note: str = ""


@dataclass(frozen=True)
class ThresholdPolicy:
    """One decision threshold per group id."""

    thresholds: tuple[float, ...]
    group_names: tuple[str, ...]
    provenance: Provenance

    def __post_init__(self):
        if len(self.thresholds) != len(self.group_names):
            raise DataError("one threshold per group required")
        for t in self.thresholds:
            if not (0.0 <= t <= 1.0 or t == REJECT_ALL):
                raise DataError(
                    f"threshold {t} outside [0, 1] and not the reject-all sentinel"
                )

    def threshold_for(self, name: str) -> float:
        return self.thresholds[self.group_names.index(name)]


@dataclass(frozen=True)
class Equality:
    """Disparity of the measure's statistic(s) must not exceed epsilon."""

    measure: FairnessMeasure
    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise DataError("epsilon must be >= 0")
        if not harm_profile(self.measure).enforceable:
            raise DataError(f"{self.measure.value} is reportable but not enforceable")


@dataclass(frozen=True)
class MinimumRate:
    """Every group's statistic must reach at least tau."""

    statistic: str
    tau: float

    def __post_init__(self):
        if self.statistic not in MIN_RATE_STATISTICS:
            raise DataError(
                f"minimum rate statistic must be one of {MIN_RATE_STATISTICS}"
            )
        if not 0.0 <= self.tau <= 1.0:
            raise DataError("tau must lie in [0, 1]")


@dataclass(frozen=True)
class MaximumRate:
    """Every group's selection rate must stay at or below kappa."""

    kappa: float
    statistic: str = "selection_rate"

    def __post_init__(self):
        if self.statistic != "selection_rate":
            raise DataError("maximum rate supports only selection_rate")
        if not 0.0 <= self.kappa <= 1.0:
            raise DataError("kappa must lie in [0, 1]")


@dataclass(frozen=True)
class Unconstrained:
    pass


Constraint = Equality | MinimumRate | MaximumRate | Unconstrained


class InfeasibleConstraintError(RuntimeError):
    """No candidate policy satisfies the constraint.

    blocking_group names the group that makes a per-group requirement
    unreachable, when one group alone is responsible.
    """

    def __init__(self, message: str, blocking_group: str | None = None):
        super().__init__(message)
        self.blocking_group = blocking_group


@dataclass(frozen=True)
class EnforcementResult:
    policy: ThresholdPolicy
    metrics: M.GroupMetrics
    accuracy: float


# ---------------------------------------------------------------------------
# candidate tables


@dataclass
class _GroupTable:
    """Confusion outcomes at every candidate threshold for one group."""

    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    n: int
    pos: int
    neg: int

    @property
    def m(self) -> int:
        return len(self.thresholds)

    @property
    def fn(self) -> np.ndarray:
        return self.pos - self.tp

    @property
    def tn(self) -> np.ndarray:
        return self.neg - self.fp

    @property
    def correct(self) -> np.ndarray:
        return self.tp + self.tn

    def stat(self, name: str) -> np.ndarray:
        """Statistic at every candidate; NaN where UNDEFINED."""
        tp, fp = self.tp.astype(np.float64), self.fp.astype(np.float64)
        tn, fn = self.tn.astype(np.float64), self.fn.astype(np.float64)
        if name == "selection_rate":
            return (tp + fp) / self.n
        if name == "accuracy":
            return (tp + tn) / self.n
        if name == "tpr":
            return tp / self.pos if self.pos else np.full(self.m, np.nan)
        if name == "fnr":
            return fn / self.pos if self.pos else np.full(self.m, np.nan)
        if name == "tnr":
            return tn / self.neg if self.neg else np.full(self.m, np.nan)
        if name == "fpr":
            return fp / self.neg if self.neg else np.full(self.m, np.nan)
        if name == "precision":
            den = tp + fp
            return np.where(den > 0, tp / np.where(den > 0, den, 1.0), np.nan)
        if name == "npv":
            den = tn + fn
            return np.where(den > 0, tn / np.where(den > 0, den, 1.0), np.nan)
        raise DataError(f"unknown statistic {name!r}")


def _build_tables(scored: ScoredDataset) -> list[_GroupTable]:
    tables = []
    for gid in range(scored.n_groups):
        rows = scored.group_rows(gid)
        s = scored.scores[rows]
        y = scored.labels[rows]
        order = np.argsort(s, kind="stable")
        s, y = s[order], y[order]
        distinct, start = np.unique(s, return_index=True)
        pos_at = np.add.reduceat(y, start) if len(s) else np.array([], dtype=np.int64)
        tot_at = np.diff(np.append(start, len(s)))
        neg_at = tot_at - pos_at
        # suffix sums: candidate k selects the distinct scores from k on
        tp = np.append(np.cumsum(pos_at[::-1])[::-1], 0)
        fp = np.append(np.cumsum(neg_at[::-1])[::-1], 0)
        thresholds = np.empty(len(distinct) + 1)
        thresholds[0] = 0.0
        for k in range(1, len(distinct)):
            a, b = distinct[k - 1], distinct[k]
            mid = (a + b) / 2.0
            # guard against the midpoint rounding onto the lower score
            thresholds[k] = mid if a < mid else b
        thresholds[-1] = REJECT_ALL
        tables.append(
            _GroupTable(
                thresholds=thresholds,
                tp=tp.astype(np.int64),
                fp=fp.astype(np.int64),
                n=len(rows),
                pos=int(y.sum()),
                neg=len(rows) - int(y.sum()),
            )
        )
    return tables


def candidate_thresholds(scored: ScoredDataset, gid: int) -> np.ndarray:
    """All useful thresholds for one group, ascending: 0, midpoints, sentinel."""
    if not 0 <= gid < scored.n_groups:
        raise DataError(f"no group with id {gid}")
    return _build_tables(scored)[gid].thresholds.copy()


# ---------------------------------------------------------------------------
# tie-break machinery

def _finalist_keys(tables, combos, stat_names, primary):
    """Key arrays (disparity, -min primary, thresholds...) for finalist combos."""
    G = len(tables)
    F = len(combos)
    idx = np.asarray(combos, dtype=np.int64).reshape(F, G)
    disp = np.zeros(F)
    for name in stat_names:
        vals = np.stack([tables[g].stat(name)[idx[:, g]] for g in range(G)], axis=1)
        disp = np.maximum(disp, vals.max(axis=1) - vals.min(axis=1))
    prim = np.stack([tables[g].stat(primary)[idx[:, g]] for g in range(G)], axis=1)
    min_prim = prim.min(axis=1)
    thr = np.stack([tables[g].thresholds[idx[:, g]] for g in range(G)], axis=1)
    return disp, min_prim, thr, idx


def _pick_best(tables, combos, stat_names, primary):
    """Deterministic winner among accuracy-tied feasible combos."""
    if len(combos) == 1:
        return tuple(combos[0])
    G = len(tables)
    if stat_names:
        disp, min_prim, thr, idx = _finalist_keys(tables, combos, stat_names, primary)
        keys = [thr[:, g] for g in reversed(range(G))] + [-min_prim, disp]
    else:
        idx = np.asarray(combos, dtype=np.int64).reshape(len(combos), G)
        thr = np.stack([tables[g].thresholds[idx[:, g]] for g in range(G)], axis=1)
        keys = [thr[:, g] for g in reversed(range(G))]
    best = np.lexsort(tuple(keys))[0]
    return tuple(int(v) for v in idx[best])


# ---------------------------------------------------------------------------
# separable constraints: per-group feasible sets, exact at any group count

def _unconstrained_indices(tables) -> tuple[int, ...]:
    picks = []
    for t in tables:
        c = t.correct
        picks.append(int(np.flatnonzero(c == c.max())[0]))
    return tuple(picks)


def _separable_search(tables, group_names, per_group_feasible, stat_names, primary):
    """Exact search when both objective and constraint split across groups."""
    finalist_sets = []
    for g, t in enumerate(tables):
        feas = per_group_feasible[g]
        if not np.any(feas):
            return None, g
        c = np.where(feas, t.correct, -1)
        finalists = np.flatnonzero(c == c.max())
        finalist_sets.append([int(i) for i in finalists])
    n_combos = 1
    for s in finalist_sets:
        n_combos *= len(s)
    if n_combos > 1_000_000:
        # Degenerate tie plateau; resolve per group by the lexicographic rule.
        combos = [tuple(s[0] for s in finalist_sets)]
    else:
        combos = list(itertools.product(*finalist_sets))
    return _pick_best(tables, combos, stat_names, primary), None


# ---------------------------------------------------------------------------
# equality constraint: coupled search over the grid product

def _equality_grid_search(tables, eps, stat_names, primary):
    """Exact chunked scan of the full candidate product, 2 or 3 groups."""
    G = len(tables)
    ms = [t.m for t in tables]
    tail = int(np.prod(ms[1:])) if G > 1 else 1
    chunk = max(1, int(4_000_000 // max(tail, 1)))

    def tail_shape(x, g):
        # reshape group g's array for broadcasting over groups 1..G-1
        shape = [1] * (G - 1)
        shape[g - 1] = -1
        return x.reshape(shape)

    stat_arrays = {name: [t.stat(name) for t in tables] for name in stat_names}
    correct = [t.correct for t in tables]

    best_correct = -1
    finalists: list[tuple[int, ...]] = []
    min_disp = np.inf
    any_defined = False

    for lo in range(0, ms[0], chunk):
        hi = min(lo + chunk, ms[0])
        span = hi - lo
        shape = (span, *ms[1:])
        disp = np.zeros(shape)
        for name in stat_names:
            arrs = stat_arrays[name]
            top = arrs[0][lo:hi].reshape((span,) + (1,) * (G - 1))
            smax, smin = top, top
            for g in range(1, G):
                sg = tail_shape(arrs[g], g)[None, ...]
                smax = np.maximum(smax, sg)
                smin = np.minimum(smin, sg)
            disp = np.maximum(disp, np.broadcast_to(smax - smin, shape))
        defined = ~np.isnan(disp)
        if defined.any():
            any_defined = True
            min_disp = min(min_disp, float(np.nanmin(disp)))
        feasible = disp <= eps
        if not feasible.any():
            continue
        ctot = correct[0][lo:hi].reshape((span,) + (1,) * (G - 1)).copy()
        for g in range(1, G):
            ctot = ctot + tail_shape(correct[g], g)[None, ...]
        ctot = np.where(feasible, ctot, -1)
        local_best = int(ctot.max())
        if local_best < 0 or local_best < best_correct:
            continue
        where = np.argwhere(ctot == local_best)
        where[:, 0] += lo
        combos = [tuple(int(v) for v in row) for row in where]
        if local_best > best_correct:
            best_correct = local_best
            finalists = combos
        else:
            finalists.extend(combos)

    if best_correct < 0:
        if not any_defined:
            raise InfeasibleConstraintError(
                "tracked statistic is undefined for every candidate policy"
            )
        raise InfeasibleConstraintError(
            f"no candidate policy reaches disparity <= {eps}; "
            f"minimum achievable disparity is {min_disp:.6g}"
        )
    return _pick_best(tables, finalists, stat_names, primary)


def _single_axis_keys(tables, idx, axis, eps, stat_names, primary):
    """Feasibility and tie keys along one axis with the others pinned."""
    G = len(tables)
    t = tables[axis]
    m = t.m
    disp = np.zeros(m)
    for name in stat_names:
        others = [
            tables[g].stat(name)[idx[g]] for g in range(G) if g != axis
        ]
        omax = max(others)
        omin = min(others)
        sg = t.stat(name)
        disp = np.maximum(disp, np.maximum(sg, omax) - np.minimum(sg, omin))
    feasible = disp <= eps
    base = sum(tables[g].correct[idx[g]] for g in range(G) if g != axis)
    ctot = base + t.correct
    oprim = [tables[g].stat(primary)[idx[g]] for g in range(G) if g != axis]
    min_prim = np.minimum(t.stat(primary), min(oprim)) if oprim else t.stat(primary)
    return feasible, ctot, disp, min_prim


def _equality_descent(tables, eps, stat_names, primary):
    """Multi-start coordinate descent for 4 or more groups; approximate."""
    G = len(tables)
    starts = [
        list(_unconstrained_indices(tables)),
        [0] * G,
        [t.m - 1 for t in tables],
    ]
    best_state = None
    best_key = None
    for start in starts:
        idx = list(start)
        for _ in range(100):
            moved = False
            for axis in range(G):
                feasible, ctot, disp, min_prim = _single_axis_keys(
                    tables, idx, axis, eps, stat_names, primary
                )
                thr = tables[axis].thresholds
                cur = idx[axis]
                # favour feasibility, then the documented tie-break chain
                cand_key = np.lexsort(
                    (thr, -min_prim, np.where(np.isnan(disp), np.inf, disp),
                     -ctot, ~feasible)
                )[0]
                better = (
                    (feasible[cand_key], ctot[cand_key], -disp[cand_key],
                     min_prim[cand_key], -thr[cand_key])
                    > (feasible[cur], ctot[cur], -disp[cur],
                       min_prim[cur], -thr[cur])
                )
                if cand_key != cur and better:
                    idx[axis] = int(cand_key)
                    moved = True
            if not moved:
                break
        feasible, ctot, disp, min_prim = _single_axis_keys(
            tables, idx, 0, eps, stat_names, primary
        )
        k = idx[0]
        if not feasible[k]:
            continue
        key = (ctot[k], -disp[k], min_prim[k],
               tuple(-tables[g].thresholds[idx[g]] for g in range(G)))
        if best_key is None or key > best_key:
            best_key = key
            best_state = tuple(idx)
    if best_state is None:
        raise InfeasibleConstraintError(
            f"no feasible policy found for disparity <= {eps} "
            "(approximate search over 4 or more groups)"
        )
    return best_state


# ---------------------------------------------------------------------------
# enforce

def _finish(scored, tables, picks, constraint_name, parameters, search,
            approximate=False, note=""):
    thresholds = tuple(float(tables[g].thresholds[picks[g]]) for g in range(len(tables)))
    policy = ThresholdPolicy(
        thresholds=thresholds,
        group_names=tuple(scored.group_names),
        provenance=Provenance(
            constraint=constraint_name,
            parameters=parameters,
            search=search,
            approximate=approximate,
            note=note,
        ),
    )
    counts = M.confusion(scored, policy)
    gm = M.group_metrics(counts)
    correct = sum(counts.tp) + sum(counts.tn)
    expected = sum(int(tables[g].correct[picks[g]]) for g in range(len(tables)))
    assert correct == expected, "candidate table disagrees with direct tally"
    return EnforcementResult(
        policy=policy, metrics=gm, accuracy=correct / scored.n_rows
    )


def enforce(scored: ScoredDataset, constraint: Constraint) -> EnforcementResult:
    """Best-accuracy threshold policy subject to the constraint.

    Raises InfeasibleConstraintError when no candidate policy satisfies
    it, naming the blocking group when a per-group requirement is the
    cause.
    """
    tables = _build_tables(scored)
    G = len(tables)

    if isinstance(constraint, Unconstrained):
        feas = [np.ones(t.m, dtype=bool) for t in tables]
        picks, _ = _separable_search(tables, scored.group_names, feas, (), "")
        return _finish(scored, tables, picks, "unconstrained", {}, "exact-grid")

    if isinstance(constraint, (MinimumRate, MaximumRate)):
        stat = constraint.statistic
        base = _unconstrained_indices(tables)
        feas = []
        for g, t in enumerate(tables):
            vals = t.stat(stat)
            if isinstance(constraint, MinimumRate):
                floor = vals[base[g]]
                need = constraint.tau if np.isnan(floor) else max(constraint.tau, float(floor))
                ok = vals >= need
            else:
                ok = vals <= constraint.kappa
            feas.append(ok)
        picks, blocked = _separable_search(
            tables, scored.group_names, feas, (stat,), stat
        )
        if picks is None:
            name = scored.group_names[blocked]
            vals = tables[blocked].stat(stat)
            if np.all(np.isnan(vals)):
                raise InfeasibleConstraintError(
                    f"{stat} is undefined for every candidate threshold of "
                    f"group {name!r}",
                    blocking_group=name,
                )
            bound = constraint.tau if isinstance(constraint, MinimumRate) else constraint.kappa
            word = "minimum" if isinstance(constraint, MinimumRate) else "maximum"
            extreme = float(np.nanmax(vals)) if isinstance(constraint, MinimumRate) else float(np.nanmin(vals))
            raise InfeasibleConstraintError(
                f"{word} {stat} {bound} is unreachable for group {name!r}; "
                f"best achievable is {extreme:.6g}",
                blocking_group=name,
            )
        if isinstance(constraint, MinimumRate):
            kind, params = "minimum_rate", {"statistic": stat, "tau": constraint.tau}
        else:
            kind, params = "maximum_rate", {"statistic": stat, "kappa": constraint.kappa}
        return _finish(scored, tables, picks, kind, params, "exact-grid")

    if isinstance(constraint, Equality):
        names = tracked_statistics(constraint.measure)
        primary = names[0]
        params = {"measure": constraint.measure.value, "epsilon": constraint.epsilon}
        if G <= 3:
            picks = _equality_grid_search(tables, constraint.epsilon, names, primary)
            return _finish(scored, tables, picks, "equality", params, "exact-grid")
        picks = _equality_descent(tables, constraint.epsilon, names, primary)
        return _finish(
            scored, tables, picks, "equality", params, "coordinate-descent",
            approximate=True,
            note="equality over 4 or more groups uses multi-start coordinate "
            "descent; the result may be suboptimal",
        )

    raise DataError(f"unknown constraint {constraint!r}")


# ---------------------------------------------------------------------------
# levelling up

def _level_single_group(table, start_idx, stat_name, target):
    """Nearest candidate (by grid distance from start) reaching the target.

    Scans outward from the starting candidate, preferring the lower
    threshold on ties.  Falls back to the best achievable value when the
    target is unreachable; the second return flags that case.
    """
    vals = table.stat(stat_name)
    m = table.m
    best_fallback = start_idx
    for d in range(0, m):
        for k in (start_idx - d, start_idx + d):
            if not 0 <= k < m:
                continue
            v = vals[k]
            if np.isnan(v):
                continue
            if v >= target - 1e-12:
                return k, False
            if not np.isnan(vals[best_fallback]) and v > vals[best_fallback]:
                best_fallback = k
            elif np.isnan(vals[best_fallback]):
                best_fallback = k
    return best_fallback, True


def _check_level_up_stat(measure_or_stat, scored, tables):
    if isinstance(measure_or_stat, FairnessMeasure):
        names = tracked_statistics(measure_or_stat)
        if len(names) != 1:
            raise DataError(
                f"{measure_or_stat.value} tracks more than one statistic; "
                "levelling up needs a single target statistic"
            )
        stat = names[0]
        direction = M.STATISTIC_DIRECTIONS[stat]
        if direction not in ("higher", "bidirectional"):
            raise DataError(
                f"no defensible level-up direction for {stat!r}"
            )
    else:
        stat = measure_or_stat
        if stat not in MIN_RATE_STATISTICS:
            raise DataError(
                f"level-up statistic must be one of {MIN_RATE_STATISTICS}"
            )
    for g, t in enumerate(tables):
        if np.all(np.isnan(t.stat(stat))):
            raise DataError(
                f"{stat} is undefined for every threshold of group "
                f"{scored.group_names[g]!r}"
            )
    return stat


def partial_level_up(
    scored: ScoredDataset,
    measure: FairnessMeasure,
    epsilon: float = 0.01,
) -> EnforcementResult:
    """Raise worse-off groups to the level equality enforcement would set,
    without touching the best-off group's threshold.

    The best-off group keeps its Unconstrained threshold exactly.  Every
    other group's threshold moves just far enough that its tracked
    statistic reaches what enforce(Equality(measure, epsilon)) would have
    assigned it, or as close as the candidate grid permits.  Targets are
    clamped from below at each group's own Unconstrained value, so no
    group is ever moved backwards.
    """
    tables = _build_tables(scored)
    stat = _check_level_up_stat(measure, scored, tables)
    uncon = _unconstrained_indices(tables)
    uncon_vals = [float(tables[g].stat(stat)[uncon[g]]) for g in range(len(tables))]
    if any(np.isnan(v) for v in uncon_vals):
        raise DataError(f"{stat} undefined under the unconstrained policy")
    top = max(uncon_vals)
    if all(v == top for v in uncon_vals):
        picks = uncon
        note = "all groups already level; unconstrained policy returned"
        residual = False
    else:
        eq = enforce(scored, Equality(measure, epsilon))
        eq_vals = eq.metrics.values(stat)
        picks = list(uncon)
        residual = False
        for g in range(len(tables)):
            if uncon_vals[g] == top:
                continue
            target = max(float(eq_vals[g]), uncon_vals[g])
            picks[g], missed = _level_single_group(tables[g], uncon[g], stat, target)
            residual = residual or missed
        picks = tuple(picks)
        note = "target level unreachable on the grid for some group" if residual else ""
    return _finish(
        scored, tables, picks, "partial_level_up",
        {"measure": measure.value, "epsilon": epsilon, "statistic": stat},
        "grid-walk", note=note,
    )


def full_level_up(scored: ScoredDataset, statistic: str) -> EnforcementResult:
    """Raise every worse-off group's statistic to the best group's
    Unconstrained level, leaving the best group untouched.

    When the grid cannot reach the target exactly the closest achievable
    value at or above the group's own Unconstrained level is used and the
    residual gap is recorded in the provenance note.
    """
    tables = _build_tables(scored)
    stat = _check_level_up_stat(statistic, scored, tables)
    uncon = _unconstrained_indices(tables)
    uncon_vals = [float(tables[g].stat(stat)[uncon[g]]) for g in range(len(tables))]
    if any(np.isnan(v) for v in uncon_vals):
        raise DataError(f"{stat} undefined under the unconstrained policy")
    target = max(uncon_vals)
    picks = list(uncon)
    gaps = []
    for g in range(len(tables)):
        if uncon_vals[g] == target:
            continue
        picks[g], missed = _level_single_group(tables[g], uncon[g], stat, target)
        if missed:
            achieved = float(tables[g].stat(stat)[picks[g]])
            gaps.append(f"{scored.group_names[g]}: residual gap {target - achieved:.6g}")
    return _finish(
        scored, tables, tuple(picks), "full_level_up",
        {"statistic": stat, "target": target},
        "grid-walk", note="; ".join(gaps),
    )


# ---------------------------------------------------------------------------
# serialization

def policy_to_json_dict(policy: ThresholdPolicy) -> dict:
    return {
        "thresholds": {
            name: policy.thresholds[gid]
            for gid, name in enumerate(policy.group_names)
        },
        "provenance": {
            "constraint": policy.provenance.constraint,
            "parameters": dict(policy.provenance.parameters),
            "search": policy.provenance.search,
            "approximate": policy.provenance.approximate,
            "note": policy.provenance.note,
        },
    }


def policy_from_json_dict(payload: dict) -> ThresholdPolicy:
    try:
        thresholds = payload["thresholds"]
        prov = payload["provenance"]
        return ThresholdPolicy(
            thresholds=tuple(float(v) for v in thresholds.values()),
            group_names=tuple(thresholds.keys()),
            provenance=Provenance(
                constraint=prov["constraint"],
                parameters=dict(prov["parameters"]),
                search=prov["search"],
                approximate=bool(prov["approximate"]),
                note=prov.get("note", ""),
            ),
        )
    except (KeyError, AttributeError, TypeError) as exc:
        raise DataError(f"malformed policy payload: {exc!r}") from exc
