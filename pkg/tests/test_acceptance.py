"""Acceptance suite.

One criterion per test, each printing a single pass/fail line (visible
under ``pytest -s`` and in captured output on failure).  Tolerances are
pinned in the assertions; wall-clock budgets are asserted per criterion.
"""

import time

import numpy as np
import pytest

import oracle
from levelup import (
    REJECT_ALL,
    Equality,
    FairnessMeasure,
    FrontierPoint,
    GroupSpec,
    InfeasibleConstraintError,
    MaximumRate,
    MinimumRate,
    Provenance,
    SynthSpec,
    ThresholdPolicy,
    Unconstrained,
    build_report,
    candidate_thresholds,
    confusion,
    enforce,
    equality_frontier,
    full_level_up,
    group_metrics,
    mrc_frontier,
    pareto_prune,
    partial_level_up,
    scored_from_arrays,
    synth_generate,
)
from levelup.scoring import calibration_table, loss_and_gradient
from conftest import random_small_scored

DP = FairnessMeasure.DEMOGRAPHIC_PARITY


def report(num, ok, detail, elapsed, limit):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"criterion {num}: {status} ({detail}; {elapsed:.2f}s / {limit:.0f}s)")
    assert ok, f"criterion {num}: {detail}"
    assert elapsed < limit, f"criterion {num} over budget: {elapsed:.2f}s"


def group_stat_values(scored, thresholds, stat):
    policy = ThresholdPolicy(
        thresholds=tuple(thresholds), group_names=scored.group_names,
        provenance=Provenance(constraint="fixed", parameters={}, search="none"))
    return group_metrics(confusion(scored, policy)).values(stat)


def test_criterion_01_label_skew(adult_dataset):
    started = time.perf_counter()
    fraction = float(adult_dataset.labels.mean())
    report(1, fraction < 0.25,
           f"bundled extract positive fraction {fraction:.4f} < 0.25",
           time.perf_counter() - started, 1.0)


def test_criterion_02_rare_event_constant_classifier():
    started = time.perf_counter()
    spec = SynthSpec(
        groups=(GroupSpec(size=5000, positive_base_rate=0.01,
                          score_mean_pos=0.7, score_mean_neg=0.3,
                          score_spread=0.2, name="a"),
                GroupSpec(size=5000, positive_base_rate=0.01,
                          score_mean_pos=0.7, score_mean_neg=0.3,
                          score_spread=0.2, name="b")),
        seed=13,
    )
    out = synth_generate(spec)
    scored = scored_from_arrays(out.true_scores, out.dataset.labels,
                                out.dataset.groups, out.dataset.group_names)
    reject_all = ThresholdPolicy(
        thresholds=(REJECT_ALL, REJECT_ALL), group_names=("a", "b"),
        provenance=Provenance(constraint="fixed", parameters={}, search="none"))
    counts = confusion(scored, reject_all)
    accuracy = sum(counts.tn) / scored.n_rows
    report(2, accuracy >= 0.985,
           f"reject-all accuracy {accuracy:.4f} >= 0.985 at 1% prevalence",
           time.perf_counter() - started, 1.0)


def test_criterion_03_levelling_down_reproduction(adult_scored_train):
    started = time.perf_counter()
    scored = adult_scored_train
    base = enforce(scored, Unconstrained())
    eq = enforce(scored, Equality(DP, epsilon=0.01))
    base_sel = base.metrics.values("selection_rate")
    eq_sel = eq.metrics.values("selection_rate")
    top = int(np.argmax(base_sel))
    top_name = scored.group_names[top]
    drop = base_sel[top] - eq_sel[top]
    audit = build_report(base.metrics, eq.metrics,
                         {"kind": "equality", "measure": DP.value,
                          "epsilon": 0.01},
                         split="train")
    flagged = (top_name, "selection_rate") in audit.levelled_down_groups
    report(3, drop >= 0.01 and flagged,
           f"{top_name} selection rate fell {drop:.4f} >= 0.01 under parity "
           f"and the audit flagged it",
           time.perf_counter() - started, 30.0)


def run_mrc_sweep(scored, stat, resolution=50):
    """tau sweep from the unconstrained minimum to 1, in tau order."""
    base = enforce(scored, Unconstrained())
    base_vals = base.metrics.values(stat)
    lo = min(base_vals)
    rows = []
    for tau in np.linspace(lo, 1.0, resolution):
        result = enforce(scored, MinimumRate(stat, float(tau)))
        rows.append(result.metrics.values(stat))
    return base_vals, rows


def check_sweep_properties(base_vals, rows):
    # (a) no group ever falls below its unconstrained value (stronger
    # than the one-grid-step allowance)
    never_below = all(
        got >= floor - 1e-12
        for vals in rows for got, floor in zip(vals, base_vals))
    # (b) disparity stays <= 0.05 once group rates first come within 0.02
    close_from = None
    for i, vals in enumerate(rows):
        if max(vals) - min(vals) <= 0.02:
            close_from = i
            break
    stays_near_zero = close_from is not None and all(
        max(vals) - min(vals) <= 0.05 for vals in rows[close_from:])
    return never_below, stays_near_zero, close_from


def test_criterion_04_mrc_levels_up_selection_rate(adult_scored_train):
    started = time.perf_counter()
    base_vals, rows = run_mrc_sweep(adult_scored_train, "selection_rate")
    never_below, stays, close_from = check_sweep_properties(base_vals, rows)
    report(4, never_below and stays,
           f"selection rates never drop below unconstrained; disparity "
           f"<= 0.05 from sweep point {close_from} on",
           time.perf_counter() - started, 120.0)


def test_criterion_05_mrc_levels_up_tnr(adult_scored_train):
    started = time.perf_counter()
    base_vals, rows = run_mrc_sweep(adult_scored_train, "tnr")
    never_below, stays, close_from = check_sweep_properties(base_vals, rows)
    report(5, never_below and stays,
           f"true negative rates never drop below unconstrained; disparity "
           f"<= 0.05 from sweep point {close_from} on",
           time.perf_counter() - started, 120.0)


def bracket_gap(values, target):
    """Largest step between achievable values around the target."""
    vals = sorted(set(values))
    below = [v for v in vals if v <= target]
    above = [v for v in vals if v >= target]
    if below and above:
        return above[0] - below[-1]
    return float("inf")


def test_criterion_06_level_up_comparison(adult_scored_train):
    started = time.perf_counter()
    scored = adult_scored_train
    base = enforce(scored, Unconstrained())
    eq = enforce(scored, Equality(DP, epsilon=0.01))
    full = full_level_up(scored, "selection_rate")
    part = partial_level_up(scored, DP, epsilon=0.01)

    base_sel = base.metrics.values("selection_rate")
    top = int(np.argmax(base_sel))
    low = int(np.argmin(base_sel))
    low_rows = scored.groups == low
    achievable = [float((scored.scores[low_rows] >= t).mean())
                  for t in candidate_thresholds(scored, low)]

    # (a) full raises the lower group to within one grid step of the
    # higher group's unconstrained rate; higher threshold bit-identical
    target = base_sel[top]
    full_sel = full.metrics.values("selection_rate")[low]
    a_ok = (abs(full_sel - target) <= bracket_gap(achievable, target) + 1e-12
            and full.policy.thresholds[top] == base.policy.thresholds[top])

    # (b) partial matches the equality-enforced rate for the lower group,
    # higher group's threshold and accuracy untouched
    eq_low = eq.metrics.values("selection_rate")[low]
    part_sel = part.metrics.values("selection_rate")[low]
    b_ok = (abs(part_sel - eq_low) <= bracket_gap(achievable, eq_low) + 1e-12
            and part.policy.thresholds[top] == base.policy.thresholds[top]
            and part.metrics.values("accuracy")[top]
            == base.metrics.values("accuracy")[top])

    # (c) only the equality policy costs the higher group accuracy
    base_acc = base.metrics.values("accuracy")[top]
    c_ok = (eq.metrics.values("accuracy")[top] < base_acc
            and full.metrics.values("accuracy")[top] == base_acc
            and part.metrics.values("accuracy")[top] == base_acc)

    report(6, a_ok and b_ok and c_ok,
           f"full reaches {full_sel:.4f} vs target {target:.4f}; partial "
           f"reaches {part_sel:.4f} vs equality {eq_low:.4f}; only equality "
           f"cuts the higher group's accuracy",
           time.perf_counter() - started, 60.0)


def test_criterion_07_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(77)
    checked = 0
    for _ in range(100):
        scored = random_small_scored(rng)
        constraints = [
            Unconstrained(),
            Equality(DP, epsilon=float(rng.uniform(0.0, 0.2))),
            MinimumRate("selection_rate", float(rng.uniform(0.0, 0.9))),
            MinimumRate("tpr", float(rng.uniform(0.0, 0.9))),
            MaximumRate(float(rng.uniform(0.1, 0.9))),
        ]
        for constraint in constraints:
            want = oracle.brute_force_enforce(scored, constraint)
            if want is None:
                with pytest.raises(InfeasibleConstraintError):
                    enforce(scored, constraint)
            else:
                got = enforce(scored, constraint)
                assert got.policy.thresholds == want[0], constraint
                assert got.accuracy == want[2], constraint
            checked += 1
    report(7, True, f"{checked} enforcement problems matched the "
           "brute-force optimum exactly",
           time.perf_counter() - started, 60.0)


def numpy_pairwise_pareto(acc, obj, direction):
    """O(n^2) dominance matrix, vectorized but pairwise by definition."""
    sign = 1.0 if direction == "min" else -1.0
    o = sign * obj
    no_worse = (acc[:, None] >= acc[None, :]) & (o[:, None] <= o[None, :])
    better = (acc[:, None] > acc[None, :]) | (o[:, None] < o[None, :])
    dominated = (no_worse & better).any(axis=0)
    return np.flatnonzero(~dominated)


def test_criterion_08_pareto_correctness():
    started = time.perf_counter()
    rng = np.random.default_rng(88)
    for trial in range(1000):
        n = int(rng.integers(1, 60))
        acc = np.round(rng.random(n) * 20) / 20
        obj = np.round(rng.random(n) * 10) / 10
        direction = "min" if trial % 2 == 0 else "max"
        pts = [FrontierPoint(policy=None, accuracy=float(a),
                             objective_value=float(o), constraint_value=None,
                             per_group=None)
               for a, o in zip(acc, obj)]
        got = sorted((p.objective_value, p.accuracy)
                     for p in pareto_prune(pts, direction))
        keep = numpy_pairwise_pareto(acc, obj, direction)
        want = sorted((float(obj[k]), float(acc[k])) for k in keep)
        assert got == want, trial
    report(8, True, "1000 random clouds matched the pairwise dominance scan",
           time.perf_counter() - started, 10.0)


def test_criterion_09_mrc_matches_any_equality_level(gap_scored):
    started = time.perf_counter()
    eq = equality_frontier(gap_scored, DP, resolution=20)
    rate = mrc_frontier(gap_scored, "selection_rate", resolution=50)
    mrc_disparities = []
    for p in rate.points:
        vals = p.per_group.values("selection_rate")
        mrc_disparities.append(max(vals) - min(vals))
    best = min(mrc_disparities)
    ok = all(best <= p.objective_value + 1e-12 for p in eq.points)
    report(9, ok and len(eq.points) >= 1,
           f"for every equality point some minimum-rate point has disparity "
           f"<= it (best {best:.4f} across {len(rate.points)} points)",
           time.perf_counter() - started, 120.0)


def test_criterion_10_scorer_sanity():
    started = time.perf_counter()
    rng = np.random.default_rng(17)
    x = rng.normal(size=(60, 4))
    y = (rng.random(60) < 0.5).astype(np.float64)
    l2 = 0.01
    h = 1e-6
    grad_ok = True
    for _ in range(10):
        w = rng.normal(size=4)
        b = float(rng.normal())
        _, gw, gb = loss_and_gradient(x, y, w, b, l2)
        for j in range(4):
            bump = np.zeros(4)
            bump[j] = h
            lo, _, _ = loss_and_gradient(x, y, w - bump, b, l2)
            hi, _, _ = loss_and_gradient(x, y, w + bump, b, l2)
            fd = (hi - lo) / (2 * h)
            grad_ok &= abs(fd - gw[j]) <= 1e-4 * max(1.0, abs(fd))
        lo, _, _ = loss_and_gradient(x, y, w, b - h, l2)
        hi, _, _ = loss_and_gradient(x, y, w, b + h, l2)
        fd = (hi - lo) / (2 * h)
        grad_ok &= abs(fd - gb) <= 1e-4 * max(1.0, abs(fd))

    spec = SynthSpec(
        groups=(GroupSpec(size=20000, positive_base_rate=0.35,
                          score_mean_pos=0.8, score_mean_neg=0.3,
                          score_spread=0.25, name="a"),
                GroupSpec(size=20000, positive_base_rate=0.15,
                          score_mean_pos=0.8, score_mean_neg=0.3,
                          score_spread=0.25, name="b")),
        seed=31,
    )
    out = synth_generate(spec)
    scored = scored_from_arrays(out.true_scores, out.dataset.labels,
                                out.dataset.groups, out.dataset.group_names)
    worst = 0.0
    for b in calibration_table(scored, bins=10):
        if b.count == 0:
            continue
        worst = max(worst, abs(b.mean_score - b.positive_fraction))
    report(10, grad_ok and worst < 0.05,
           f"gradient matches finite differences at 10 points; worst "
           f"calibration gap {worst:.4f} < 0.05",
           time.perf_counter() - started, 10.0)
