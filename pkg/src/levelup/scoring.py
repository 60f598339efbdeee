"""From-scratch logistic scorer and score containers.

The model is deliberately plain: standardized features, L2-regularized
logistic loss, full-batch gradient descent with a fixed summation order,
so a fit is bit-for-bit reproducible on the same platform.  Scores are
clamped to [1e-12, 1 - 1e-12] before they leave this module.

A scored dataset can also be supplied directly as a CSV of
(score, label, group), bypassing the scorer entirely.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataError, LabeledDataset, _frozen

__all__ = [
    "SCORE_CLAMP",
    "ScoredDataset",
    "ScorerConfig",
    "Scorer",
    "FitError",
    "fit",
    "predict",
    "loss_and_gradient",
    "CalibrationBin",
    "calibration_table",
    "write_scores_csv",
    "read_scores_csv",
    "scored_from_arrays",
]

SCORE_CLAMP = 1e-12


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScoredDataset:
    """Per-row (score, label, group) triples with shared group naming."""

    scores: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    group_names: tuple[str, ...]

    def __post_init__(self):
        scores = _frozen(np.asarray(self.scores, dtype=np.float64))
        labels = _frozen(np.asarray(self.labels, dtype=np.int64))
        groups = _frozen(np.asarray(self.groups, dtype=np.int64))
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "groups", groups)
        n = len(scores)
        if len(labels) != n or len(groups) != n or n == 0:
            raise DataError("scores, labels, groups must share a nonzero row count")
        if not np.all((scores > 0.0) & (scores < 1.0)):
            raise DataError("scores must lie strictly inside (0, 1) after clamping")
        if not np.all((labels == 0) | (labels == 1)):
            raise DataError("labels must be 0 or 1")
        if len(self.group_names) < 2:
            raise DataError("fewer than 2 groups named")
        if groups.min() < 0 or groups.max() >= len(self.group_names):
            raise DataError("group id out of range")

    @property
    def n_rows(self) -> int:
        return len(self.scores)

    @property
    def n_groups(self) -> int:
        return len(self.group_names)

    def group_rows(self, gid: int) -> np.ndarray:
        return np.flatnonzero(self.groups == gid)


def scored_from_arrays(scores, labels, groups, group_names) -> ScoredDataset:
    """Build a ScoredDataset, clamping scores away from 0 and 1.

    Scores must already lie in [0, 1]; only the endpoints are clamped.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all((scores >= 0.0) & (scores <= 1.0)):
        raise DataError("scores must lie in [0, 1]")
    scores = np.clip(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    return ScoredDataset(
        scores=scores,
        labels=np.asarray(labels),
        groups=np.asarray(groups),
        group_names=tuple(group_names),
    )


@dataclass(frozen=True)
class ScorerConfig:
    """Training knobs.

    learning_rate is relative to an internal curvature bound, so 1.0 is a
    stable default for any standardized dataset.  The seed is recorded for
    provenance; the fit itself is deterministic from a zero start.
    """

    learning_rate: float = 1.0
    iterations: int = 5000
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.iterations < 1 or self.l2 < 0:
            raise DataError("invalid scorer config")


@dataclass(frozen=True)
class Scorer:
    """Fitted standardize-then-logistic model."""

    weights: np.ndarray          # per standardized feature
    bias: float
    feature_means: np.ndarray
    feature_scales: np.ndarray
    config: ScorerConfig
    iterations_run: int
    final_loss: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=np.float64)))
        object.__setattr__(self, "feature_means", _frozen(np.asarray(self.feature_means)))
        object.__setattr__(self, "feature_scales", _frozen(np.asarray(self.feature_scales)))


def _standardize_params(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = features.mean(axis=0)
    scales = features.std(axis=0)
    scales = np.where(scales == 0.0, 1.0, scales)  # constant feature: scale 1
    return means, scales


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_gradient(
    x: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> tuple[float, np.ndarray, float]:
    """Mean log loss with L2 penalty on weights (not bias), and its gradient.

    Returns (loss, grad_weights, grad_bias).
    """
    z = x @ weights + bias
    p = _sigmoid(z)
    p = np.clip(p, SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    n = len(y)
    loss = -np.sum(y * np.log(p) + (1 - y) * np.log(1 - p)) / n
    loss += 0.5 * l2 * float(weights @ weights)
    resid = p - y
    grad_w = x.T @ resid / n + l2 * weights
    grad_b = float(np.sum(resid)) / n
    return float(loss), grad_w, grad_b


def fit(train: LabeledDataset, config: ScorerConfig = ScorerConfig()) -> Scorer:
    """Fit the scorer by full-batch gradient descent.

    Stops when the loss decrease falls below 1e-8 in one iteration or the
    iteration cap is reached.  Raises FitError on single-class labels or a
    non-finite loss.
    """
    y = train.labels.astype(np.float64)
    if y.min() == y.max():
        raise FitError("training labels are all one class; nothing to fit")
    means, scales = _standardize_params(train.features)
    x = (train.features - means) / scales
    d = x.shape[1]
    w = np.zeros(d)
    b = 0.0
    # Curvature bound for the logistic loss: 0.25 * mean squared row norm.
    bound = 0.25 * float(np.mean(np.sum(x * x, axis=1))) + config.l2
    step = config.learning_rate / max(bound, 1e-12)
    prev_loss = np.inf
    loss = np.inf
    it = 0
    for it in range(1, config.iterations + 1):
        loss, gw, gb = loss_and_gradient(x, y, w, b, config.l2)
        if not np.isfinite(loss):
            raise FitError(f"loss became non-finite at iteration {it}")
        if prev_loss - loss < 1e-8 and it > 1:
            break
        prev_loss = loss
        w = w - step * gw
        b = b - step * gb
    return Scorer(
        weights=w,
        bias=b,
        feature_means=means,
        feature_scales=scales,
        config=config,
        iterations_run=it,
        final_loss=float(loss),
    )


def predict(scorer: Scorer, dataset: LabeledDataset) -> ScoredDataset:
    """Score a dataset with a fitted scorer."""
    if dataset.features.shape[1] != len(scorer.weights):
        raise DataError(
            f"scorer expects {len(scorer.weights)} features, "
            f"dataset has {dataset.features.shape[1]}"
        )
    x = (dataset.features - scorer.feature_means) / scorer.feature_scales
    p = _sigmoid(x @ scorer.weights + scorer.bias)
    return scored_from_arrays(p, dataset.labels, dataset.groups, dataset.group_names)


@dataclass(frozen=True)
class CalibrationBin:
    """One equal-width score bin.  positive_fraction is None when empty."""

    lo: float
    hi: float
    count: int
    mean_score: float | None
    positive_fraction: float | None


def _table_for(scores: np.ndarray, labels: np.ndarray, bins: int) -> list[CalibrationBin]:
    idx = np.minimum((scores * bins).astype(np.int64), bins - 1)
    out = []
    for k in range(bins):
        mask = idx == k
        cnt = int(np.sum(mask))
        if cnt == 0:
            out.append(CalibrationBin(k / bins, (k + 1) / bins, 0, None, None))
        else:
            out.append(
                CalibrationBin(
                    lo=k / bins,
                    hi=(k + 1) / bins,
                    count=cnt,
                    mean_score=float(np.mean(scores[mask])),
                    positive_fraction=float(np.mean(labels[mask])),
                )
            )
    return out


def calibration_table(
    scored: ScoredDataset, bins: int = 10, per_group: bool = False
):
    """Empirical calibration over equal [0, 1) score bins.

    Pooled by default; with per_group=True returns {group_name: table}.
    Empty bins keep count 0 and a None positive fraction rather than a
    made-up number.
    """
    if bins < 1:
        raise DataError("bins must be >= 1")
    if not per_group:
        return _table_for(scored.scores, scored.labels, bins)
    tables = {}
    for gid, name in enumerate(scored.group_names):
        rows = scored.group_rows(gid)
        tables[name] = _table_for(scored.scores[rows], scored.labels[rows], bins)
    return tables


def write_scores_csv(scored: ScoredDataset, path: str | Path) -> None:
    """Write rows as score,label,group with a header."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["score", "label", "group"])
        for i in range(scored.n_rows):
            writer.writerow(
                [
                    repr(float(scored.scores[i])),
                    str(int(scored.labels[i])),
                    scored.group_names[scored.groups[i]],
                ]
            )


def read_scores_csv(path: str | Path) -> ScoredDataset:
    """Read a score,label,group CSV written by this package or elsewhere."""
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} has no header row") from None
        expected = ["score", "label", "group"]
        if [h.strip() for h in header] != expected:
            raise DataError(f"score CSV header must be {','.join(expected)}")
        scores, labels, groups = [], [], []
        names: list[str] = []
        ids: dict[str, int] = {}
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError("expected 3 cells", row=rownum)
            try:
                s = float(row[0])
            except ValueError:
                raise DataError("unparseable score", row=rownum, column="score") from None
            if not 0.0 <= s <= 1.0:
                raise DataError("score outside [0, 1]", row=rownum, column="score")
            if row[1].strip() not in ("0", "1"):
                raise DataError("label must be 0 or 1", row=rownum, column="label")
            g = row[2].strip()
            if g == "":
                raise DataError("missing value", row=rownum, column="group")
            if g not in ids:
                ids[g] = len(names)
                names.append(g)
            scores.append(s)
            labels.append(int(row[1]))
            groups.append(ids[g])
    if not scores:
        raise DataError(f"{path} has a header but no data rows")
    return scored_from_arrays(scores, labels, groups, names)
