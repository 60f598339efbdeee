import numpy as np
import pytest

from levelup import (
    GroupSpec,
    SynthSpec,
    adult_sample_path,
    adult_sample_schema,
    fit,
    load_csv,
    predict,
    scored_from_arrays,
    split,
    synth_generate,
)


# Two groups with a real base-rate gap; true_scores are the exact posterior,
# so policy behaviour is driven by the data and not by scorer fit quality.
GAP_SPEC = SynthSpec(
    groups=(
        GroupSpec(size=1500, positive_base_rate=0.35, score_mean_pos=0.8,
                  score_mean_neg=0.3, score_spread=0.25, name="a"),
        GroupSpec(size=1500, positive_base_rate=0.15, score_mean_pos=0.8,
                  score_mean_neg=0.3, score_spread=0.25, name="b"),
    ),
    seed=7,
)


@pytest.fixture(scope="session")
def gap_scored():
    out = synth_generate(GAP_SPEC)
    data = out.dataset
    return scored_from_arrays(out.true_scores, data.labels, data.groups,
                              data.group_names)


@pytest.fixture(scope="session")
def adult_dataset():
    return load_csv(adult_sample_path(), adult_sample_schema())


@pytest.fixture(scope="session")
def adult_split(adult_dataset):
    return split(adult_dataset, eval_fraction=0.3, seed=11)


@pytest.fixture(scope="session")
def adult_scorer(adult_split):
    train, _ = adult_split
    return fit(train)


@pytest.fixture(scope="session")
def adult_scored_train(adult_split, adult_scorer):
    train, _ = adult_split
    return predict(adult_scorer, train)


@pytest.fixture(scope="session")
def adult_scored_eval(adult_split, adult_scorer):
    _, eval_part = adult_split
    return predict(adult_scorer, eval_part)


def random_small_scored(rng, n_groups=2, max_distinct=12):
    """Small random scored dataset for oracle comparisons.

    Scores are drawn from a fixed grid so each group has at most
    ``max_distinct`` distinct values and threshold grids stay small.
    """
    grid = np.round(np.linspace(0.05, 0.95, max_distinct), 3)
    scores = []
    labels = []
    groups = []
    for g in range(n_groups):
        size = int(rng.integers(5, 30))
        p = float(rng.uniform(0.1, 0.9))
        scores.append(rng.choice(grid, size=size))
        labels.append((rng.random(size) < p).astype(np.int64))
        groups.append(np.full(size, g, dtype=np.int64))
    names = tuple(f"g{g}" for g in range(n_groups))
    return scored_from_arrays(np.concatenate(scores), np.concatenate(labels),
                              np.concatenate(groups), names)
