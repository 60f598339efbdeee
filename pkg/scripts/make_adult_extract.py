"""Regenerate src/levelup/fixtures/adult_sample.csv.

The sandbox this package is developed in has no route to the original
census data server, so the bundled extract is drawn from a seeded
generative model that reproduces the schema and the marginals the test
suite depends on: the column set, a roughly 2:1 male/female mix, an
overall positive-label fraction below 0.25, and a large male/female gap
in the positive rate that is mediated entirely through observable
features (marital status and hours), not through a direct sex term.

Run from the repository root:  python3 scripts/make_adult_extract.py
The output is committed; rerunning must be a no-op byte for byte.
"""

import csv
from pathlib import Path

import numpy as np

SEED = 20240817
N_ROWS = 2000

EDU_LEVELS = np.arange(1, 17)
EDU_PROBS = np.array(
    [.002, .005, .010, .019, .015, .028, .036, .013,
     .320, .220, .042, .033, .160, .055, .017, .012]
)
MARITAL_LEVELS = [
    "Married-civ-spouse", "Never-married", "Divorced", "Separated", "Widowed",
]
MARITAL_PROBS_MALE = np.array([.61, .26, .085, .025, .02])
MARITAL_PROBS_FEMALE = np.array([.155, .445, .245, .06, .095])
WORKCLASS_LEVELS = [
    "Private", "Self-emp-not-inc", "Local-gov", "?", "State-gov",
    "Self-emp-inc", "Federal-gov", "Without-pay",
]
WORKCLASS_PROBS = np.array([.695, .079, .064, .056, .040, .034, .029, .003])

INTERCEPT = -2.9
MARRIED_COEF = 2.2


def generate():
    rng = np.random.default_rng(SEED)
    n = N_ROWS
    male = rng.random(n) < 0.67
    age = np.clip(np.round(rng.normal(38.6, 13.2, n)), 17, 90).astype(int)
    edu = rng.choice(EDU_LEVELS, size=n, p=EDU_PROBS / EDU_PROBS.sum())
    marital = np.where(
        male,
        rng.choice(len(MARITAL_LEVELS), n,
                   p=MARITAL_PROBS_MALE / MARITAL_PROBS_MALE.sum()),
        rng.choice(len(MARITAL_LEVELS), n,
                   p=MARITAL_PROBS_FEMALE / MARITAL_PROBS_FEMALE.sum()),
    )
    married = marital == 0
    hours = np.clip(
        np.round(rng.normal(np.where(male, 42.4, 36.4), 11.5)), 1, 99
    ).astype(int)
    has_gain = rng.random(n) < 0.082
    gain = np.where(
        has_gain,
        np.clip(np.round(np.exp(rng.normal(7.6, 1.3, n))), 114, 99999),
        0,
    ).astype(int)
    workclass = rng.choice(
        len(WORKCLASS_LEVELS), n, p=WORKCLASS_PROBS / WORKCLASS_PROBS.sum()
    )
    logit = (
        INTERCEPT
        + 0.36 * (edu - 10)
        + 0.042 * (age - 38)
        - 0.0009 * (age - 38) ** 2
        + 0.038 * (hours - 40)
        + MARRIED_COEF * married
        + 0.35 * (workclass == 5)
        + 0.18 * (workclass == 6)
        + 0.30 * np.log1p(gain)
    )
    income = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))
    return male, age, workclass, edu, marital, gain, hours, income


def main():
    male, age, workclass, edu, marital, gain, hours, income = generate()
    overall = income.mean()
    rate_m = income[male].mean()
    rate_f = income[~male].mean()
    assert overall < 0.25, f"positive fraction {overall:.3f} must stay below 0.25"
    assert 0.26 < rate_m < 0.34, f"male positive rate {rate_m:.3f} out of band"
    assert 0.08 < rate_f < 0.15, f"female positive rate {rate_f:.3f} out of band"
    out = Path(__file__).parent.parent / "src" / "levelup" / "fixtures" / "adult_sample.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["age", "workclass", "education-num", "marital-status", "sex",
             "capital-gain", "hours-per-week", "income"]
        )
        for i in range(N_ROWS):
            writer.writerow(
                [
                    int(age[i]),
                    WORKCLASS_LEVELS[workclass[i]],
                    int(edu[i]),
                    MARITAL_LEVELS[marital[i]],
                    "Male" if male[i] else "Female",
                    int(gain[i]),
                    int(hours[i]),
                    ">50K" if income[i] else "<=50K",
                ]
            )
    print(f"wrote {out}")
    print(f"overall positive {overall:.3f}  male {rate_m:.3f}  female {rate_f:.3f}")


if __name__ == "__main__":
    main()
