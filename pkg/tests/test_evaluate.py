"""Split protocol, error experiments, CMC/ROC/EER, per-feature maps."""

import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarface import (
    FeatureVector,
    SplitSpec,
    cmc,
    equal_error_rate,
    learning_curve,
    per_feature_error_rates,
    pfld_predictor,
    random_split,
    run_error_experiment,
    subject_count_curve,
    verification_pairs,
    verification_roc,
)
from polarface.errors import ConfigError, DomainError
from polarface.evaluate import (
    build_cmc_csv,
    build_roc_csv,
    build_summary_csv,
    sem_value,
)


def toy_entries(n_subjects=4, per_subject=8):
    return [
        (f"s{s}/{k}", f"s{s}")
        for s in range(n_subjects)
        for k in range(per_subject)
    ]


def separable_features(entries, dim=6, spread=8.0, noise=0.1, seed=0):
    rng = np.random.default_rng(seed)
    subjects = sorted({s for _, s in entries})
    centers = {s: spread * i + rng.normal(size=dim) for i, s in enumerate(subjects)}
    return {
        i: FeatureVector(centers[s] + rng.normal(scale=noise, size=dim), "toy")
        for i, s in entries
    }


def test_split_spec_validation():
    with pytest.raises(ConfigError):
        SplitSpec(k_train=0)
    with pytest.raises(ConfigError):
        SplitSpec(repetitions=0)
    with pytest.raises(ConfigError):
        SplitSpec(seed=-1)
    with pytest.raises(ConfigError):
        SplitSpec(n_subjects=1)


def test_split_structure():
    entries = toy_entries()
    spec = SplitSpec(k_train=3, repetitions=2, seed=5)
    train, test = random_split(entries, spec, 0)
    assert len(train) == 4 * 3 and len(test) == 4 * 5
    assert not set(train) & set(test)
    assert set(train) | set(test) == {i for i, _ in entries}
    per = {}
    for i in train:
        per[i.split("/")[0]] = per.get(i.split("/")[0], 0) + 1
    assert all(v == 3 for v in per.values())
    assert train == sorted(train) and test == sorted(test)


def test_split_determinism_and_rep_variation():
    entries = toy_entries()
    spec = SplitSpec(k_train=4, repetitions=3, seed=9)
    a0 = random_split(entries, spec, 0)
    assert a0 == random_split(entries, spec, 0)
    assert a0 != random_split(entries, spec, 1)
    assert a0 != random_split(entries, SplitSpec(k_train=4, repetitions=3, seed=10), 0)


def test_split_subject_cap():
    entries = toy_entries(n_subjects=6)
    spec = SplitSpec(k_train=2, n_subjects=3, repetitions=1)
    train, test = random_split(entries, spec, 0)
    subjects = {i.split("/")[0] for i in train} | {i.split("/")[0] for i in test}
    assert subjects == {"s0", "s1", "s2"}  # sorted order, first three


def test_split_needs_spare_images():
    entries = toy_entries(per_subject=3)
    with pytest.raises(ConfigError):
        random_split(entries, SplitSpec(k_train=3), 0)


def test_sem_against_stdlib():
    values = [3.0, 4.5, 1.0, 2.25, 7.75]
    want = statistics.stdev(values) / len(values) ** 0.5
    assert sem_value(np.array(values)) == pytest.approx(want, abs=1e-12)


@given(st.lists(st.floats(-100.0, 100.0), min_size=2, max_size=12))
@settings(max_examples=40)
def test_sem_two_pass_cross_check(values):
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    want = (var / len(values)) ** 0.5
    assert sem_value(np.array(values)) == pytest.approx(want, abs=1e-12 * (1 + want))


def test_error_experiment_on_separable_data():
    entries = toy_entries()
    features = separable_features(entries)
    spec = SplitSpec(k_train=4, repetitions=5, seed=1)
    report = run_error_experiment(entries, spec, pfld_predictor(features))
    assert report.mean_error == 0.0
    assert report.sem == 0.0
    assert report.rep_errors.shape == (5,)


def test_error_experiment_is_deterministic():
    entries = toy_entries()
    features = separable_features(entries, spread=0.5, noise=0.4)  # overlapping
    spec = SplitSpec(k_train=3, repetitions=4, seed=2)
    r1 = run_error_experiment(entries, spec, pfld_predictor(features))
    r2 = run_error_experiment(entries, spec, pfld_predictor(features))
    assert np.array_equal(r1.rep_errors, r2.rep_errors)
    assert 0.0 <= r1.mean_error <= 100.0


def test_cmc_hand_example():
    labels = ("a", "b", "c")
    scores = np.array(
        [
            [0.9, 0.05, 0.05],  # a at rank 1
            [0.4, 0.5, 0.1],    # a at rank 2
            [0.2, 0.3, 0.5],    # a at rank 3
        ]
    )
    curve = cmc(scores, ["a", "a", "a"], labels)
    assert np.allclose(curve.proportions, [1 / 3, 2 / 3, 1.0])
    assert np.array_equal(curve.ranks, [1, 2, 3])


def test_cmc_all_tied_scores_take_worst_rank():
    labels = ("a", "b", "c", "d")
    scores = np.full((4, 4), 0.25)
    curve = cmc(scores, ["a", "b", "c", "d"], labels)
    assert np.allclose(curve.proportions, [0.0, 0.0, 0.0, 1.0])


def test_cmc_monotone_and_bounded():
    rng = np.random.default_rng(0)
    labels = tuple(f"s{i}" for i in range(6))
    scores = rng.uniform(size=(40, 6))
    truths = [labels[i % 6] for i in range(40)]
    curve = cmc(scores, truths, labels)
    assert np.all(np.diff(curve.proportions) >= 0.0)
    assert curve.proportions[-1] == 1.0
    assert np.all((curve.proportions >= 0.0) & (curve.proportions <= 1.0))


def test_cmc_alignment_errors():
    with pytest.raises(ConfigError):
        cmc(np.zeros((2, 3)), ["a"], ("a", "b", "c"))
    with pytest.raises(DomainError):
        cmc(np.zeros((1, 2)), ["zz"], ("a", "b"))


def test_verification_pairs_counts_and_orientation():
    labels = ("a", "b", "c")
    scores = np.array([[0.7, 0.2, 0.1], [0.3, 0.6, 0.1]])
    genuine, impostor = verification_pairs(scores, ["a", "b"], labels, "distance")
    assert genuine.shape == (2,) and impostor.shape == (4,)
    assert genuine[0] == pytest.approx(1.0 - 0.7)
    sim_g, _ = verification_pairs(scores, ["a", "b"], labels, "similarity")
    assert sim_g[0] == pytest.approx(0.7)
    with pytest.raises(ConfigError):
        verification_pairs(scores, ["a", "b"], labels, "sideways")


def test_roc_monotonicity_and_endpoints():
    rng = np.random.default_rng(4)
    genuine = rng.normal(0.3, 0.1, size=200)
    impostor = rng.normal(0.7, 0.1, size=400)
    roc = verification_roc(genuine, impostor, "distance")
    assert roc.thresholds.shape == (100,)
    assert np.all(np.diff(roc.p_verify) >= 0.0)
    assert np.all(np.diff(roc.p_false_alarm) >= 0.0)
    assert roc.p_verify[-1] == 1.0 and roc.p_false_alarm[-1] == 1.0


def test_roc_separated_scores_reach_zero_eer():
    roc = verification_roc(np.zeros(50), np.ones(50), "distance")
    eer = equal_error_rate(roc)
    assert eer.eer == 0.0
    assert eer.threshold_low <= eer.threshold_high


def test_eer_identical_distributions_is_half():
    rng = np.random.default_rng(8)
    pool = rng.uniform(size=2000)
    roc = verification_roc(pool[:1000], pool[1000:], "distance")
    eer = equal_error_rate(roc)
    step = roc.thresholds[1] - roc.thresholds[0]
    # 0.5 within one threshold step's worth of probability mass
    assert abs(eer.eer - 0.5) < 0.05
    assert eer.threshold_high - eer.threshold_low <= step + 1e-12


def test_eer_orientation_agreement():
    rng = np.random.default_rng(12)
    genuine = rng.normal(0.35, 0.12, size=300).clip(0, 1)
    impostor = rng.normal(0.6, 0.12, size=300).clip(0, 1)
    eer_d = equal_error_rate(verification_roc(genuine, impostor, "distance"))
    eer_s = equal_error_rate(verification_roc(1.0 - genuine, 1.0 - impostor, "similarity"))
    assert eer_d.eer == pytest.approx(eer_s.eer, abs=0.02)


def test_roc_empty_subset_rejected():
    with pytest.raises(DomainError):
        verification_roc(np.array([]), np.ones(3), "distance")


def test_per_feature_error_rates_informative_vs_constant():
    entries = toy_entries(n_subjects=2, per_subject=6)
    n = len(entries)
    subject_idx = np.array([0 if s == "s0" else 1 for _, s in entries], dtype=float)
    values = np.zeros((n, 2))
    values[:, 0] = subject_idx  # perfectly informative
    values[:, 1] = 7.0          # constant: ties, chance level
    spec = SplitSpec(k_train=3, repetitions=4, seed=3)
    errors = per_feature_error_rates(entries, values, spec)
    assert errors[0] == 0.0
    assert errors[1] == pytest.approx(50.0)  # 1 - 1/L with L=2 balanced


def test_per_feature_chunking_matches_direct():
    # >128 features exercises the chunked path; compare with per-column calls
    rng = np.random.default_rng(6)
    entries = toy_entries(n_subjects=3, per_subject=4)
    values = rng.normal(size=(len(entries), 130))
    spec = SplitSpec(k_train=2, repetitions=2, seed=0)
    full = per_feature_error_rates(entries, values, spec)
    for col in (0, 64, 127, 128, 129):
        single = per_feature_error_rates(entries, values[:, [col]], spec)
        assert full[col] == pytest.approx(single[0], abs=1e-12)


def test_learning_and_subject_curves():
    entries = toy_entries(n_subjects=4, per_subject=8)
    features = separable_features(entries)
    spec = SplitSpec(k_train=5, repetitions=2, seed=0)
    lc = learning_curve(entries, spec, pfld_predictor(features), (1, 3, 5))
    assert [k for k, _ in lc] == [1, 3, 5]
    assert all(r.mean_error == 0.0 for _, r in lc)
    sc = subject_count_curve(entries, spec, pfld_predictor(features), (2, 4))
    assert [c for c, _ in sc] == [2, 4]


def test_csv_builders():
    from polarface import CMCCurve, ROCCurve

    cmc_text = build_cmc_csv(CMCCurve(proportions=np.array([0.5, 1.0])))
    assert cmc_text.splitlines()[0] == "rank,proportion"
    assert cmc_text.splitlines()[1] == "1,0.5"
    roc_text = build_roc_csv(
        ROCCurve(
            thresholds=np.array([0.0]),
            p_verify=np.array([1.0]),
            p_false_alarm=np.array([0.25]),
            orientation="distance",
        )
    )
    assert roc_text.splitlines()[1] == "0,1,0.25"
    summary = build_summary_csv([("exp", 1.5, 0.25, None), ("roc", 2.0, 0.0, 0.02)])
    lines = summary.splitlines()
    assert lines[0] == "experiment_id,mean,sem,eer"
    assert lines[1] == "exp,1.5,0.25,"
    assert lines[2] == "roc,2,0,0.02"
