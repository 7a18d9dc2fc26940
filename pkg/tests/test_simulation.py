import math

import pytest

from ibfrecon.markov import MarkovConfig, expected_rounds
from ibfrecon.simulation import (
    TrialConfig,
    extraction_csv,
    rounds_bound_csv,
    rounds_csv,
    run_extraction_trials,
    run_rounds_experiment,
    split_difference,
)


def test_trial_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(N=10, h=3, f=5)
    with pytest.raises(ValueError):
        TrialConfig(N=12, h=3, f=5, trials=0)
    with pytest.raises(ValueError):
        TrialConfig(N=12, h=3, f=5, thresholds=(0,))
    assert TrialConfig(N=12, h=3, f=5, thresholds=(1, 0.5)).thresholds == (0.5, 1)


def test_single_element_never_fails():
    st = run_extraction_trials(TrialConfig(N=12, h=3, f=1, trials=200))
    assert all(st.failures[R] == 0 for R in st.config.thresholds)
    assert st.mean_rate == 1 and st.std_rate == 0


def test_failure_fraction_non_decreasing_in_rate():
    st = run_extraction_trials(TrialConfig(N=60, h=3, f=45, trials=200, master_seed=3))
    fr = [st.failure_fraction(R) for R in st.config.thresholds]
    assert fr == sorted(fr)


def test_extraction_trials_independent_of_workers():
    cfg = TrialConfig(N=120, h=3, f=80, trials=40, master_seed=11)
    one = run_extraction_trials(cfg, workers=1)
    two = run_extraction_trials(cfg, workers=2)
    assert one.extracted == two.extracted
    assert extraction_csv([one]) == extraction_csv([two])


def test_split_difference():
    xs = list(range(10))
    A, B = split_difference(5, xs)
    assert A == {0, 1, 2, 5, 6, 7, 8, 9} and B == {3, 4, 5, 6, 7, 8, 9}
    assert len(A ^ B) == 5


def test_one_element_difference_takes_one_round():
    (p,) = run_rounds_experiment(120, 3, [1], trials=30)
    assert p.rounds == [1] * 30 and p.mean == 1 and p.reconciled == p.sound == 30


def test_common_elements_do_not_change_rounds():
    a = run_rounds_experiment(60, 3, [30], trials=20, master_seed=5, common=0)
    b = run_rounds_experiment(60, 3, [30], trials=20, master_seed=5, common=100)
    assert a[0].rounds == b[0].rounds


def test_rounds_independent_of_workers():
    a = run_rounds_experiment(120, 2, [40, 80], trials=12, master_seed=2, workers=1)
    b = run_rounds_experiment(120, 2, [40, 80], trials=12, master_seed=2, workers=2)
    assert rounds_csv({2: a}) == rounds_csv({2: b})


def test_rounds_below_model_at_d60():
    (p,) = run_rounds_experiment(120, 3, [60], trials=300, master_seed=1)
    assert p.reconciled == p.sound == 300
    assert p.mean <= expected_rounds(60, MarkovConfig(120, 3)) + 3 * p.stderr


def test_h2_needs_fewer_rounds_than_h3_far_above_capacity():
    (p2,) = run_rounds_experiment(120, 2, [200], trials=100, master_seed=4)
    (p3,) = run_rounds_experiment(120, 3, [200], trials=100, master_seed=4)
    margin = 3 * math.hypot(p2.stderr, p3.stderr)
    assert p2.mean + margin < p3.mean


def test_csv_shapes():
    text = rounds_bound_csv(120, [2, 3], [0, 20])
    assert text.splitlines()[0] == "x,2,3"
    assert text.splitlines()[1] == "0,0.000000,0.000000"
    pts = run_rounds_experiment(120, 3, [5], trials=3)
    assert rounds_csv({3: pts}).splitlines() == ["f;3", f"5;{pts[0].mean:.6f}"]
