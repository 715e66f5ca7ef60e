import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from interpcp import casestudies as cs

# direct summation with 40-digit mpmath posteriors
GNG_REFERENCE = 0.93556432825850709577


def test_round_half_up():
    assert list(cs.round_half_up([0.5, 1.5, 2.5, 2.49])) == [1, 2, 3, 2]


def test_stage_two_size_rule():
    assert list(cs.stage_two_size(15, [0.1, 0.3, 0.5], 0.3)) == [30, 8, 8]


def test_null_rejection_rate():
    rate = cs.trial_power(cs.TrialDesign(40, 0.05, 0.0, mc_reps=100_000), seed=1)
    assert abs(rate - 0.05) <= 0.004


def test_large_effect_power_is_one():
    assert cs.trial_power(cs.TrialDesign(40, 0.05, 1.5, mc_reps=20_000), seed=0) > 0.999


def _raw_fixed_design_power(n1, alpha, mu0, reps, seed):
    """Independent simulator: raw normal samples, scipy t-tests, n2 = 2 n1 always."""
    rng = np.random.default_rng(seed)
    z = []
    for n in (n1, 2 * n1):
        t = rng.normal(mu0, 1.0, (reps, n))
        p = rng.normal(0.0, 1.0, (reps, n))
        pv = stats.ttest_ind(t, p, axis=1, alternative="greater").pvalue
        z.append(stats.norm.isf(pv))
    return np.mean((z[0] + z[1]) / math.sqrt(2) >= stats.norm.isf(alpha))


def test_degenerate_rule_matches_independent_simulator():
    reps = 40_000
    ours = cs.trial_power(cs.TrialDesign(12, 0.05, 0.4, delta=math.inf, mc_reps=reps), seed=3)
    ref = _raw_fixed_design_power(12, 0.05, 0.4, reps, seed=4)
    se = math.sqrt(2 * ref * (1 - ref) / reps)
    assert abs(ours - ref) <= 3 * se


def test_welch_option_is_calibrated():
    rate = cs.trial_power(cs.TrialDesign(20, 0.1, 0.0, mc_reps=50_000, test="welch"), seed=5)
    assert abs(rate - 0.1) <= 3 * math.sqrt(0.09 / 50_000)


def test_design_validation():
    with pytest.raises(ValueError):
        cs.TrialDesign(1, 0.05, 0.2)
    with pytest.raises(ValueError):
        cs.TrialDesign(10, 1.5, 0.2)
    with pytest.raises(ValueError):
        cs.TrialDesign(10, 0.05, 0.2, test="z")


def test_trial_dataset_ranges_and_regeneration():
    data = cs.gen_trial_dataset(12, mc_reps=2000, seed=7)
    assert data.feature_names == ("mu0", "alpha", "beta")
    n1 = data.y * 60
    assert_allclose(n1, np.round(n1), atol=1e-12)
    assert np.all((n1 >= 10) & (n1 <= 60))
    assert np.all((data.X[:, 2] >= 0) & (data.X[:, 2] <= 1))
    seeds = data.meta["row_seeds"]
    for i in range(3):
        mu0, alpha, beta = data.X[i]
        d = cs.TrialDesign(int(round(n1[i])), alpha, mu0, mc_reps=2000)
        same = 1 - cs.trial_power(d, seed=seeds[i])
        assert_allclose(min(max(same, 0.5 / 2000), 1 - 0.5 / 2000), beta, rtol=0, atol=0)
        other = 1 - cs.trial_power(d, seed=seeds[i] + 1)
        assert abs(other - beta) <= 3 * math.sqrt(2 * max(beta * (1 - beta), 1e-4) / 2000)
    again = cs.gen_trial_dataset(12, mc_reps=2000, seed=7)
    assert np.array_equal(again.X, data.X)


def test_gng_trivial_cases():
    assert cs.gng_expected_go(cs.GngDesign(0.0, 0.0, 0.4)) == pytest.approx(1.0, abs=1e-14)
    d = cs.GngDesign(0.2, 0.3, 0.0)
    assert cs.gng_expected_go(d) == float(cs.gng_go_indicator(d, [0])[0])


def test_gng_reference_value():
    d = cs.GngDesign(0.2, 0.3, 0.35, n=40, tau_min=0.8, tau_base=0.1)
    assert_allclose(cs.gng_expected_go(d), GNG_REFERENCE, atol=1e-10)
    rng = np.random.default_rng(0)
    reps = 200_000
    nr = rng.binomial(40, 0.35, reps)
    go = cs.gng_go_indicator(d, np.arange(41))[nr]
    assert abs(go.mean() - GNG_REFERENCE) <= 3 * math.sqrt(GNG_REFERENCE * (1 - GNG_REFERENCE) / reps)


def test_gng_design_validation():
    with pytest.raises(ValueError):
        cs.GngDesign(0.4, 0.3, 0.2)


def test_gng_intermediate_features():
    orig = cs.gng_dataset(40, seed=3)
    inter = cs.gng_dataset(40, input_mode="intermediate", seed=3)
    assert np.array_equal(orig.y, inter.y)
    assert not np.array_equal(orig.X, inter.X)
    assert np.all((inter.X >= 0) & (inter.X <= 1))
    assert inter.feature_names == ("post_min", "post_base", "q0")
    with pytest.raises(ValueError):
        cs.gng_dataset(5, input_mode="other")


def test_gng_first_feature_decreases_in_tmin():
    t = np.linspace(0.05, 0.4, 15)
    f = [cs.gng_intermediate_features(cs.GngDesign(v, 0.45, 0.3))[0] for v in t]
    assert np.all(np.diff(f) < 0)


def test_fisher_labels():
    for n in (5, 17, 30):
        for q in range(n + 1):
            assert cs.fisher_label(q, q, n) == (1.0, 0.0)
    assert cs.fisher_label(0, 10, 10) == (0.0, 1.0)


def test_fisher_dataset_matches_independent_enumerator():
    data = cs.fisher_dataset(300, cs.FisherDesign(10, 50), seed=2)
    assert data.target_names == ("y0", "y1") and data.task == "classification"
    for (q1, q2, n), lab in zip(data.X.astype(int), data.y):
        p = sum(math.comb(n, x) * math.comb(n, q1 + q2 - x) for x in range(q2, min(q1 + q2, n) + 1)) / math.comb(2 * n, q1 + q2)
        assert lab[1] == float(p < 0.05)
    assert np.all((data.X[:, 0] <= data.X[:, 2]) & (data.X[:, 1] <= data.X[:, 2]))


def test_fisher_exhaustive_size():
    data = cs.fisher_dataset("exhaustive", cs.FisherDesign(3, 4))
    assert data.n == 16 + 25
