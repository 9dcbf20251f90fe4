import math

import numpy as np
import pytest
from scipy import stats

from peelsurv.errors import BudgetError, DomainError
from peelsurv.exponent import LN2, JumpFunctional, jump_tail_integral
from peelsurv.levy import (
    _mean_from_counts,
    approx_decay_rate,
    build_approx,
    estimate_E2_pow_minus_N,
    jump_cdf,
    jump_rate_closed_form,
    sample_jump_sizes,
    sample_passage,
    simulate_passages,
    verify_lemma2,
)
from peelsurv.streams import sample_stream, shard_bounds

HALF = JumpFunctional(math.log(0.5), -LN2)


@pytest.fixture(scope="module")
def approx():
    return build_approx(0.01)


def test_jump_rate_matches_closed_form(approx):
    assert approx.jump_rate == pytest.approx(jump_rate_closed_form(0.01), rel=1e-12)
    # mpmath reference for the same integral
    assert approx.jump_rate == pytest.approx(661.68123436223361959, rel=1e-12)


def test_gaussian_mode_stddev():
    a = build_approx(0.01, "gaussian_small")
    assert a.small_jump_stddev_per_time == pytest.approx(0.44702689218549085545, rel=1e-10)
    assert a.compensated_drift == build_approx(0.01).compensated_drift


@pytest.mark.parametrize("eps", [0.0, -0.1, LN2, 1.0])
def test_build_approx_domain(eps):
    with pytest.raises(DomainError):
        build_approx(eps)


def test_build_approx_mode():
    with pytest.raises(DomainError):
        build_approx(0.01, "exact")


def test_jump_sampler_ks(approx):
    y = sample_jump_sizes(approx, 50_000, np.random.default_rng(11))
    assert y.max() <= -0.01
    res = stats.kstest(y, lambda t: jump_cdf(t, 0.01))
    assert res.pvalue > 0.01


def test_big_jump_thinning(approx):
    # jumps below -ln 2 arrive at rate 2/3: chi-square on binned per-unit-time counts
    rng = np.random.default_rng(5)
    n_units = 4000
    total = rng.poisson(approx.jump_rate, n_units)
    p_big = jump_cdf(-LN2, 0.01)
    big = np.array([np.count_nonzero(sample_jump_sizes(approx, int(m), rng) < -LN2) for m in total])
    assert p_big * approx.jump_rate == pytest.approx(2.0 / 3.0, rel=1e-12)
    edges = [0, 1, 2, 3]
    observed = np.array([np.sum(big == k) for k in edges[:-1]] + [np.sum(big >= edges[-1])])
    pmf = stats.poisson.pmf(edges[:-1], 2.0 / 3.0)
    expected = n_units * np.append(pmf, 1.0 - pmf.sum())
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_passage_zero_level(approx):
    s = sample_passage(approx, 0.0, HALF, sample_stream(1, 0))
    assert s.passage_time == 0.0 and s.counted_jumps == 0 and s.functional_value == 0.0


def test_passage_lands_after_positive_time(approx):
    s = sample_passage(approx, LN2, HALF, sample_stream(1, 0))
    assert s.passage_time > 0.0
    assert s.functional_value == pytest.approx(math.log(0.5) * s.counted_jumps)


def test_passage_threshold_must_not_count_dropped_jumps(approx):
    with pytest.raises(DomainError):
        sample_passage(approx, LN2, JumpFunctional(-1.0, -0.005), sample_stream(1, 0))


def test_passage_budget(approx):
    with pytest.raises(BudgetError) as info:
        sample_passage(approx, 50.0, HALF, sample_stream(1, 0), max_time=1e-3)
    assert "time" in info.value.partial


def test_simulate_passages_deterministic_and_shard_invariant(approx):
    t1, c1 = simulate_passages(approx, LN2, HALF, 300, seed=4, workers=1)
    t2, c2 = simulate_passages(approx, LN2, HALF, 300, seed=4, workers=3)
    assert np.array_equal(t1, t2) and np.array_equal(c1, c2)
    t3, _ = simulate_passages(approx, LN2, HALF, 300, seed=5, workers=1)
    assert not np.array_equal(t1, t3)


def test_shard_bounds_cover():
    for n, p in [(10, 3), (7, 8), (100, 1), (0, 4)]:
        b = shard_bounds(n, p)
        assert b[0][0] == 0 and b[-1][1] == n
        assert all(x[1] == y[0] for x, y in zip(b, b[1:]))


def test_mean_from_counts_matches_direct():
    counts = np.array([0, 1, 0, 2, 5, 1, 0, 0, 3])
    m, se = _mean_from_counts(counts, math.log(0.5))
    vals = 0.5**counts
    assert m == pytest.approx(vals.mean(), rel=1e-15)
    assert se == pytest.approx(vals.std(ddof=1) / math.sqrt(counts.size), rel=1e-12)


def test_passage_functional_small_sample(approx):
    est = verify_lemma2(approx, LN2, HALF, 10_000, seed=3)
    assert abs(est.estimate - est.prediction) < 4 * est.std_error
    assert est.prediction == pytest.approx(2.0**-0.12831235141783252, rel=1e-12)
    assert est.prediction_approx == pytest.approx(est.prediction, abs=1e-3)


def test_passage_functional_unit_weight(approx):
    est = verify_lemma2(approx, LN2, JumpFunctional.from_u(1.0), 200, seed=3)
    assert est.estimate == 1.0 and est.std_error == 0.0 and est.prediction == 1.0


def test_passage_functional_needs_samples(approx):
    with pytest.raises(DomainError):
        verify_lemma2(approx, LN2, HALF, 10, seed=0)


def test_gaussian_mode_small_sample():
    a = build_approx(0.05, "gaussian_small")
    est = estimate_E2_pow_minus_N(a, 5000, seed=2)
    assert abs(est.estimate - est.prediction_approx) < 4 * est.std_error


def test_approx_decay_rate_tends_to_exact():
    # the truncated process' own decay rate approaches c as eps -> 0
    gaps = [abs(approx_decay_rate(build_approx(e), HALF) - 0.12831235141783252) for e in (0.2, 0.05, 0.01)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_jump_cdf_bounds():
    assert jump_cdf(-0.01, 0.01) == pytest.approx(1.0)
    assert jump_cdf(-40.0, 0.01) < 1e-20
    # normalised tail mass equals the ratio of the two integrals
    assert jump_cdf(-LN2, 0.01) == pytest.approx(jump_tail_integral(0.0, -LN2) / jump_rate_closed_form(0.01), rel=1e-12)
