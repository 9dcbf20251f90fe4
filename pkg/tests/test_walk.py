import math

import numpy as np
import pytest
from scipy import stats

from peelsurv.errors import BudgetError, DomainError, HarmonicInconsistencyError
from peelsurv.peeling import WalkKernel, run_walk, scale_block_counts, step_conditioned, transition_defect
from peelsurv.streams import sample_stream


def test_simple_walk_from_one_always_up(simple):
    nu, h = simple
    rng = np.random.default_rng(0)
    assert {step_conditioned(1, nu, h, rng) for _ in range(500)} == {2}


def test_simple_walk_transition(simple):
    # p(x, x+1) = (x+1)/(2x)
    nu, h = simple
    rng = np.random.default_rng(1)
    x = 4
    ups = sum(step_conditioned(x, nu, h, rng) == x + 1 for _ in range(20_000))
    p = (x + 1) / (2 * x)
    assert abs(ups / 20_000 - p) < 4 * math.sqrt(p * (1 - p) / 20_000)


def test_normalisation_at_random_states(synthetic):
    nu, h = synthetic
    xs = np.random.default_rng(3).integers(1, h.M - nu.max_up, 100)
    assert max(transition_defect(int(x), nu, h) for x in xs) <= 1e-9


def test_inconsistent_h_detected(synthetic, simple):
    nu, _ = synthetic
    _, h_wrong = simple
    with pytest.raises(HarmonicInconsistencyError):
        step_conditioned(5, nu, h_wrong, np.random.default_rng(0))


def test_step_domain(synthetic):
    nu, h = synthetic
    with pytest.raises(DomainError):
        step_conditioned(0, nu, h, np.random.default_rng(0))


def test_empirical_transition_law(synthetic):
    nu, h = synthetic
    x = 3
    rng = np.random.default_rng(7)
    ys = np.array([step_conditioned(x, nu, h, rng) for _ in range(40_000)])
    support = [1, 2, 3, 4]
    probs = [nu.pmf(y - x) * h(y) / h(x) for y in support]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)
    observed = [np.sum(ys == y) for y in support]
    assert stats.chisquare(observed, ys.size * np.array(probs)).pvalue > 0.01


def test_far_field_steps(synthetic):
    nu, h = synthetic
    rng = np.random.default_rng(2)
    x = 10 * h.M
    ys = [step_conditioned(x, nu, h, rng) for _ in range(2000)]
    assert min(ys) >= 1 and max(ys) <= x + 1


def test_positivity_many_short_walks(synthetic):
    nu, h = synthetic
    k = WalkKernel(nu, h)
    lows = [run_walk(k, 1, 1000, sample_stream(17, j))[1] for j in range(10_000)]
    assert min(lows) >= 1


@pytest.fixture(scope="module")
def long_walks(synthetic):
    nu, h = synthetic
    k = WalkKernel(nu, h)
    marks = [1000, 10_000, 100_000]
    out = [run_walk(k, 1, 100_000, sample_stream(23, j), marks) for j in range(300)]
    at = np.array([o[0] for o in out])
    sup = np.array([o[2] for o in out])
    return marks, at, sup


def test_scaling_median_stable(long_walks):
    marks, at, _ = long_walks
    med = np.median(at, axis=0) / np.array(marks, dtype=float) ** (2 / 3)
    assert med.max() / med.min() < 1.15


def test_sup_growth(long_walks):
    _, _, sup = long_walks
    assert np.mean(sup <= 1e5 ** (2 / 3 - 0.1)) < 0.01


def test_run_walk_marks_validated(synthetic):
    k = WalkKernel(*synthetic)
    with pytest.raises(DomainError):
        run_walk(k, 1, 10, np.random.default_rng(0), marks=[5, 2])


def test_scale_block_budget(synthetic):
    k = WalkKernel(*synthetic)
    with pytest.raises(BudgetError):
        scale_block_counts(k, 1024, 2048, np.random.default_rng(0), max_steps=10)


def test_walk_kernel_pickles(synthetic):
    import pickle

    k = WalkKernel(*synthetic)
    k2 = pickle.loads(pickle.dumps(k))
    assert k2.max_up == k.max_up and np.array_equal(k2.htab, k.htab)
