import numpy as np
import pytest
from scipy.special import zeta

from peelsurv.errors import ConvergenceError, DomainError
from peelsurv.peeling import (
    StepDistribution,
    harmonic_function,
    harmonic_residuals,
    make_simple_nu,
    make_synthetic_nu,
)
from peelsurv.peeling import harmonic as harmonic_mod


def two_up_law(A=0.15, p2=0.1):
    # centred law with jumps up to +2 and the same 5/2 tail
    p1 = A * zeta(1.5) - 2 * p2
    p0 = 1 - p1 - p2 - A * zeta(2.5)
    nu = StepDistribution(2, [p0, p1, p2], A)
    nu.validate()
    return nu


def test_simple_walk_is_linear(simple):
    nu, h = simple
    x = np.arange(1, h.M + 1)
    assert np.max(np.abs(h.table / x - 1.0)) <= 1e-9
    assert h.residual < 1e-12
    assert h(1) == 1.0 and h(5) == 5.0


def test_synthetic_residual_and_flatness(synthetic):
    nu, h = synthetic
    assert h.residual <= 1e-9
    assert harmonic_residuals(nu, h).max() <= 1e-9
    assert h.flatness() < 0.01
    assert np.all(h.table > 0) and np.all(np.diff(h.table) > 0)


def test_synthetic_doubling_stable():
    nu = make_synthetic_nu(0.2)
    small = harmonic_function(nu, 4096)
    big = harmonic_function(nu, 8192)
    assert np.max(np.abs(big.table[:4096] / small.table - 1.0)) < 1e-3


def test_far_field_continuity(synthetic):
    _, h = synthetic
    M = h.M
    assert h(M + 1) / h(M) == pytest.approx(1.0, abs=1e-3)
    vals = h(np.array([10, M, M + 10, 4 * M]))
    assert vals.shape == (4,) and np.all(np.diff(vals) > 0)


def test_two_up_law():
    nu = two_up_law()
    h = harmonic_function(nu, 2048)
    assert h.residual <= 1e-9
    assert h.flatness() < 0.01
    h2 = harmonic_function(nu, 4096)
    assert np.max(np.abs(h2.table[:2048] / h.table - 1.0)) < 1e-3


def test_small_table_rejected():
    with pytest.raises(DomainError):
        harmonic_function(make_simple_nu(), 999)


def test_h_domain(simple):
    _, h = simple
    with pytest.raises(DomainError):
        h(0)


def test_convergence_error_carries_history(monkeypatch):
    monkeypatch.setattr(harmonic_mod, "RESIDUAL_TOL", 1e-300)
    with pytest.raises(ConvergenceError) as info:
        harmonic_function(make_synthetic_nu(0.2), 1000)
    assert info.value.history and info.value.history[0] > 0
