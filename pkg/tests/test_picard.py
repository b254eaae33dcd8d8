import numpy as np
import pytest

from shemoments.kernels import kernel_H, kernel_K
from shemoments.measures import atoms, dirac, dirac_derivative, gaussian_bump, lebesgue
from shemoments.moments import second_moment
from shemoments.picard import PicardGrid, picard_second_moment, source_exponent

GRID = PicardGrid(T=0.5, K=80, N=161)


def test_lebesgue_converges_to_closed_form():
    its, status = picard_second_moment(lebesgue(), 1.0, 1.0, 0.0, GRID)
    assert status.converged and str(status).startswith("Converged")
    f = its[-1]
    exact = 1.0 + kernel_H(f.t, 1.0, 1.0)
    assert np.max(np.abs(f.values - exact[:, None])) < 1e-3


def test_delta_converges_to_closed_form():
    its, status = picard_second_moment(dirac(), 1.0, 1.0, 0.0, GRID)
    assert status.converged
    f = its[-1]
    T, X = np.meshgrid(f.t, f.x, indexing="ij")
    exact = kernel_K(T, X, 1.0, 1.0)
    rel = np.max(np.abs(f.values - exact), axis=1) / np.max(exact, axis=1)
    assert rel[1:].max() < 1e-2


def test_iterates_nondecreasing():
    for mu in (lebesgue(), atoms([(-0.5, 1.0), (0.4, 0.5)]), gaussian_bump(0.0, 0.5)):
        its, _ = picard_second_moment(mu, 1.0, 1.0, 0.0, PicardGrid(T=0.5, K=40, N=81), max_iter=8)
        for a, b in zip(its, its[1:]):
            assert np.all(b.values >= a.values - 1e-12)


def test_smooth_density_matches_pointwise_moment():
    mu = gaussian_bump(0.0, 0.5)
    its, status = picard_second_moment(mu, 1.0, 1.0, 0.0, GRID)
    assert status.converged
    f = its[-1]
    for k in (40, 79):
        for j in (60, 80):
            assert f.values[k, j] == pytest.approx(second_moment(mu, 1.0, 1.0, 0.0, f.t[k], f.x[j]), rel=1e-2)


def test_offset_term():
    its, status = picard_second_moment(lebesgue(), 1.0, 1.0, 0.5, GRID)
    assert status.converged
    f = its[-1]
    exact = 1.0 + 1.25 * kernel_H(f.t, 1.0, 1.0)
    assert np.max(np.abs(f.values - exact[:, None])) < 1e-3


def test_delta_prime_diverges():
    its, status = picard_second_moment(dirac_derivative(1), 1.0, 1.0, 0.0, GRID, max_iter=10)
    assert not status.converged and status.n <= 10
    assert str(status).startswith("Diverged")
    assert source_exponent(dirac_derivative(1), 1.0, 0.5, 0.0) <= -1.0


def test_order_zero_distribution_behaves_like_delta():
    its, status = picard_second_moment(dirac_derivative(0), 1.0, 1.0, 0.0, GRID)
    its2, status2 = picard_second_moment(dirac(), 1.0, 1.0, 0.0, GRID)
    assert status.converged and status2.converged
    np.testing.assert_allclose(its[-1].values, its2[-1].values)


def test_blowup_threshold_reports_divergence():
    its, status = picard_second_moment(lebesgue(), 1.0, 3.0, 0.0, PicardGrid(T=2.0, K=40, N=41), blowup=50.0)
    assert not status.converged
    assert its[-1].values.max() > 50.0


def test_iteration_limit():
    its, status = picard_second_moment(lebesgue(), 1.0, 1.0, 0.0, GRID, max_iter=2)
    assert not status.converged and status.n == 2 and len(its) == 3
