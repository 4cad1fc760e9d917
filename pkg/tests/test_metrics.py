import math

import numpy as np
import pytest

from ino_pca.errors import ConfigError, DomainError
from ino_pca.metrics import (cosine_similarity, empirical_histogram, grassmann_distance, l1_density_distance,
                             norm_parameter, principal_angles, trapezoid)

# int |phi(x) - phi(x - 1)| dx by adaptive quadrature (independent of this package)
L1_UNIT_GAUSSIANS_MU1 = 0.7658498450960527


def test_cosine_examples():
    xi = np.array([1.0, -1.0, 1.0, 1.0])
    assert cosine_similarity(xi, xi) == 1.0
    assert cosine_similarity(np.array([1.0, 1.0, 0.0, 0.0]), xi) == 0.0
    assert cosine_similarity(2 * xi, xi) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        cosine_similarity(np.zeros(4), xi)


def test_cosine_matches_order_parameter_form():
    rng = np.random.default_rng(0)
    p = 100
    xi = rng.standard_normal(p)
    xi *= math.sqrt(p) / np.linalg.norm(xi)
    x = rng.standard_normal(p)
    lam = norm_parameter(x)
    assert cosine_similarity(x, xi) == pytest.approx(xi @ x / (p * lam), rel=1e-13)


def test_norm_parameter_examples():
    assert norm_parameter(np.ones(9)) == 1.0
    assert norm_parameter(np.zeros(5)) == 0.0
    x = np.array([2.0, -2.0, 2.0, -2.0, 2.0])
    assert norm_parameter(x) == pytest.approx(2.0, rel=1e-15)


def test_grassmann_examples():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    diag = np.array([1.0, 1.0])
    assert grassmann_distance(e1, e1) == 0.0
    assert grassmann_distance(e1, e2) == pytest.approx(math.pi / 2, abs=1e-15)
    assert grassmann_distance(e1, diag) == pytest.approx(math.pi / 4, abs=1e-12)


def test_grassmann_range():
    rng = np.random.default_rng(3)
    for r in (1, 2, 4):
        U = rng.standard_normal((20, r))
        V = rng.standard_normal((20, r))
        d = grassmann_distance(U, V)
        assert 0.0 <= d <= math.sqrt(r) * math.pi / 2


def test_grassmann_errors():
    with pytest.raises(DomainError):
        grassmann_distance(np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]), np.eye(3)[:, :2])
    with pytest.raises(ConfigError):
        grassmann_distance(np.eye(3)[:, :2], np.eye(3)[:, :1])


def test_principal_angles_of_line_equal_arccos():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(30)
    xi = rng.standard_normal(30)
    q = cosine_similarity(x, xi)
    assert principal_angles(x, xi)[0] == pytest.approx(math.acos(abs(q)), abs=1e-12)


def test_l1_examples():
    grid = np.linspace(-1, 1, 201)
    d = np.exp(-grid**2)
    d /= trapezoid(d, grid)
    assert l1_density_distance(d, d, grid) == 0.0
    left = np.where(grid < 0, 1.0, 0.0)
    right = np.where(grid > 0, 1.0, 0.0)
    left /= trapezoid(left, grid)
    right /= trapezoid(right, grid)
    assert l1_density_distance(left, right, grid) == pytest.approx(2.0, abs=0.02)
    with pytest.raises(ConfigError):
        l1_density_distance(d, d[:-1], grid)


def test_l1_shifted_gaussians():
    grid = np.linspace(-12, 13, 50_001)
    phi = np.exp(-grid**2 / 2) / math.sqrt(2 * math.pi)
    phi1 = np.exp(-(grid - 1) ** 2 / 2) / math.sqrt(2 * math.pi)
    assert l1_density_distance(phi, phi1, grid) == pytest.approx(L1_UNIT_GAUSSIANS_MU1, abs=1e-6)


def test_histogram_single_value():
    grid = np.linspace(0, 1, 11)
    h = empirical_histogram(np.full(50, 0.52), grid)
    assert np.count_nonzero(h) == 1
    assert trapezoid(h, grid) == pytest.approx(1.0)


def test_histogram_uniform_is_flat():
    grid = np.linspace(0, 1, 11)
    rng = np.random.default_rng(0)
    h = empirical_histogram(rng.uniform(-0.05, 1.05, 200_000), grid)
    assert np.std(h) / np.mean(h) < 0.02


def test_histogram_of_normal_samples():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(200_000)
    grid = np.linspace(-6, 6, 121)
    h = empirical_histogram(vals, grid)
    phi = np.exp(-grid**2 / 2) / math.sqrt(2 * math.pi)
    assert l1_density_distance(h, phi, grid) <= 0.03


def test_histogram_outside_values_warn():
    grid = np.linspace(0, 1, 5)
    with pytest.warns(RuntimeWarning, match="outside"):
        h = empirical_histogram(np.array([-3.0, 0.5, 7.0]), grid)
    assert h[0] > 0 and h[-1] > 0


def test_histogram_bad_grid():
    with pytest.raises(ConfigError):
        empirical_histogram(np.ones(3), np.array([0.0, 0.0, 1.0]))
