import math

import numpy as np
import pytest

from mfkmeans.core import Grid, MultiCurve, inner_product
from mfkmeans.simgen import GROUP_LABELS, ScenarioSpec, generate, group_means, rho, theta
from mfkmeans.spectral import spectrum_of


def test_rho_values():
    assert rho(1) == 0.5
    assert rho(3) == 0.25
    assert rho(4) == pytest.approx(1 / 25)
    with pytest.raises(ValueError):
        rho(0)


def test_theta_values():
    assert theta(1, 0.37) == 1.0
    assert theta(2, 0.25) == pytest.approx(math.sqrt(2))
    assert theta(3, 0.0) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        theta(0, 0.5)


def test_theta_orthonormal_on_grid():
    g = Grid.uniform(0.0, 1.0, 150)
    B = [MultiCurve(theta(k, g.points), g) for k in range(1, 11)]
    G = np.array([[inner_product(a, b) for b in B] for a in B])
    # both endpoints carry full weight, so the error is at most 2 dt
    assert np.max(np.abs(G - np.eye(10))) <= 2 * g.weight + 1e-12


def test_theta_exact_when_resolved():
    # periodic rectangle rule on [0, 1) resolves low frequencies exactly
    T = 64
    pts = np.arange(T) / T
    for j, k in [(2, 4), (3, 5), (2, 3), (4, 6)]:
        ip = np.sum(theta(j, pts) * theta(k, pts)) / T
        assert abs(ip - float(j == k)) <= 1e-8


@pytest.mark.parametrize("case,J", [("i", 1), ("ii", 1), ("iii", 2), ("iv", 2)])
def test_shapes_and_labels(case, J):
    s = generate(ScenarioSpec(case, seed=1))
    assert s.values.shape == (100, J, 150)
    assert s.labels.count(GROUP_LABELS[0]) == 50 and s.labels.count(GROUP_LABELS[1]) == 50


def test_deterministic():
    a = generate(ScenarioSpec("iii", seed=42))
    b = generate(ScenarioSpec("iii", seed=42))
    np.testing.assert_array_equal(a.values, b.values)
    c = generate(ScenarioSpec("iii", seed=43))
    assert not np.array_equal(a.values, c.values)


def test_unknown_case():
    with pytest.raises(ValueError):
        ScenarioSpec("v")


def test_group_mean_monte_carlo():
    spec = ScenarioSpec("iii", T=40, n1=10000, n2=1, seed=3)
    s = generate(spec)
    X = s.values[:10000]
    m1, _ = group_means(spec, s.grid)
    se = X.std(axis=0, ddof=1) / math.sqrt(10000)
    assert np.all(np.abs(X.mean(axis=0) - m1) <= 3.5 * se + 1e-12)
    # variance of each coordinate is sum_k rho_k theta_k(t)^2
    assert np.all(np.abs(X.mean(axis=0) - m1) / se < 5)


def test_mean_shift_cases():
    g = Grid.uniform(0, 1, 150)
    m1, m2 = group_means(ScenarioSpec("i"), g)
    shift = sum(math.sqrt(rho(k)) * theta(k, g.points) for k in (1, 2, 3))
    np.testing.assert_allclose(m2 - m1, shift[None, :], atol=1e-14)
    m1, m2 = group_means(ScenarioSpec("iv"), g)
    shift = sum(math.sqrt(rho(k)) * theta(k, g.points) for k in range(4, 101))
    np.testing.assert_allclose(m2 - m1, np.vstack([shift, shift]), atol=1e-12)
    np.testing.assert_allclose(m1[1], 4 * g.points**2 * (1 - g.points))


def test_bivariate_score_correlation():
    spec = ScenarioSpec("iii", n1=4000, n2=1, seed=8)
    s = generate(spec)
    X = s.values[:4000]
    g = s.grid
    scores = np.einsum("njt,t->nj", X - X.mean(0), theta(1, g.points)) * g.weight
    r = np.corrcoef(scores[:, 0], scores[:, 1])[0, 1]
    assert r == pytest.approx(0.5, abs=4 * (1 - 0.25) / math.sqrt(4000))


def test_first_eigenfunction_scores_correlated():
    spec = ScenarioSpec("iii", n1=3000, n2=1, seed=9)
    s = generate(spec)
    from mfkmeans.core import FunctionalSample

    s = FunctionalSample(s.values[:3000], s.grid)
    phi = spectrum_of(s).eigenfunctions[0]
    # projections of each coordinate onto the corresponding component of phi_1
    c1 = (s.values[:, 0] - s.values[:, 0].mean(0)) @ phi[0]
    c2 = (s.values[:, 1] - s.values[:, 1].mean(0)) @ phi[1]
    assert np.corrcoef(c1, c2)[0, 1] == pytest.approx(0.5, abs=0.1)


def test_spec_validation():
    for kw in ({"T": 1}, {"K_tilde": 0}, {"n1": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            ScenarioSpec("i", **kw)
