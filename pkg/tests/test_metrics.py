import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from mfkmeans.core import FunctionalSample, Grid, MultiCurve, l2_distance
from mfkmeans.experiment import DEFAULT_LOG10P_GRID
from mfkmeans.metrics import (
    MetricChoice,
    MetricKind,
    MetricSpec,
    cross_distances,
    distance,
    dp_distance,
    mahalanobis_component,
    pairwise_distances,
    regularizing_weight,
    truncated_mahalanobis,
)
from mfkmeans.spectral import CovarianceEstimate, eigendecompose, spectrum_of

from conftest import random_sample


def rank_one_spectrum(lam, T=10):
    """Spectrum with a single eigenpair ``lam``, eigenfunction the normalised constant."""
    g = Grid.uniform(0.0, 1.0, T)
    phi = np.ones(T) / math.sqrt(T * g.weight)
    sp = eigendecompose(CovarianceEstimate(lam * np.outer(phi, phi), g, 1))
    assert sp.rank == 1 and sp.eigenvalues[0] == pytest.approx(lam)
    return sp, g, phi


def explicit_dp(a, b, sample, p):
    """Direct evaluation with every eigenfunction, the complement completed explicitly."""
    g = sample.grid
    dt = g.weight
    n = sample.n
    X = sample.flat()
    C = (X - X.mean(0)).T @ (X - X.mean(0)) / (n - 1)
    lam, U = scipy.linalg.eigh(C * dt)
    lam, U = lam[::-1], U[:, ::-1]
    keep = (lam > lam[0] * 1e-12) & (lam > 0)
    keep[n - 1:] = False
    Ur = U[:, keep]
    comp = scipy.linalg.null_space(Ur.T)
    assert Ur.shape[1] + comp.shape[1] == X.shape[1]
    d = (a.values - b.values).ravel()
    total = 0.0
    for k in range(Ur.shape[1]):
        proj = np.dot(d, Ur[:, k] / math.sqrt(dt)) * dt  # weighted inner product with unit eigenfunction
        h = lam[k] / (lam[k] + 1 / p)
        total += proj**2 / lam[k] * h
    for k in range(comp.shape[1]):
        proj = np.dot(d, comp[:, k] / math.sqrt(dt)) * dt
        total += p * proj**2
    return math.sqrt(total)


class TestRegularizingWeight:
    def test_values(self):
        assert regularizing_weight(0.0, 3.0) == 0.0
        assert regularizing_weight(1.0, 1.0) == 0.5
        assert regularizing_weight(1.0, 1e15) == pytest.approx(1.0, abs=1e-14)
        assert regularizing_weight(1.0, 1e15) < 1.0

    @pytest.mark.parametrize("p", [0.0, -1.0])
    def test_rejects_nonpositive_p(self, p):
        with pytest.raises(ValueError):
            regularizing_weight(1.0, p)

    @given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_monotone(self, l1, l2, p1, p2):
        lo_l, hi_l = sorted((l1, l2))
        lo_p, hi_p = sorted((p1, p2))
        assert regularizing_weight(lo_l, lo_p) <= regularizing_weight(hi_l, lo_p)
        assert regularizing_weight(lo_l, lo_p) <= regularizing_weight(lo_l, hi_p)
        assert 0 <= regularizing_weight(hi_l, hi_p) < 1


class TestComponent:
    def test_examples(self):
        sp, g, phi = rank_one_spectrum(4.0)
        assert mahalanobis_component(MultiCurve.zeros(g), 1, sp) == 0.0
        assert mahalanobis_component(MultiCurve(phi, g), 1, sp) == pytest.approx(0.5)
        ortho = np.where(np.arange(10) < 5, 1.0, -1.0)
        assert mahalanobis_component(MultiCurve(ortho, g), 1, sp) == pytest.approx(0.0, abs=1e-8)

    def test_beyond_rank(self):
        sp, g, _ = rank_one_spectrum(1.0)
        with pytest.raises(IndexError):
            mahalanobis_component(MultiCurve.zeros(g), 2, sp)


class TestExamples:
    def test_dp_single_pair(self):
        sp, g, phi = rank_one_spectrum(1.0)
        a, b = MultiCurve(phi, g), MultiCurve.zeros(g)
        spec = MetricSpec.dp(sp, 1.0)
        assert dp_distance(a, b, spec) == pytest.approx(math.sqrt(0.5), rel=1e-12)
        assert distance(a, b, spec) == pytest.approx(math.sqrt(0.5), rel=1e-12)
        assert dp_distance(a, a, spec) == 0.0

    def test_dp_empty_eigenspace(self):
        g = Grid.uniform(0.0, 1.0, 3)
        s = FunctionalSample(np.ones((3, 1, 3)), g)
        sp = spectrum_of(s)
        assert sp.rank == 0
        a, b = MultiCurve([1.0, -2.0, 0.5], g), MultiCurve([0.0, 1.0, 2.0], g)
        assert dp_distance(a, b, MetricSpec.dp(sp, 4.0)) == pytest.approx(2 * l2_distance(a, b), rel=1e-12)
        # same value from an explicit orthonormal basis of the whole space
        E = np.eye(3) / math.sqrt(g.weight)
        d = a.values.ravel() - b.values.ravel()
        explicit = math.sqrt(sum(4.0 * (g.weight * d @ E[:, k]) ** 2 for k in range(3)))
        assert dp_distance(a, b, MetricSpec.dp(sp, 4.0)) == pytest.approx(explicit, rel=1e-12)

    def test_truncated(self):
        sp, g, phi = rank_one_spectrum(1.0)
        spec = MetricSpec.truncated(sp, 1)
        a = MultiCurve(phi, g)
        z = MultiCurve.zeros(g)
        assert truncated_mahalanobis(a, z, spec) == pytest.approx(1.0)
        assert distance(a, z, spec) == pytest.approx(1.0)
        assert truncated_mahalanobis(a, a, spec) == 0.0
        ortho = MultiCurve(np.where(np.arange(10) < 5, 1.0, -1.0), g)
        assert truncated_mahalanobis(ortho, z, spec) == pytest.approx(0.0, abs=1e-12)

    def test_truncated_rejects_large_k(self):
        sp, _, _ = rank_one_spectrum(1.0)
        with pytest.raises(ValueError):
            MetricSpec.truncated(sp, 2)

    def test_l2_dispatch(self, grid150):
        a = MultiCurve.constant(2.0, grid150)
        assert distance(a, a, MetricSpec.l2()) == 0.0

    def test_invalid_p(self):
        sp, _, _ = rank_one_spectrum(1.0)
        for p in (0.0, -1.0, math.inf):
            with pytest.raises(ValueError):
                MetricSpec.dp(sp, p)


@pytest.mark.parametrize("seed", range(25))
def test_oracle_against_explicit_complement(seed):
    rng = np.random.default_rng(seed)
    J = int(rng.integers(1, 3))
    T = int(rng.integers(2, 12 // J + 1))
    n = int(rng.integers(2, 7))
    s = random_sample(rng, n=n, J=J, T=T)
    sp = spectrum_of(s)
    for log10p in (-3.0, 0.0, 2.5):
        p = 10.0**log10p
        spec = MetricSpec.dp(sp, p)
        for _ in range(5):
            a, b = (MultiCurve(x, s.grid) for x in rng.standard_normal((2, J, T)))
            assert dp_distance(a, b, spec) == pytest.approx(explicit_dp(a, b, s, p), rel=1e-9)


@pytest.fixture(scope="module")
def prop_setup():
    rng = np.random.default_rng(7)
    s = random_sample(rng, n=12, J=2, T=10)
    return s, spectrum_of(s), rng


def _pairs(s, rng, m):
    return [
        (MultiCurve(x, s.grid), MultiCurve(y, s.grid))
        for x, y in zip(rng.standard_normal((m, 2, 10)), rng.standard_normal((m, 2, 10)))
    ]


def test_axioms_on_triples(prop_setup):
    s, sp, rng = prop_setup
    spec = MetricSpec.dp(sp, 10.0)
    for _ in range(1000):
        a, b, c = (MultiCurve(x, s.grid) for x in rng.standard_normal((3, 2, 10)) * rng.uniform(0.1, 10))
        ab, bc, ac = dp_distance(a, b, spec), dp_distance(b, c, spec), dp_distance(a, c, spec)
        assert ab == dp_distance(b, a, spec)
        assert ac <= (ab + bc) * (1 + 1e-10)
        assert ab > 0
        assert dp_distance(a, a, spec) <= 1e-10


def test_monotone_in_p(prop_setup):
    s, sp, rng = prop_setup
    for a, b in _pairs(s, rng, 50):
        ds = [dp_distance(a, b, MetricSpec.dp_log10(sp, lg)) for lg in DEFAULT_LOG10P_GRID]
        assert all(x <= y * (1 + 1e-12) for x, y in zip(ds, ds[1:]))


def test_sqrt_p_bound(prop_setup):
    s, sp, rng = prop_setup
    for a, b in _pairs(s, rng, 50):
        for lg in DEFAULT_LOG10P_GRID:
            p = 10.0**lg
            assert dp_distance(a, b, MetricSpec.dp(sp, p)) <= math.sqrt(p) * l2_distance(a, b) * (1 + 1e-12)


def test_small_p_limit(prop_setup):
    s, sp, rng = prop_setup
    p = 1e-8
    for a, b in _pairs(s, rng, 50):
        ratio = dp_distance(a, b, MetricSpec.dp(sp, p)) / math.sqrt(p)
        assert ratio == pytest.approx(l2_distance(a, b), rel=1e-3)


def test_large_p_limit_on_eigenspace(prop_setup):
    s, sp, rng = prop_setup
    spec = MetricSpec.dp(sp, 1e12)
    for _ in range(50):
        coef = rng.standard_normal(sp.rank)
        diff = MultiCurve(np.tensordot(coef, sp.eigenfunctions, axes=1), s.grid)
        z = MultiCurve.zeros(s.grid, 2)
        limit = math.sqrt(np.sum(coef**2 / sp.retained))
        assert dp_distance(diff, z, spec) == pytest.approx(limit, rel=1e-4)


@pytest.mark.parametrize("choice", ["l2", "truncated:3", "dp:-2", "dp:8"])
def test_batched_matches_pairwise(prop_setup, choice):
    s, sp, _ = prop_setup
    spec = MetricChoice.parse(choice).bind(sp)
    D = pairwise_distances(s, spec)
    for i in range(s.n):
        for j in range(s.n):
            assert D[i, j] == pytest.approx(distance(s[i], s[j], spec), rel=1e-8, abs=1e-10)
    np.testing.assert_array_equal(D, D.T)
    np.testing.assert_array_equal(cross_distances(s.values, s.values, spec, s.grid, jobs=3),
                                  cross_distances(s.values, s.values, spec, s.grid, jobs=1))


class TestMetricChoice:
    @pytest.mark.parametrize("text,kind", [("l2", MetricKind.L2), ("truncated:3", MetricKind.TRUNCATED_MAHALANOBIS),
                                           ("dp:-2", MetricKind.GENERALIZED_MAHALANOBIS)])
    def test_roundtrip(self, text, kind):
        c = MetricChoice.parse(text)
        assert c.kind is kind
        assert str(c) == text
        assert MetricChoice.parse(str(c)) == c

    @pytest.mark.parametrize("text", ["", "dp", "dp:x", "truncated:0", "l2:3", "cosine"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            MetricChoice.parse(text)

    def test_bind_requires_spectrum(self):
        with pytest.raises(ValueError):
            MetricChoice.parse("dp:0").bind(None)
