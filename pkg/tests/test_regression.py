import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoexpand import (
    BasisSpec,
    ConditioningError,
    KernelParams,
    ValidationError,
    WeightPrior,
    apply_basis,
    equivalence_check,
    gp_predict,
    log_marginal_likelihood,
    mixed_fit_predict,
    optimize_hyperparams,
    rbf_kernel,
    weight_space_predict,
)
from geoexpand.regression import (
    PredictiveDistribution,
    equivalence_sweep,
    random_equivalence_instance,
)

mpmath.mp.dps = 50


def weight_posterior_oracle(x, z, xs, spec, prior):
    """Predictive from the m x m weight posterior, in 50-digit arithmetic."""
    P = mpmath.matrix(apply_basis(x, spec).tolist())
    Ps = mpmath.matrix(apply_basis(xs, spec).tolist())
    S = mpmath.matrix(prior.cov.tolist())
    s2 = mpmath.mpf(prior.noise)
    A = P.T * P / s2 + S**-1
    Ainv = A**-1
    mean = Ps * Ainv * P.T * mpmath.matrix(z.tolist()) / s2
    cov = Ps * Ainv * Ps.T
    to_np = lambda m: np.array(m.tolist(), dtype=float)
    return to_np(mean).ravel(), to_np(cov)


def dense_gp_oracle(x, z, xs, params):
    """Function-space predictive from explicit dense inverses."""
    K = params.gram(x) + params.noise * np.eye(len(x))
    Ks = params.gram(x, xs)
    inv = np.linalg.inv(K)
    return Ks.T @ inv @ z, params.gram(xs) - Ks.T @ inv @ Ks


class TestBasis:
    def test_identity(self):
        np.testing.assert_array_equal(apply_basis([[2.0]], BasisSpec("identity")), [[1, 2]])

    def test_cubic(self):
        np.testing.assert_array_equal(apply_basis([[2.0]], BasisSpec("polynomial", 3)), [[1, 2, 4, 8]])

    def test_degree_zero(self, rng):
        out = apply_basis(rng.normal(size=(5, 2)), BasisSpec("polynomial", 0))
        np.testing.assert_array_equal(out, np.ones((5, 1)))

    def test_multi_input_no_cross_terms(self):
        spec = BasisSpec("polynomial", 2)
        out = apply_basis([[2.0, 3.0]], spec)
        np.testing.assert_array_equal(out, [[1, 2, 4, 3, 9]])
        assert out.shape[1] == spec.output_dim(2)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            BasisSpec("fourier")
        with pytest.raises(ValidationError):
            BasisSpec("polynomial", -1)


class TestWeightPrior:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            WeightPrior([[1.0, 0.5], [0.0, 1.0]], 1.0)

    def test_rejects_indefinite(self):
        with pytest.raises(ValidationError):
            WeightPrior([[1.0, 2.0], [2.0, 1.0]], 1.0)

    def test_rejects_zero_noise(self):
        with pytest.raises(ValidationError):
            WeightPrior(np.eye(2), 0.0)


class TestWeightSpacePredict:
    def test_infinite_noise_gives_prior(self):
        p = weight_space_predict([[0.5]], [3.0], [[0.1], [0.9]], BasisSpec("identity"), WeightPrior(np.eye(2), 1e12))
        np.testing.assert_allclose(p.mean, 0.0, atol=1e-6)

    def test_noise_free_interpolation(self):
        p = weight_space_predict([[2.0]], [1.7], [[2.0]], BasisSpec("identity"), WeightPrior(np.eye(2), 1e-12))
        assert p.mean[0] == pytest.approx(1.7, abs=1e-6)

    def test_extended_precision_oracle(self):
        rng = np.random.default_rng(11)
        x, xs = rng.uniform(-1, 1, size=(8, 1)), rng.uniform(-1, 1, size=(4, 1))
        z = rng.normal(size=8)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        prior = WeightPrior((q * [0.7, 1.2, 1.9]) @ q.T, 0.3)
        prior = WeightPrior(0.5 * (prior.cov + prior.cov.T), 0.3)
        spec = BasisSpec("polynomial", 2)
        got = weight_space_predict(x, z, xs, spec, prior)
        mean, cov = weight_posterior_oracle(x, z, xs, spec, prior)
        np.testing.assert_allclose(got.mean, mean, rtol=0, atol=1e-8)
        np.testing.assert_allclose(got.cov, cov, rtol=0, atol=1e-8)

    def test_prior_dimension_must_match(self):
        with pytest.raises(ValidationError):
            weight_space_predict([[0.0]], [1.0], [[0.0]], BasisSpec("polynomial", 2), WeightPrior(np.eye(2), 1.0))


class TestRbfKernel:
    P = KernelParams(1.3, 2.0, 0.2)

    def test_same_index(self):
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], self.P, same_index=True) == pytest.approx(1.5)

    def test_at_length_scale(self):
        k = rbf_kernel([0.0], [2.0], KernelParams(1.0, 2.0, 0.5), same_index=False)
        assert k == pytest.approx(0.606531, abs=1e-6)

    def test_far_apart(self):
        assert rbf_kernel([0.0], [1e3], self.P) == pytest.approx(0.0, abs=1e-300)
        assert rbf_kernel([0.0], [1e3], self.P, same_index=True) == pytest.approx(0.2)

    def test_coincident_distinct_observations_stay_noisy(self):
        # delta is on observation identity, not on location
        assert rbf_kernel([1.0], [1.0], self.P, same_index=False) == pytest.approx(1.3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 20.0))
    def test_gram_psd(self, seed, ell):
        x = np.random.default_rng(seed).uniform(0, 10, size=(25, 2))
        k = KernelParams(1.0, ell).gram(x)
        assert np.linalg.eigvalsh(k).min() >= -1e-10


class TestGpPredict:
    def test_no_training_gives_prior(self):
        params = KernelParams(2.0, 1.0, 0.1)
        xs = np.array([[0.0], [0.5]])
        p = gp_predict(np.zeros((0, 1)), [], xs, params)
        np.testing.assert_array_equal(p.mean, 0.0)
        np.testing.assert_allclose(p.cov, params.gram(xs))

    def test_kriging_exactness(self, rng):
        x = rng.uniform(0, 5, size=(10, 2))
        z = rng.normal(size=10)
        p = gp_predict(x, z, x, KernelParams(1.0, 1.5, 0.0), "constant")
        np.testing.assert_allclose(p.mean, z, atol=1e-6)
        assert p.var.max() <= 1e-6

    def test_dense_oracle(self):
        x = np.array([[0.0], [1.0], [2.5]])
        z = np.array([0.3, -0.4, 1.1])
        xs = np.array([[0.5], [2.0], [4.0]])
        params = KernelParams(1.5, 0.8, 0.05)
        got = gp_predict(x, z, xs, params)
        mean, cov = dense_gp_oracle(x, z, xs, params)
        np.testing.assert_allclose(got.mean, mean, atol=1e-8)
        np.testing.assert_allclose(got.cov, cov, atol=1e-8)

    def test_constant_mean(self, rng):
        x = rng.uniform(0, 3, size=(6, 1))
        z = rng.normal(size=6) + 10.0
        params = KernelParams(1.0, 0.7, 0.1)
        got = gp_predict(x, z, [[100.0]], params, "constant")
        assert got.mean[0] == pytest.approx(z.mean())
        shifted = gp_predict(x, z - z.mean(), [[0.5]], params, "zero")
        assert gp_predict(x, z, [[0.5]], params, "constant").mean[0] == pytest.approx(shifted.mean[0] + z.mean())

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            gp_predict([[0.0], [1.0]], [1.0], [[0.0]], KernelParams(1.0, 1.0))

    def test_unknown_mean(self):
        with pytest.raises(ValidationError):
            gp_predict([[0.0]], [1.0], [[0.0]], KernelParams(1.0, 1.0), "linear")

    def test_unfactorisable_gram_raises(self):
        class Indefinite:
            noise = 0.0

            def gram(self, a, b=None):
                b = a if b is None else b
                return np.where(np.add.outer(a[:, 0], b[:, 0]) == 1.0, 2.0, 1.0)

        with pytest.raises(ConditioningError):
            gp_predict([[0.0], [1.0]], [1.0, 2.0], [[0.0]], Indefinite())

    def test_duplicate_inputs_need_jitter(self):
        x = np.array([[0.0], [0.0], [1.0]])
        p = gp_predict(x, [1.0, 1.0, 2.0], x, KernelParams(1.0, 1.0, 0.0))
        np.testing.assert_allclose(p.mean, [1.0, 1.0, 2.0], atol=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_more_data_never_increases_variance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 5, size=(8, 2))
        z = rng.normal(size=8)
        xs = rng.uniform(0, 5, size=(4, 2))
        params = KernelParams(1.0, 1.2, 0.05)
        fewer = gp_predict(x[:-1], z[:-1], xs, params)
        more = gp_predict(x, z, xs, params)
        assert np.all(more.var <= fewer.var + 1e-9)
        assert np.all(more.var >= 0)


class TestPredictiveDistribution:
    def test_clips_tiny_negatives(self):
        p = PredictiveDistribution([0.0], [[-1e-13]])
        assert p.var[0] == 0.0

    def test_rejects_negative_variance(self):
        with pytest.raises(ConditioningError):
            PredictiveDistribution([0.0], [[-1e-3]])


class TestEquivalence:
    def test_single_point(self):
        r = equivalence_check([[0.4]], [1.2], [[0.4], [-0.3]], BasisSpec("polynomial", 2), WeightPrior(np.diag([1.0, 0.5, 2.0]), 0.3))
        assert r.max_diff <= 1e-10

    def test_seeded_sweep(self):
        reports = equivalence_sweep(trials=100, n_max=20, m_max=5, seed=42)
        assert len(reports) == 100
        assert max(r.max_diff for r in reports) <= 1e-8

    def test_vanishing_prior(self, rng):
        x, z, xs, spec, prior = random_equivalence_instance(rng)
        tiny = WeightPrior(prior.cov * 1e-12, prior.noise)
        r = equivalence_check(x, z, xs, spec, tiny)
        assert r.max_diff <= 1e-10
        np.testing.assert_allclose(r.weight_space.mean, 0.0, atol=1e-10)
        np.testing.assert_allclose(r.function_space.mean, 0.0, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_instances(self, seed):
        r = equivalence_check(*random_equivalence_instance(np.random.default_rng(seed)))
        assert r.max_diff <= 1e-8


class TestLogMarginal:
    def test_scalar_case(self):
        params = KernelParams(0.7, 1.0, 0.2)
        v, z = 0.9, 1.3
        expect = -0.5 * z * z / v - 0.5 * np.log(v) - 0.5 * np.log(2 * np.pi)
        assert log_marginal_likelihood([[0.0]], [z], params) == pytest.approx(expect, rel=1e-12)

    def test_scaling(self, rng):
        x = rng.uniform(0, 4, size=(7, 1))
        z = rng.normal(size=7)
        a = log_marginal_likelihood(x, z, KernelParams(0.8, 1.1, 0.1))
        b = log_marginal_likelihood(x, np.sqrt(2) * z, KernelParams(1.6, 1.1, 0.2))
        # quadratic term unchanged, log det grows by n log 2
        assert b == pytest.approx(a - 0.5 * 7 * np.log(2.0), rel=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_finite_difference(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 5, size=(12, 2))
        z = rng.normal(size=12)
        theta = np.log([rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.05, 0.5)])
        f = lambda t: log_marginal_likelihood(x, z, KernelParams(*np.exp(t)))
        _, g = log_marginal_likelihood(x, z, KernelParams(*np.exp(theta)), return_grad=True)
        h = 1e-5
        fd = np.array([(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(3)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


@pytest.fixture(scope="module")
def gp_data():
    x = np.linspace(0, 100, 200)[:, None]
    truth = KernelParams(1.0, 2.0, 0.01)
    k = truth.gram(x) + truth.noise * np.eye(200)
    z = np.linalg.cholesky(k) @ np.random.default_rng(5).standard_normal(200)
    return x, z


class TestOptimizeHyperparams:
    def test_recovers_length_scale(self, gp_data):
        x, z = gp_data
        fit = optimize_hyperparams(x, z, KernelParams(1.0, 5.0, 0.1), mean_fn="zero")
        assert fit.converged
        assert fit.params.length_scale == pytest.approx(2.0, rel=0.25)

    def test_not_worse_than_init(self, gp_data):
        x, z = gp_data
        init = KernelParams(0.5, 3.0, 0.2)
        fit = optimize_hyperparams(x, z, init, mean_fn="zero")
        assert fit.log_marginal >= log_marginal_likelihood(x, z, init)

    def test_fixed_point(self, gp_data):
        x, z = gp_data
        first = optimize_hyperparams(x, z, KernelParams(1.0, 5.0, 0.1), mean_fn="zero")
        second = optimize_hyperparams(x, z, first.params, mean_fn="zero")
        assert second.log_marginal - first.log_marginal < 1e-6

    def test_deterministic(self, gp_data):
        x, z = gp_data
        a = optimize_hyperparams(x, z, KernelParams(1.0, 5.0, 0.1))
        b = optimize_hyperparams(x, z, KernelParams(1.0, 5.0, 0.1))
        assert a.params == b.params

    def test_constant_data(self):
        x = np.linspace(0, 10, 15)[:, None]
        fit = optimize_hyperparams(x, np.full(15, 3.0), KernelParams(1.0, 1.0, 0.1))
        assert fit.params.signal_var <= 1e-4


class TestMixedModel:
    def test_pure_linear(self, rng):
        x1 = rng.uniform(0, 5, size=(15, 1))
        x2 = rng.uniform(0, 5, size=(15, 2))
        z = 2.0 + 3.0 * x1[:, 0]
        fit = mixed_fit_predict(x1, x2, z, x1, x2, BasisSpec("identity"), KernelParams(1.0, 1.0, 0.01), optimize=True)
        np.testing.assert_allclose(fit.weights, [2.0, 3.0], atol=1e-8)
        np.testing.assert_allclose(fit.residual.mean, 0.0, atol=1e-6)
        assert fit.params.signal_var <= 1e-4

    def test_constant_covariate_reduces_to_gp(self, rng):
        x2 = rng.uniform(0, 5, size=(10, 2))
        z = rng.normal(size=10)
        xs = rng.uniform(0, 5, size=(3, 2))
        params = KernelParams(1.0, 1.5, 0.1)
        fit = mixed_fit_predict(np.ones((10, 1)), x2, z, np.ones((3, 1)), xs, BasisSpec("polynomial", 0), params)
        ref = gp_predict(x2, z - z.mean(), xs, params)
        np.testing.assert_allclose(fit.mean, ref.mean + z.mean(), atol=1e-12)
        np.testing.assert_allclose(fit.cov, ref.cov, atol=1e-12)

    def test_beats_either_component(self):
        rng = np.random.default_rng(21)
        n, n_test = 120, 60
        x1 = rng.uniform(0, 10, size=(n + n_test, 1))
        x2 = rng.uniform(0, 15, size=(n + n_test, 2))
        params = KernelParams(1.0, 2.0, 0.01)
        k = params.gram(x2) + params.noise * np.eye(n + n_test)
        z = 1.0 + 0.5 * x1[:, 0] + np.linalg.cholesky(k) @ rng.standard_normal(n + n_test)
        tr, te = slice(0, n), slice(n, None)
        spec = BasisSpec("identity")

        mixed = mixed_fit_predict(x1[tr], x2[tr], z[tr], x1[te], x2[te], spec, params).mean
        phi = apply_basis(x1[tr], spec)
        w, *_ = np.linalg.lstsq(phi, z[tr], rcond=None)
        linear = apply_basis(x1[te], spec) @ w
        gp = gp_predict(x2[tr], z[tr], x2[te], params, "constant").mean

        rmse = lambda p: np.sqrt(np.mean((p - z[te]) ** 2))
        assert rmse(mixed) < rmse(linear)
        assert rmse(mixed) < rmse(gp)

    def test_rank_deficient(self, rng):
        x2 = rng.uniform(0, 5, size=(6, 2))
        with pytest.raises(ConditioningError):
            mixed_fit_predict(np.ones((6, 1)), x2, rng.normal(size=6), np.ones((1, 1)), x2[:1], BasisSpec("identity"), KernelParams(1.0, 1.0))

    def test_row_mismatch(self, rng):
        with pytest.raises(ValidationError):
            mixed_fit_predict(np.ones((6, 1)), np.ones((5, 2)), np.ones(6), np.ones((1, 1)), np.ones((1, 2)), BasisSpec("identity"), KernelParams(1.0, 1.0))
