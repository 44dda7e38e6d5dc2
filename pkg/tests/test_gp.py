import numpy as np
import pytest

from nopast.utils.errors import ContractViolation, GpNumericalError
from nopast.utils.gp import (
    Dataset,
    GpHyperparams,
    SearchSpace,
    _cholesky,
    condition,
    fit,
    kernel_eval,
    log_evidence,
    predict,
    prior_model,
)

UNIT2 = SearchSpace([0.0, 0.0], [1.0, 1.0])


def _hyper(dim=2, lengthscale=0.3, signal=1.0, noise=1e-4):
    return GpHyperparams(np.full(dim, lengthscale), signal, noise)


def _random_data(rng, n, dim=2):
    X = rng.uniform(size=(n, dim))
    y = np.sin(3 * X).sum(axis=1) + 0.1 * rng.normal(size=n)
    return Dataset(X, y)


def test_search_space_rejects_inverted_bounds():
    with pytest.raises(ContractViolation):
        SearchSpace([1.0], [0.0])


def test_dataset_rejects_mismatched_rows():
    with pytest.raises(ContractViolation):
        Dataset(np.zeros((3, 2)), np.zeros(2))


def test_kernel_at_zero_distance_is_signal_variance():
    hyper = GpHyperparams([0.5, 2.0], 2.0, 1e-3)
    x = np.array([0.3, 0.7])
    assert kernel_eval(x, x, hyper) == 2.0


def test_kernel_decays_with_distance():
    hyper = _hyper()
    assert kernel_eval(np.zeros(2), np.full(2, 1e3), hyper) < 1e-12


def test_kernel_is_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    hyper = GpHyperparams(rng.uniform(0.1, 2.0, size=3), 1.7, 1e-3)
    for _ in range(100):
        x, x2 = rng.normal(size=3), rng.normal(size=3)
        value = kernel_eval(x, x2, hyper)
        assert value == kernel_eval(x2, x, hyper)
        assert 0.0 < value <= 1.7


def test_kernel_dimension_mismatch():
    with pytest.raises(ContractViolation):
        kernel_eval(np.zeros(3), np.zeros(3), _hyper(dim=2))


def test_log_evidence_single_point():
    hyper = _hyper(signal=1.5, noise=0.25)
    value, _ = log_evidence(Dataset([[0.2, 0.4]], [0.0]), hyper)
    assert value == pytest.approx(-0.5 * np.log(2 * np.pi * 1.75), rel=1e-12)


def test_log_evidence_zero_targets_is_log_det_term():
    rng = np.random.default_rng(1)
    data = Dataset(rng.uniform(size=(6, 2)), np.zeros(6))
    hyper = _hyper(noise=1e-2)
    value, _ = log_evidence(data, hyper)
    K = condition(data, UNIT2, hyper).chol
    _, logdet = np.linalg.slogdet(2 * np.pi * K @ K.T)
    assert value == pytest.approx(-0.5 * logdet, rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_log_evidence_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    data = _random_data(rng, int(rng.integers(5, 21)))
    theta = np.log(np.r_[rng.uniform(0.2, 1.0, size=2), rng.uniform(0.5, 2.0), 1e-2])
    _, grad = log_evidence(data, GpHyperparams.from_log(theta))

    h = 1e-6
    numeric = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        step = np.zeros_like(theta)
        step[i] = h
        up, _ = log_evidence(data, GpHyperparams.from_log(theta + step))
        down, _ = log_evidence(data, GpHyperparams.from_log(theta - step))
        numeric[i] = (up - down) / (2 * h)
    np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-7)


def test_cholesky_gives_up_after_max_jitter():
    with pytest.raises(GpNumericalError):
        _cholesky(-np.eye(3), 1.0)


def test_fit_recovers_small_noise():
    space = SearchSpace([0.0], [1.0])
    X = np.linspace(0, 1, 12)[:, None]
    y = np.sin(6 * X[:, 0]) + 1e-3 * np.random.default_rng(2).normal(size=12)
    model = fit(Dataset(X, y), space, restarts=3, rng=np.random.default_rng(0))
    assert model.hyper.noise_variance < 1e-2


def test_fit_is_deterministic_under_seed():
    data = _random_data(np.random.default_rng(3), 10)
    first = fit(data, UNIT2, restarts=3, rng=np.random.default_rng(7))
    second = fit(data, UNIT2, restarts=3, rng=np.random.default_rng(7))
    np.testing.assert_array_equal(first.hyper.lengthscales, second.hyper.lengthscales)
    assert first.hyper.signal_variance == second.hyper.signal_variance
    assert first.hyper.noise_variance == second.hyper.noise_variance


def test_more_restarts_never_lower_evidence():
    data = _random_data(np.random.default_rng(4), 15)
    one = fit(data, UNIT2, restarts=1, rng=np.random.default_rng(0))
    ten = fit(data, UNIT2, restarts=10, rng=np.random.default_rng(0))
    assert ten.log_evidence >= one.log_evidence - 1e-9


def test_fit_needs_two_points():
    with pytest.raises(ContractViolation):
        fit(Dataset([[0.5, 0.5]], [1.0]), UNIT2)


def test_prior_prediction():
    mean, variance = predict(prior_model(UNIT2, _hyper(signal=2.5)), np.array([0.1, 0.9]))
    assert mean == 0.0
    assert variance == 2.5


def test_interpolates_at_near_zero_noise():
    rng = np.random.default_rng(5)
    data = _random_data(rng, 6)
    model = condition(data, UNIT2, _hyper(noise=1e-10))
    for x, y in zip(data.inputs, data.targets):
        mean, _ = predict(model, x)
        assert mean == pytest.approx(y, abs=1e-4)


def test_variance_smaller_at_training_inputs_than_far_away():
    space = SearchSpace([0.0, 0.0], [10.0, 10.0])
    for seed in range(20):
        rng = np.random.default_rng(seed)
        data = Dataset(rng.uniform(size=(8, 2)), rng.normal(size=8))
        model = condition(data, space, _hyper(lengthscale=0.05, noise=1e-3))
        _, near = predict(model, data.inputs[0])
        _, far = predict(model, np.array([10.0, 10.0]))
        assert near <= far


def test_variance_is_nonnegative():
    rng = np.random.default_rng(6)
    data = _random_data(rng, 20)
    model = condition(data, UNIT2, _hyper(lengthscale=1.5, noise=1e-8))
    _, variance = predict(model, rng.uniform(size=(1000, 2)))
    assert np.all(variance >= 0.0)


def test_predict_is_invariant_to_row_order():
    rng = np.random.default_rng(8)
    data = _random_data(rng, 12)
    order = rng.permutation(12)
    shuffled = Dataset(data.inputs[order], data.targets[order])
    queries = rng.uniform(size=(50, 2))
    mean, variance = predict(condition(data, UNIT2, _hyper()), queries)
    mean2, variance2 = predict(condition(shuffled, UNIT2, _hyper()), queries)
    np.testing.assert_allclose(mean, mean2, atol=1e-10)
    np.testing.assert_allclose(variance, variance2, atol=1e-10)


def test_predict_rejects_wrong_dimension():
    with pytest.raises(ContractViolation):
        predict(prior_model(UNIT2, _hyper()), np.zeros(3))


def test_standardized_model_predicts_in_original_units():
    space = SearchSpace([-5.0], [10.0])
    X = np.linspace(-5, 10, 8)[:, None]
    y = 100.0 + 20.0 * X[:, 0] / 15.0
    model = fit(Dataset(X, y), space, restarts=2, rng=np.random.default_rng(0))
    means, _ = predict(model, X)
    np.testing.assert_allclose(means, y, atol=1.0)


def test_jitter_is_recorded_for_singular_kernels():
    space = SearchSpace([0.0], [1.0])
    data = Dataset([[0.5], [0.5], [0.5]], [1.0, 1.0, 1.0])
    model = condition(data, space, GpHyperparams([1.0], 1.0, 1e-300))
    assert model.jitter == pytest.approx(1e-8)
    assert condition(data, space, GpHyperparams([1.0], 1.0, 1e-2)).jitter == 0.0


def test_inputs_outside_the_space_are_rejected():
    data = Dataset([[0.2, 0.3], [1.5, 0.5]], [0.0, 1.0])
    with pytest.raises(ContractViolation):
        condition(data, UNIT2, _hyper())
    with pytest.raises(ContractViolation):
        fit(data, UNIT2, restarts=1, rng=np.random.default_rng(0))
