import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nopast.utils.acquisitions import (
    AcquisitionKind,
    AcquisitionSpec,
    Incumbent,
    beta_t,
    ei_gradient,
    ei_utility,
    incumbent,
    lcb_utility,
    nominate,
    pi_gradient,
    pi_utility,
    utility,
)
from nopast.utils.errors import ContractViolation
from nopast.utils.gp import Dataset, GpHyperparams, SearchSpace, condition, predict

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
variances = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)


def test_pi_at_threshold_is_half():
    assert pi_utility(1.0 - 0.01, 1.0, 1.0, 0.01) == pytest.approx(0.5)


def test_pi_matches_normal_cdf():
    assert pi_utility(1.0 - 0.01 - 1.96, 1.0, 1.0, 0.01) == pytest.approx(0.9750021, rel=1e-6)


def test_pi_zero_variance_is_a_step():
    assert pi_utility(2.0, 0.0, 1.0, 0.0) == 0.0
    assert pi_utility(0.0, 0.0, 1.0, 0.0) == 1.0


def test_ei_zero_variance():
    assert ei_utility(-5.0, 0.0, 1.0, 0.01) == 0.0


def test_ei_symmetric_case():
    assert ei_utility(0.0, 1.0, 0.0, 0.0) == pytest.approx(1 / np.sqrt(2 * np.pi), rel=1e-10)


def test_ei_deterministic_improvement_limit():
    assert ei_utility(-3.0, 1e-18, 0.0, 0.0) == pytest.approx(3.0)


def test_utilities_vectorize():
    mean = np.array([0.0, 1.0, 2.0])
    assert ei_utility(mean, np.ones(3), 1.0, 0.0).shape == (3,)
    assert pi_utility(mean, np.zeros(3), 1.0, 0.0).tolist() == [1.0, 0.0, 0.0]


@given(finite, variances, finite, st.floats(min_value=0.0, max_value=10.0))
def test_ei_nonnegative_and_pi_is_a_probability(mean, variance, mu_minus, xi):
    assert ei_utility(mean, variance, mu_minus, xi) >= 0.0
    assert 0.0 <= pi_utility(mean, variance, mu_minus, xi) <= 1.0


@pytest.mark.parametrize("tau", [-3.0, -1.0, -0.1, 0.0])
def test_ei_and_pi_nondecreasing_in_sigma_below_threshold(tau):
    sigmas = np.linspace(1e-3, 5.0, 500)
    mean = -tau
    ei = ei_utility(np.full_like(sigmas, mean), sigmas**2, 0.0, 0.0)
    pi = pi_utility(np.full_like(sigmas, mean), sigmas**2, 0.0, 0.0)
    assert np.all(np.diff(ei) >= -1e-12)
    assert np.all(np.diff(pi) >= -1e-12)


@pytest.mark.parametrize("mean,sigma", [(0.3, 0.7), (-1.0, 2.0), (1.5, 0.4)])
def test_gradients_match_finite_differences(mean, sigma):
    h = 1e-6
    for value_fn, gradient_fn in ((ei_utility, ei_gradient), (pi_utility, pi_gradient)):
        d_mean, d_sigma = gradient_fn(mean, sigma**2, 0.5, 0.01)
        fd_mean = (
            value_fn(mean + h, sigma**2, 0.5, 0.01) - value_fn(mean - h, sigma**2, 0.5, 0.01)
        ) / (2 * h)
        fd_sigma = (
            value_fn(mean, (sigma + h) ** 2, 0.5, 0.01)
            - value_fn(mean, (sigma - h) ** 2, 0.5, 0.01)
        ) / (2 * h)
        assert d_mean == pytest.approx(fd_mean, rel=1e-5)
        assert d_sigma == pytest.approx(fd_sigma, rel=1e-5)


def test_beta_t_value():
    assert beta_t(1, 6, 0.1) == pytest.approx(2 * np.log(np.pi**2 / 0.3), rel=1e-12)
    assert beta_t(1, 6, 0.1) == pytest.approx(6.9867, abs=1e-4)


@pytest.mark.parametrize("dim,delta", [(1, 0.5), (2, 0.1), (6, 0.01)])
def test_beta_t_increases(dim, delta):
    betas = [beta_t(t, dim, delta) for t in range(1, 101)]
    assert all(b2 > b1 for b1, b2 in zip(betas, betas[1:]))


def test_beta_t_vanishes_at_first_iteration():
    assert beta_t(1, 4, np.pi**2 / 3) == pytest.approx(0.0, abs=1e-12)


def test_lcb_values():
    assert lcb_utility(1.5, 0.0, 1, 6, 0.2, 0.1) == -1.5
    assert lcb_utility(0.0, 1.0, 1, 6, 0.2, 0.1) == pytest.approx(1.1821, abs=1e-4)
    values = lcb_utility(np.array([0.0, 0.0]), np.array([0.5, 2.0]), 3, 2, 0.2, 0.1)
    assert np.argmax(values) == 1


def test_lcb_argmax_invariant_to_mean_shift():
    rng = np.random.default_rng(0)
    mean, variance = rng.normal(size=50), rng.uniform(size=50)
    base = lcb_utility(mean, variance, 4, 3, 0.2, 0.1)
    shifted = lcb_utility(mean + 17.0, variance, 4, 3, 0.2, 0.1)
    assert np.argmax(base) == np.argmax(shifted)


def test_spec_validation_and_labels():
    with pytest.raises(ContractViolation):
        AcquisitionSpec(AcquisitionKind.EI, xi=-0.1)
    with pytest.raises(ContractViolation):
        AcquisitionSpec(AcquisitionKind.LCB, delta=1.0)
    assert AcquisitionSpec(AcquisitionKind.EI).label == "ei_xi0.01"
    assert AcquisitionSpec(AcquisitionKind.LCB).label == "lcb_nu0.2_delta0.1"


def _quadratic_model():
    space = SearchSpace([-2.0], [2.0])
    X = np.linspace(-2, 2, 7)[:, None]
    data = Dataset(X, X[:, 0] ** 2)
    hyper = GpHyperparams([0.3], 1.0, 1e-6)
    return space, condition(data, space, hyper, standardize=True)


def test_incumbent_uses_posterior_means():
    space, model = _quadratic_model()
    inc = incumbent(model)
    means, _ = predict(model, model.data.inputs)
    assert inc.best_posterior_mean == np.min(means)
    assert inc.best_observed == 0.0
    np.testing.assert_array_equal(inc.best_point, [0.0])


def test_nominate_matches_dense_grid_for_lcb():
    space, model = _quadratic_model()
    spec = AcquisitionSpec(AcquisitionKind.LCB, nu=0.2, delta=0.1)
    inc = incumbent(model)
    grid = np.linspace(-2, 2, 10_000)[:, None]
    mean, variance = predict(model, grid)
    grid_max = np.max(utility(spec, mean, variance, 5, 1, inc))

    x = nominate(model, spec, space, 5, inc, rng=np.random.default_rng(0))
    m, v = predict(model, x)
    assert utility(spec, m, v, 5, 1, inc) >= grid_max - 1e-3


def test_nominate_on_flat_utility_stays_in_bounds():
    space, model = _quadratic_model()
    flat = Incumbent(best_posterior_mean=-1e9, best_point=np.zeros(1), best_observed=0.0)
    x = nominate(model, AcquisitionSpec(AcquisitionKind.EI), space, 1, flat, rng=np.random.default_rng(1))
    assert space.contains(x)


def test_nominees_always_in_bounds():
    rng = np.random.default_rng(2)
    specs = [
        AcquisitionSpec(AcquisitionKind.PI),
        AcquisitionSpec(AcquisitionKind.EI),
        AcquisitionSpec(AcquisitionKind.LCB),
    ]
    for i in range(1000):
        space = SearchSpace([-1.0 - rng.uniform()], [1.0 + rng.uniform()])
        X = rng.uniform(space.lower[0], space.upper[0], size=(5, 1))
        model = condition(
            Dataset(X, rng.normal(size=5)),
            space,
            GpHyperparams([rng.uniform(0.05, 1.0)], 1.0, 1e-4),
            standardize=True,
        )
        x = nominate(
            model, specs[i % 3], space, i + 1, incumbent(model), budget=612, rng=rng
        )
        assert space.contains(x)


def test_nominate_rejects_empty_budget():
    space, model = _quadratic_model()
    with pytest.raises(ContractViolation):
        nominate(model, AcquisitionSpec(AcquisitionKind.EI), space, 1, incumbent(model), budget=0)
