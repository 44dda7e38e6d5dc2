import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from nopast.utils.errors import ContractViolation, GpFitError, GpNumericalError

SQRT5 = np.sqrt(5.0)
LOG_2PI = np.log(2.0 * np.pi)

DEFAULT_RESTARTS = 5
DEFAULT_LENGTHSCALE = 0.5
DEFAULT_NOISE = 1e-3
# Hyperparameters live in unit-cube inputs / standardized targets.
LENGTHSCALE_BOUNDS = (1e-2, 1e2)
SIGNAL_BOUNDS = (1e-2, 1e2)
NOISE_BOUNDS = (1e-8, 1.0)
NOISE_RESTART_RANGE = (1e-6, 1e-1)
# Jitter is a multiple of the signal variance: 1e-8, 1e-7, ..., 1e-2.
JITTER_EXPONENTS = range(-8, -1)
MAX_ITER = 200
FAILED_FIT_PENALTY = 1e25


@dataclass_json
@dataclass
class SearchSpace:
    lower: List[float]
    upper: List[float]

    def __post_init__(self):
        self.lower = [float(v) for v in self.lower]
        self.upper = [float(v) for v in self.upper]
        if len(self.lower) == 0 or len(self.lower) != len(self.upper):
            raise ContractViolation(
                f"Bounds must be nonempty and of equal length, got {self.lower} / {self.upper}"
            )
        if any(lo >= up for lo, up in zip(self.lower, self.upper)):
            raise ContractViolation(f"Need lower < upper, got {self.lower} / {self.upper}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def bounds(self) -> np.ndarray:
        return np.column_stack([self.lower, self.upper])

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= np.asarray(self.lower)) and np.all(x <= np.asarray(self.upper))
        )

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def to_unit(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - np.asarray(self.lower)) / self.width

    def from_unit(self, U: np.ndarray) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(U, dtype=float) * self.width


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ContractViolation(
                f"{self.inputs.shape[0]} inputs but {self.targets.shape[0]} targets"
            )

    @classmethod
    def empty(cls, dim: int) -> "Dataset":
        return cls(np.empty((0, dim)), np.empty(0))

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def augment(self, x: np.ndarray, y: float) -> "Dataset":
        return Dataset(
            np.vstack([self.inputs, np.asarray(x, dtype=float).reshape(1, -1)]),
            np.append(self.targets, float(y)),
        )

    def inside(self, space: SearchSpace) -> bool:
        return all(space.contains(row) for row in self.inputs)


@dataclass(frozen=True)
class GpHyperparams:
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscales", np.asarray(self.lengthscales, dtype=float).reshape(-1)
        )
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if (
            np.any(self.lengthscales <= 0)
            or self.signal_variance <= 0
            or self.noise_variance <= 0
        ):
            raise ContractViolation(f"Hyperparameters must be positive, got {self}")

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]

    def to_log(self) -> np.ndarray:
        return np.log(
            np.r_[self.lengthscales, self.signal_variance, self.noise_variance]
        )

    @classmethod
    def from_log(cls, theta: np.ndarray) -> "GpHyperparams":
        values = np.exp(np.asarray(theta, dtype=float))
        return cls(values[:-2], values[-2], values[-1])


@dataclass(frozen=True)
class GpModel:
    """Posterior of a zero-mean GP conditioned on `data`.

    Inputs are mapped to the unit cube of `space` and targets standardized
    with (`y_mean`, `y_scale`) before conditioning; `hyper` refers to those
    transformed coordinates. `predict` returns values in the original units.
    """

    space: SearchSpace
    data: Dataset
    hyper: GpHyperparams
    unit_inputs: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0
    jitter: float = 0.0
    log_evidence: float = field(default=float("nan"))


def _check_dim(X: np.ndarray, hyper: GpHyperparams):
    if X.shape[-1] != hyper.dim:
        raise ContractViolation(
            f"Point of dimension {X.shape[-1]} but {hyper.dim} lengthscales"
        )


def kernel_matrix(X1: np.ndarray, X2: np.ndarray, hyper: GpHyperparams) -> np.ndarray:
    """Matern 5/2 ARD covariance between the rows of X1 and X2."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    _check_dim(X1, hyper)
    _check_dim(X2, hyper)
    if X1.shape[0] == 0 or X2.shape[0] == 0:
        return np.empty((X1.shape[0], X2.shape[0]))
    r2 = cdist(X1 / hyper.lengthscales, X2 / hyper.lengthscales, "sqeuclidean")
    r = np.sqrt(r2)
    return hyper.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * np.exp(-SQRT5 * r)


def kernel_eval(x: np.ndarray, x2: np.ndarray, hyper: GpHyperparams) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.ndim != 1 or x2.ndim != 1:
        raise ContractViolation("kernel_eval takes two single points")
    return float(kernel_matrix(x, x2, hyper)[0, 0])


def _cholesky(K: np.ndarray, signal_variance: float) -> Tuple[np.ndarray, float]:
    try:
        return cholesky(K, lower=True), 0.0
    except LinAlgError:
        pass

    eye = np.eye(K.shape[0])
    for exponent in JITTER_EXPONENTS:
        jitter = 10.0**exponent * signal_variance
        try:
            chol = cholesky(K + jitter * eye, lower=True)
            logging.debug(f"Cholesky needed jitter {jitter:.3g}")
            return chol, jitter
        except LinAlgError:
            continue

    raise GpNumericalError(
        f"Kernel matrix of size {K.shape[0]} is not positive definite even with jitter "
        f"{10.0 ** JITTER_EXPONENTS[-1] * signal_variance:.3g}"
    )


def _noisy_kernel(X: np.ndarray, hyper: GpHyperparams) -> np.ndarray:
    K = kernel_matrix(X, X, hyper)
    K[np.diag_indices_from(K)] += hyper.noise_variance
    return K


def log_evidence(data: Dataset, hyper: GpHyperparams) -> Tuple[float, np.ndarray]:
    """Log marginal likelihood log N(y | 0, K_f + noise I).

    Returns the value and its gradient w.r.t. `hyper.to_log()`, i.e. the log
    lengthscales followed by log signal variance and log noise variance.
    """
    X, y = data.inputs, data.targets
    n = len(data)
    if n == 0:
        raise ContractViolation("log_evidence needs at least one observation")
    _check_dim(X, hyper)

    Kf = kernel_matrix(X, X, hyper)
    K = Kf.copy()
    K[np.diag_indices_from(K)] += hyper.noise_variance
    chol, _ = _cholesky(K, hyper.signal_variance)
    alpha = cho_solve((chol, True), y)

    value = -0.5 * y @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * LOG_2PI

    W = np.outer(alpha, alpha) - cho_solve((chol, True), np.eye(n))
    scaled2 = (X[:, None, :] - X[None, :, :]) ** 2 / hyper.lengthscales**2
    r = np.sqrt(np.sum(scaled2, axis=-1))
    # dk/dlog(l_d) = 5/3 s (1 + sqrt5 r) exp(-sqrt5 r) (x_d - x'_d)^2 / l_d^2
    common = 5.0 / 3.0 * hyper.signal_variance * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    grad_lengthscales = 0.5 * np.einsum("ij,ijd->d", W * common, scaled2)
    grad_signal = 0.5 * np.sum(W * Kf)
    grad_noise = 0.5 * hyper.noise_variance * np.trace(W)

    return float(value), np.r_[grad_lengthscales, grad_signal, grad_noise]


def _check_data(data: Dataset, space: SearchSpace):
    if data.dim != space.dim:
        raise ContractViolation(f"Data of dimension {data.dim} for a {space.dim}-D space")
    if not data.inside(space):
        raise ContractViolation("Observed inputs fall outside the search space")


def condition(
    data: Dataset,
    space: SearchSpace,
    hyper: GpHyperparams,
    standardize: bool = False,
) -> GpModel:
    """Builds the posterior for fixed hyperparameters, caching the factorization."""
    _check_data(data, space)
    y_mean, y_scale = 0.0, 1.0
    if standardize and len(data) > 0:
        y_mean = float(np.mean(data.targets))
        y_scale = float(np.std(data.targets)) or 1.0

    unit_inputs = space.to_unit(data.inputs)
    targets = (data.targets - y_mean) / y_scale
    if len(data) == 0:
        return GpModel(
            space, data, hyper, unit_inputs, np.empty((0, 0)), np.empty(0), y_mean, y_scale
        )

    chol, jitter = _cholesky(_noisy_kernel(unit_inputs, hyper), hyper.signal_variance)
    alpha = cho_solve((chol, True), targets)
    evidence = (
        -0.5 * targets @ alpha
        - np.sum(np.log(np.diag(chol)))
        - 0.5 * len(data) * LOG_2PI
    )
    return GpModel(
        space,
        data,
        hyper,
        unit_inputs,
        chol,
        alpha,
        y_mean,
        y_scale,
        jitter,
        float(evidence),
    )


def prior_model(space: SearchSpace, hyper: GpHyperparams) -> GpModel:
    return condition(Dataset.empty(space.dim), space, hyper)


def _log_bounds(dim: int) -> List[Tuple[float, float]]:
    return [tuple(np.log(LENGTHSCALE_BOUNDS))] * dim + [
        tuple(np.log(SIGNAL_BOUNDS)),
        tuple(np.log(NOISE_BOUNDS)),
    ]


def _starting_points(
    dim: int, restarts: int, rng: np.random.Generator, initial: Optional[GpHyperparams]
) -> List[np.ndarray]:
    if initial is not None:
        first = np.clip(initial.to_log(), *np.array(_log_bounds(dim)).T)
    else:
        first = np.log(np.r_[np.full(dim, DEFAULT_LENGTHSCALE), 1.0, DEFAULT_NOISE])
    starts = [first]
    for _ in range(restarts - 1):
        starts.append(
            np.r_[
                rng.uniform(*np.log(LENGTHSCALE_BOUNDS), size=dim),
                rng.uniform(*np.log(SIGNAL_BOUNDS)),
                rng.uniform(*np.log(NOISE_RESTART_RANGE)),
            ]
        )
    return starts


def _negative_evidence(theta: np.ndarray, data: Dataset) -> Tuple[float, np.ndarray]:
    try:
        value, grad = log_evidence(data, GpHyperparams.from_log(theta))
    except GpNumericalError:
        return FAILED_FIT_PENALTY, np.zeros_like(theta)
    return -value, -grad


def fit(
    data: Dataset,
    space: SearchSpace,
    restarts: int = DEFAULT_RESTARTS,
    rng: Optional[np.random.Generator] = None,
    initial: Optional[GpHyperparams] = None,
) -> GpModel:
    """Type-II maximum likelihood fit with multiple restarts.

    The first restart starts from `initial` (the previous fit, when refitting
    inside a BO loop) or from fixed defaults; the others are drawn
    log-uniformly from the hyperparameter box using `rng`.
    """
    if len(data) < 2:
        raise ContractViolation(f"fit needs at least 2 observations, got {len(data)}")
    if restarts < 1:
        raise ContractViolation(f"restarts must be >= 1, got {restarts}")
    _check_data(data, space)
    rng = rng if rng is not None else np.random.default_rng()

    y_mean = float(np.mean(data.targets))
    y_scale = float(np.std(data.targets)) or 1.0
    unit = Dataset(space.to_unit(data.inputs), (data.targets - y_mean) / y_scale)

    best_theta, best_value = None, -np.inf
    tried = []
    for theta0 in _starting_points(space.dim, restarts, rng, initial):
        result = minimize(
            _negative_evidence,
            theta0,
            args=(unit,),
            jac=True,
            method="L-BFGS-B",
            bounds=_log_bounds(space.dim),
            options={"maxiter": MAX_ITER},
        )
        tried.append(np.exp(result.x))
        try:
            value, _ = log_evidence(unit, GpHyperparams.from_log(result.x))
        except GpNumericalError as ex:
            logging.warning(f"GP restart failed at {np.exp(result.x)}: {ex}")
            continue
        if np.isfinite(value) and value > best_value:
            best_theta, best_value = result.x, value

    if best_theta is None:
        raise GpFitError(
            f"All {restarts} GP restarts failed to factorize, tried hyperparameters: {tried}"
        )

    hyper = GpHyperparams.from_log(best_theta)
    logging.debug(
        f"Fitted GP on {len(data)} points: lengthscales={hyper.lengthscales}, "
        f"signal={hyper.signal_variance:.4g}, noise={hyper.noise_variance:.3g}, "
        f"log evidence={best_value:.4f}"
    )
    model = condition(data, space, hyper, standardize=True)
    if model.jitter > 0:
        logging.debug(f"Fitted GP needed jitter {model.jitter:.3g} on {len(data)} points")
    return model


def predict(model: GpModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and (clamped) variance of the latent function.

    Accepts a single point, giving scalars, or an M x D batch, giving vectors.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.space.dim:
        raise ContractViolation(
            f"Query of dimension {X.shape[1]} for a {model.space.dim}-D model"
        )

    U = model.space.to_unit(X)
    prior = model.hyper.signal_variance
    if len(model.data) == 0:
        mean = np.zeros(X.shape[0])
        variance = np.full(X.shape[0], prior)
    else:
        Ks = kernel_matrix(U, model.unit_inputs, model.hyper)
        mean = Ks @ model.alpha
        v = solve_triangular(model.chol, Ks.T, lower=True)
        variance = prior - np.sum(v**2, axis=0)

    mean = model.y_mean + model.y_scale * mean
    variance = np.maximum(variance, 0.0) * model.y_scale**2
    if single:
        return float(mean[0]), float(variance[0])
    return mean, variance
