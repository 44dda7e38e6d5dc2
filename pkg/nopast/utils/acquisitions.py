from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from dataclasses_json import dataclass_json
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from nopast.utils.errors import ContractViolation
from nopast.utils.gp import GpModel, SearchSpace, predict

PROBES_PER_DIM = 512
LOCAL_STARTS = 5
MIN_LOCAL_EVALS = 10


class AcquisitionKind(Enum):
    PI = "pi"
    EI = "ei"
    LCB = "lcb"


@dataclass_json
@dataclass(frozen=True)
class AcquisitionSpec:
    kind: AcquisitionKind
    xi: float = 0.01
    nu: float = 0.2
    delta: float = 0.1

    def __post_init__(self):
        if self.xi < 0:
            raise ContractViolation(f"xi must be >= 0, got {self.xi}")
        if self.nu <= 0:
            raise ContractViolation(f"nu must be > 0, got {self.nu}")
        if not 0 < self.delta < 1:
            raise ContractViolation(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def label(self) -> str:
        if self.kind == AcquisitionKind.LCB:
            return f"lcb_nu{self.nu:g}_delta{self.delta:g}"
        return f"{self.kind.value}_xi{self.xi:g}"


@dataclass(frozen=True)
class Incumbent:
    best_posterior_mean: float
    best_point: np.ndarray
    best_observed: float


def incumbent(model: GpModel) -> Incumbent:
    """mu- over the evaluated inputs under `model`, plus the best observation x+."""
    if len(model.data) == 0:
        raise ContractViolation("No evaluated points to take an incumbent from")
    means, _ = predict(model, model.data.inputs)
    best = int(np.argmin(model.data.targets))
    return Incumbent(
        best_posterior_mean=float(np.min(means)),
        best_point=model.data.inputs[best].copy(),
        best_observed=float(model.data.targets[best]),
    )


def _sigma(variance) -> np.ndarray:
    return np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))


def pi_utility(mean, variance, mu_minus: float, xi: float):
    mean = np.asarray(mean, dtype=float)
    sigma = _sigma(variance)
    tau = mu_minus - xi - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(sigma > 0, norm.cdf(tau / sigma), (tau > 0).astype(float))
    return value[()]


def ei_utility(mean, variance, mu_minus: float, xi: float):
    mean = np.asarray(mean, dtype=float)
    sigma = _sigma(variance)
    tau = mu_minus - xi - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = tau / sigma
        value = np.where(sigma > 0, tau * norm.cdf(z) + sigma * norm.pdf(z), 0.0)
    return np.maximum(value, 0.0)[()]


def pi_gradient(mean, variance, mu_minus: float, xi: float) -> Tuple:
    """d PI / d mean and d PI / d sigma, defined for sigma > 0."""
    sigma = _sigma(variance)
    z = (mu_minus - xi - np.asarray(mean, dtype=float)) / sigma
    pdf = norm.pdf(z)
    return (-pdf / sigma)[()], (-pdf * z / sigma)[()]


def ei_gradient(mean, variance, mu_minus: float, xi: float) -> Tuple:
    """d EI / d mean and d EI / d sigma, defined for sigma > 0."""
    sigma = _sigma(variance)
    z = (mu_minus - xi - np.asarray(mean, dtype=float)) / sigma
    return (-norm.cdf(z))[()], norm.pdf(z)[()]


def beta_t(t: int, dim: int, delta: float) -> float:
    """2 log(t^(D/2 + 2) pi^2 / (3 delta)), evaluated in log space."""
    if t < 1 or delta <= 0:
        raise ContractViolation(f"Need t >= 1 and delta > 0, got t={t}, delta={delta}")
    return 2.0 * ((dim / 2.0 + 2.0) * np.log(t) + np.log(np.pi**2 / (3.0 * delta)))


def lcb_utility(mean, variance, t: int, dim: int, nu: float, delta: float):
    """kappa sigma - mean, so that maximizing it minimizes mean - kappa sigma."""
    kappa = np.sqrt(nu * max(beta_t(t, dim, delta), 0.0))
    return (kappa * _sigma(variance) - np.asarray(mean, dtype=float))[()]


def utility(
    spec: AcquisitionSpec, mean, variance, t: int, dim: int, incumbent: Incumbent
):
    if spec.kind == AcquisitionKind.PI:
        return pi_utility(mean, variance, incumbent.best_posterior_mean, spec.xi)
    if spec.kind == AcquisitionKind.EI:
        return ei_utility(mean, variance, incumbent.best_posterior_mean, spec.xi)
    return lcb_utility(mean, variance, t, dim, spec.nu, spec.delta)


def default_budget(dim: int) -> int:
    return 2 * PROBES_PER_DIM * dim


def nominate(
    model: GpModel,
    spec: AcquisitionSpec,
    space: SearchSpace,
    t: int,
    incumbent: Incumbent,
    budget: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """argmax of the acquisition over the box.

    Scrambled Halton probes first, then bounded L-BFGS-B from the best
    `LOCAL_STARTS` probes with whatever is left of `budget` utility evaluations.
    """
    budget = default_budget(space.dim) if budget is None else budget
    if budget < 1:
        raise ContractViolation(f"budget must be >= 1, got {budget}")

    def acquisition(X: np.ndarray) -> np.ndarray:
        mean, variance = predict(model, X)
        return np.atleast_1d(utility(spec, mean, variance, t, space.dim, incumbent))

    n_probes = min(PROBES_PER_DIM * space.dim, budget)
    sampler = qmc.Halton(d=space.dim, scramble=True, seed=rng)
    probes = qmc.scale(sampler.random(n_probes), space.lower, space.upper)
    values = acquisition(probes)
    order = np.argsort(-values, kind="stable")
    best_x, best_value = probes[order[0]], values[order[0]]

    starts = order[:LOCAL_STARTS]
    per_start = (budget - n_probes) // len(starts)
    if per_start >= MIN_LOCAL_EVALS:
        for idx in starts:
            result = minimize(
                lambda x: -acquisition(x[None, :])[0],
                probes[idx],
                method="L-BFGS-B",
                bounds=space.bounds,
                options={"maxfun": per_start},
            )
            x = space.clip(result.x)
            value = acquisition(x[None, :])[0]
            if value > best_value:
                best_x, best_value = x, value

    assert best_value >= values.max()
    return space.clip(best_x)
