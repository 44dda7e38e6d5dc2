import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import softmax

from nopast.utils.acquisitions import (
    AcquisitionKind,
    AcquisitionSpec,
    Incumbent,
    nominate,
)
from nopast.utils.data import SelectionTrace, Strategy
from nopast.utils.errors import ContractViolation
from nopast.utils.gp import GpModel, SearchSpace, predict

HEDGE_ETA = 1.0
NO_PAST_ETA = 4.0
MEMORY = 0.7
HEDGING = (Strategy.GP_HEDGE, Strategy.NO_PAST_BO)


def portfolio_specs(size: int) -> List[AcquisitionSpec]:
    """The 3-function portfolio, or the 9-function one that widens its xi / nu."""
    base = [
        AcquisitionSpec(AcquisitionKind.PI, xi=0.01),
        AcquisitionSpec(AcquisitionKind.EI, xi=0.01),
        AcquisitionSpec(AcquisitionKind.LCB, nu=0.2, delta=0.1),
    ]
    if size == 3:
        return base
    if size == 9:
        return base + [
            AcquisitionSpec(AcquisitionKind.PI, xi=0.1),
            AcquisitionSpec(AcquisitionKind.PI, xi=1.0),
            AcquisitionSpec(AcquisitionKind.EI, xi=0.1),
            AcquisitionSpec(AcquisitionKind.EI, xi=1.0),
            AcquisitionSpec(AcquisitionKind.LCB, nu=0.1, delta=0.1),
            AcquisitionSpec(AcquisitionKind.LCB, nu=1.0, delta=0.1),
        ]
    raise ContractViolation(f"No portfolio of size {size}, choose 3 or 9")


@dataclass
class PortfolioState:
    strategy: Strategy
    specs: List[AcquisitionSpec]
    eta: Optional[float] = None
    memory: float = MEMORY
    # No-PASt-BO only; False keeps the memory factor but feeds raw G to the softmax
    normalize: bool = True
    rewards: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.eta is None:
            self.eta = NO_PAST_ETA if self.strategy == Strategy.NO_PAST_BO else HEDGE_ETA
        if self.eta <= 0:
            raise ContractViolation(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.memory <= 1.0:
            raise ContractViolation(f"memory must lie in [0, 1], got {self.memory}")
        if self.strategy in HEDGING and len(self.specs) < 2:
            raise ContractViolation(f"{self.strategy.value} needs at least 2 acquisitions")
        if self.strategy == Strategy.SINGLE and len(self.specs) != 1:
            raise ContractViolation("single-acquisition BO takes exactly one acquisition")
        if not self.specs:
            raise ContractViolation("Portfolio has no acquisitions")
        if self.rewards is None:
            self.rewards = np.zeros(len(self.specs))

    @property
    def size(self) -> int:
        return len(self.specs)


def normalize_rewards(rewards: np.ndarray) -> np.ndarray:
    """Affine map of G onto [-1, 0]; all zeros (uniform downstream) when G is tied."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape[0] < 2:
        raise ContractViolation("Normalization needs at least 2 rewards")
    r_max, r_min = rewards.max(), rewards.min()
    if r_max == r_min:
        return np.zeros_like(rewards)
    return (rewards - r_max) / (r_max - r_min)


def selection_probabilities(scores: np.ndarray, eta: float) -> np.ndarray:
    if eta <= 0:
        raise ContractViolation(f"eta must be positive, got {eta}")
    p = softmax(eta * np.asarray(scores, dtype=float))
    return p / p.sum()


def select_nominee(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; the lowest index wins ties."""
    p = np.asarray(p, dtype=float)
    cumulative = np.cumsum(p)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    if index >= len(p):
        # rounding can put the draw on the total; never land on a zero-probability tail
        index = int(np.flatnonzero(p)[-1])
    return index


def update_rewards(state: PortfolioState, posterior_means: np.ndarray) -> np.ndarray:
    """G_j <- m G_j - mu(x_j(t)) for No-PASt-BO, m = 1 for GP-Hedge."""
    posterior_means = np.asarray(posterior_means, dtype=float)
    if posterior_means.shape != state.rewards.shape:
        raise ContractViolation(
            f"Expected {state.size} posterior means, got {posterior_means.shape}"
        )
    if state.strategy == Strategy.NO_PAST_BO:
        return state.memory * state.rewards - posterior_means
    if state.strategy == Strategy.GP_HEDGE:
        return state.rewards - posterior_means
    return state.rewards.copy()


def choice_scores(state: PortfolioState) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Scores fed to the softmax and, for No-PASt-BO, the normalized rewards."""
    if state.strategy == Strategy.NO_PAST_BO and state.normalize:
        normalized = normalize_rewards(state.rewards)
        return normalized, normalized
    if state.strategy in HEDGING:
        return state.rewards.copy(), None
    return np.zeros(state.size), None


def step(
    state: PortfolioState,
    model: GpModel,
    space: SearchSpace,
    t: int,
    incumbent: Incumbent,
    rng: np.random.Generator,
    acq_rng: Optional[np.random.Generator] = None,
    budget: Optional[int] = None,
) -> Tuple[np.ndarray, SelectionTrace, Callable[[GpModel], np.ndarray]]:
    """One portfolio iteration on a model fitted to D_{t-1}.

    Returns the chosen point, its trace, and a callback that must be given the
    model refitted with the new observation; it applies the reward update.
    """
    acq_rng = rng if acq_rng is None else acq_rng
    nominees = np.array(
        [nominate(model, spec, space, t, incumbent, budget, acq_rng) for spec in state.specs]
    )

    scores, normalized = choice_scores(state)
    if state.strategy in HEDGING:
        p = selection_probabilities(scores, state.eta)
    else:
        p = np.full(state.size, 1.0 / state.size)
    chosen = select_nominee(p, rng)
    logging.debug(
        f"t={t} p={np.round(p, 4).tolist()} chose {state.specs[chosen].label}"
    )

    trace = SelectionTrace(
        iteration=t,
        probabilities=p.tolist(),
        chosen=chosen,
        nominees=nominees.tolist(),
        normalized_rewards=None if normalized is None else normalized.tolist(),
    )

    def complete(updated_model: GpModel) -> np.ndarray:
        means, _ = predict(updated_model, nominees)
        state.rewards = update_rewards(state, means)
        trace.rewards = state.rewards.tolist()
        return state.rewards

    return nominees[chosen].copy(), trace, complete
