"""Virtual-exemplar solver: alternating closed-form updates of the
membership matrix mu (n x K, row-stochastic) and the exemplar set D (K x d).

Two objective variants share the solver. The "early" form scores diversity
and ambiguity through entropies; the "surrogate" form replaces both with
squared deviations from their ideal values (uniform column mass 1/K,
class probability 1/2). An entropic regularizer gamma * sum mu log mu is
always present: it is what makes both updates closed-form. The rep/div/amb
terms can be gated off individually for ablations.

Update formulas are implemented exactly as stated, including constants and
signs; the objective trajectory is recorded per iteration so their behaviour
stays observable rather than assumed.
"""

import csv
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import classifier as clf
from .errors import ContractViolationError, NumericalError

VARIANT_EARLY = "early"
VARIANT_SURROGATE = "surrogate"
VARIANTS = (VARIANT_EARLY, VARIANT_SURROGATE)

GAMMA_FLOOR = 1e-12
MASS_FLOOR_SCALE = 1e-8

_ROW_SUM_TOL = 1e-9


@dataclass
class OptimizerConfig:
    variant: str
    K: int
    alpha: Optional[float] = None
    beta: Optional[float] = None
    rho: float = 1.0
    gate_rep: int = 1
    gate_div: int = 1
    gate_amb: int = 1
    epsilon: float = 1e-3
    max_iterations: int = 100
    seed: int = 0
    trajectory_path: Optional[str] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        # Both trade-off weights default to 1/K, shrinking with the number
        # of matrix entries they weigh against.
        if self.alpha is None:
            self.alpha = 1.0 / self.K
        if self.beta is None:
            self.beta = 1.0 / self.K
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        for g in (self.gate_rep, self.gate_div, self.gate_amb):
            if g not in (0, 1):
                raise ValueError("gates must be 0 or 1")


@dataclass
class TrajectoryPoint:
    iteration: int
    objective: float
    step_l1: float
    gamma: float
    mass_floor_hits: int = 0


@dataclass
class SolveResult:
    mu: np.ndarray
    exemplars: np.ndarray
    iterations_used: int
    trajectory: List[TrajectoryPoint] = field(default_factory=list)
    converged: bool = False


def _require_row_stochastic(mu: np.ndarray, where: str):
    if mu.ndim != 2:
        raise ContractViolationError(f"{where}: mu must be a 2-d matrix")
    if np.any(mu < -_ROW_SUM_TOL):
        raise ContractViolationError(f"{where}: mu has negative entries")
    rows = mu.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > _ROW_SUM_TOL):
        raise ContractViolationError(f"{where}: mu rows must sum to 1")


def squared_distance_matrix(X, D) -> np.ndarray:
    """Entry (i, k) = squared Euclidean distance between X_i and D_k."""
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if X.ndim != 2 or D.ndim != 2 or X.shape[1] != D.shape[1]:
        raise ValueError("X and D must be 2-d with matching feature length")
    diff = X[:, None, :] - D[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def gamma_policy(bracket, rho: float) -> float:
    """Entropy temperature for the membership step: rho times the mean
    absolute bracket entry, floored so the exponent stays defined."""
    bracket = np.asarray(bracket, dtype=np.float64)
    return max(rho * float(np.mean(np.abs(bracket))), GAMMA_FLOOR)


def membership_bracket(X, D, mu_prev, model, config: OptimizerConfig) -> np.ndarray:
    """The n x K matrix inside the membership update's exponential."""
    n = np.asarray(X).shape[0]
    bracket = np.zeros((n, config.K))
    if config.gate_rep:
        bracket = bracket + squared_distance_matrix(X, D)
    if config.gate_div:
        m_prev = np.asarray(mu_prev, dtype=np.float64).sum(axis=0) / n
        with np.errstate(divide="ignore"):
            if config.variant == VARIANT_EARLY:
                rowvec = 1.0 + np.log(m_prev)
            else:
                rowvec = m_prev - 1.0 / config.K
        bracket = bracket + (config.alpha / n) * rowvec[None, :]
    if not np.all(np.isfinite(bracket)):
        bad = int(np.sum(~np.isfinite(bracket)))
        raise NumericalError(
            f"membership bracket has {bad} non-finite entries "
            "(empty exemplar column mass under the diversity term?)")
    return bracket


def _membership_from_bracket(bracket: np.ndarray, gamma: float) -> np.ndarray:
    # Subtracting the row minimum before exponentiating changes nothing
    # after normalization but avoids exp underflow of an entire row.
    shifted = bracket - bracket.min(axis=1, keepdims=True)
    mu_hat = np.exp(-shifted / gamma)
    return mu_hat / mu_hat.sum(axis=1, keepdims=True)


def membership_update(X, D, mu_prev, model, config: OptimizerConfig) -> np.ndarray:
    """One closed-form mu step: exponentiate the negative bracket at the
    policy temperature, then renormalize each row onto the simplex."""
    mu_prev = np.asarray(mu_prev, dtype=np.float64)
    _require_row_stochastic(mu_prev, "membership_update")
    bracket = membership_bracket(X, D, mu_prev, model, config)
    gamma = gamma_policy(bracket, config.rho)
    return _membership_from_bracket(bracket, gamma)


def mass_floor(n: int, K: int) -> float:
    return MASS_FLOOR_SCALE * n / K


def exemplar_update(X, mu, D_prev, model, config: OptimizerConfig) -> np.ndarray:
    """One closed-form D step.

    Numerator rows: gate_rep * (mu^T X)_k plus the gated ambiguity
    correction built from the classifier's probability gradients at the
    previous exemplars; each row is then divided by its column mass
    (1^T mu)_k. A column whose mass falls under the floor keeps its
    previous exemplar instead of dividing by almost zero.
    """
    X = np.asarray(X, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    D_prev = np.asarray(D_prev, dtype=np.float64)
    _require_row_stochastic(mu, "exemplar_update")
    n = X.shape[0]

    d_hat = np.zeros_like(D_prev)
    if config.gate_rep:
        d_hat = d_hat + mu.T @ X
    if config.gate_amb and config.beta > 0:
        F = clf.scoring_matrix(model, D_prev)  # 2 x K, clamped
        p = F[0]
        grad1 = (p * (1.0 - p))[:, None] * model.weights[None, :]  # K x d
        for c, grad in ((1, grad1), (2, -grad1)):
            fc = F[c - 1]
            if config.variant == VARIANT_EARLY:
                factor = np.log(fc) + 1.0
            else:
                factor = fc - 0.5
            d_hat = d_hat + config.beta * grad * factor[:, None]

    masses = mu.sum(axis=0)
    floor = mass_floor(n, config.K)
    starved = masses < floor
    safe = np.where(starved, 1.0, masses)
    D_new = d_hat / safe[:, None]
    if np.any(starved):
        D_new[starved] = D_prev[starved]
    return D_new


def _entropy_like(values: np.ndarray) -> float:
    # sum v*log(v) with the 0*log(0) = 0 convention.
    v = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(v)
    nz = v > 0.0
    out[nz] = v[nz] * np.log(v[nz])
    return float(out.sum())


def objective(X, mu, D, model, config: OptimizerConfig,
              gamma: Optional[float] = None) -> float:
    """Value of the gated objective at (mu, D).

    The entropic regularizer is always included. When ``gamma`` is not
    given it is taken from `gamma_policy` on the membership bracket at
    (mu, D), the same temperature a membership step from this point
    would use.
    """
    X = np.asarray(X, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    _require_row_stochastic(mu, "objective")
    n = X.shape[0]

    total = 0.0
    if config.gate_rep:
        total += float(np.sum(mu * squared_distance_matrix(X, D)))
    if config.gate_div:
        m = mu.sum(axis=0) / n
        if config.variant == VARIANT_EARLY:
            total += config.alpha * _entropy_like(m)
        else:
            total += (config.alpha / 2.0) * float(np.sum((m - 1.0 / config.K) ** 2))
    if config.gate_amb:
        F = clf.scoring_matrix(model, D)
        if config.variant == VARIANT_EARLY:
            total += config.beta * _entropy_like(F)
        else:
            total += (config.beta / 2.0) * float(np.sum((F - 0.5) ** 2))
    if gamma is None:
        gamma = gamma_policy(membership_bracket(X, D, mu, model, config),
                             config.rho)
    total += gamma * _entropy_like(mu)
    return total


def initialize(X, config: OptimizerConfig):
    """Seeded raws mapped through the update normalizations: mu0 is
    row-normalized uniform noise; D0 is K distinct data rows divided by
    mu0's column masses. The first alternation overwrites both."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    rng = np.random.default_rng(config.seed)
    idx = rng.choice(n, size=config.K, replace=False)
    d_raw = X[idx]
    mu_raw = rng.uniform(size=(n, config.K))
    mu0 = mu_raw / mu_raw.sum(axis=1, keepdims=True)
    masses = mu0.sum(axis=0)
    D0 = d_raw / masses[:, None]
    return mu0, D0


def solve_display(X, model, config: OptimizerConfig,
                  mu0: Optional[np.ndarray] = None,
                  D0: Optional[np.ndarray] = None) -> SolveResult:
    """Alternate membership and exemplar updates until the summed
    entrywise-L1 step falls under epsilon or the iteration cap.

    ``mu0`` / ``D0`` override the seeded initialization (used by
    equivariance tests and restarts)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    n = X.shape[0]
    if n < config.K:
        raise ValueError(f"need at least K={config.K} samples, got {n}")

    if mu0 is None or D0 is None:
        init_mu, init_d = initialize(X, config)
        mu = init_mu if mu0 is None else np.asarray(mu0, dtype=np.float64)
        D = init_d if D0 is None else np.asarray(D0, dtype=np.float64)
    else:
        mu = np.asarray(mu0, dtype=np.float64)
        D = np.asarray(D0, dtype=np.float64)
    _require_row_stochastic(mu, "solve_display init")

    floor = mass_floor(n, config.K)
    trajectory: List[TrajectoryPoint] = []
    converged = False
    iterations_used = 0
    for it in range(1, config.max_iterations + 1):
        try:
            bracket = membership_bracket(X, D, mu, model, config)
        except NumericalError as err:
            raise NumericalError(str(err), iteration=it) from err
        gamma = gamma_policy(bracket, config.rho)
        mu_new = _membership_from_bracket(bracket, gamma)
        D_new = exemplar_update(X, mu_new, D, model, config)
        hits = int(np.sum(mu_new.sum(axis=0) < floor))
        step = float(np.abs(mu_new - mu).sum() + np.abs(D_new - D).sum())
        obj = objective(X, mu_new, D_new, model, config, gamma=gamma)
        trajectory.append(TrajectoryPoint(
            iteration=it, objective=obj, step_l1=step, gamma=gamma,
            mass_floor_hits=hits))
        mu, D = mu_new, D_new
        iterations_used = it
        if step < config.epsilon:
            converged = True
            break

    result = SolveResult(mu=mu, exemplars=D, iterations_used=iterations_used,
                         trajectory=trajectory, converged=converged)
    if config.trajectory_path:
        write_trajectory_csv(result, config.trajectory_path)
    return result


def write_trajectory_csv(result: SolveResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "step_l1", "gamma"])
        for p in result.trajectory:
            writer.writerow([p.iteration, repr(p.objective),
                             repr(p.step_l1), repr(p.gamma)])
