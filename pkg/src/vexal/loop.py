"""The interactive loop: label the current display, retrain the classifier
on everything labeled so far, record the evaluation metric, and compute the
next display with the configured strategy.

Strategies: `random`, `uncertainty`, `maxmin` (farthest-point), and the two
learned-display variants `learned-early` / `learned-surrogate`, which solve
for virtual exemplars and then map each exemplar to its nearest still
unlabeled pool sample. The oracle (a human behind the service, or a
ground-truth lookup in batch runs) is the only source of training labels.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import classifier as clf
from . import metrics as mx
from . import optimizer as opt
from .dataset import Pool
from .errors import InvalidStateError, ProtocolError

STRATEGY_RANDOM = "random"
STRATEGY_UNCERTAINTY = "uncertainty"
STRATEGY_MAXMIN = "maxmin"
STRATEGY_LEARNED_EARLY = "learned-early"
STRATEGY_LEARNED_SURROGATE = "learned-surrogate"
STRATEGIES = (
    STRATEGY_RANDOM,
    STRATEGY_UNCERTAINTY,
    STRATEGY_MAXMIN,
    STRATEGY_LEARNED_EARLY,
    STRATEGY_LEARNED_SURROGATE,
)

ORIGIN_RANDOM = "RANDOM"
ORIGIN_UNCERTAINTY = "UNCERTAINTY"
ORIGIN_MAXMIN = "MAXMIN"
ORIGIN_VIRTUAL_EARLY = "VIRTUAL_EARLY"
ORIGIN_VIRTUAL_SURROGATE = "VIRTUAL_SURROGATE"

# Role codes for per-iteration seed derivation; every random draw in a
# session comes from SeedSequence([base_seed, t, role]), so a restarted
# session replays the identical stream.
_ROLE_INITIAL = 0
_ROLE_SOLVER = 1
_ROLE_PICK = 2


def derive_seed(base_seed: int, t: int, role: int) -> int:
    return int(np.random.SeedSequence([base_seed, t, role]).generate_state(1)[0])


@dataclass(frozen=True)
class Display:
    sample_ids: Tuple[int, ...]
    origin: str

    def __post_init__(self):
        ids = tuple(int(i) for i in self.sample_ids)
        object.__setattr__(self, "sample_ids", ids)
        if len(set(ids)) != len(ids):
            raise ValueError("display ids must be distinct")

    @property
    def K(self) -> int:
        return len(self.sample_ids)

    def to_dict(self) -> dict:
        return {"sample_ids": list(self.sample_ids), "origin": self.origin}

    @classmethod
    def from_dict(cls, rec: dict) -> "Display":
        return cls(tuple(rec["sample_ids"]), rec["origin"])


@dataclass
class SessionConfig:
    strategy: str
    K: int
    T: int
    seed: int = 0
    reg_c: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    rho: float = 1.0
    gate_rep: int = 1
    gate_div: int = 1
    gate_amb: int = 1
    epsilon: float = 1e-3
    max_iterations: int = 100
    compute_metrics: bool = True
    trajectory_dir: Optional[str] = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; allowed: {', '.join(STRATEGIES)}")
        if self.K < 1 or self.T < 1:
            raise ValueError("K and T must be at least 1")

    @property
    def variant(self) -> Optional[str]:
        if self.strategy == STRATEGY_LEARNED_EARLY:
            return opt.VARIANT_EARLY
        if self.strategy == STRATEGY_LEARNED_SURROGATE:
            return opt.VARIANT_SURROGATE
        return None

    def optimizer_config(self, t: int) -> opt.OptimizerConfig:
        variant = self.variant
        if variant is None:
            raise ValueError(f"strategy {self.strategy!r} has no optimizer")
        trajectory_path = None
        if self.trajectory_dir:
            trajectory_path = str(Path(self.trajectory_dir) / f"trajectory_t{t}.csv")
        return opt.OptimizerConfig(
            variant=variant, K=self.K, alpha=self.alpha, beta=self.beta,
            rho=self.rho, gate_rep=self.gate_rep, gate_div=self.gate_div,
            gate_amb=self.gate_amb, epsilon=self.epsilon,
            max_iterations=self.max_iterations,
            seed=derive_seed(self.seed, t, _ROLE_SOLVER),
            trajectory_path=trajectory_path,
        )

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy, "K": self.K, "T": self.T,
            "seed": self.seed, "reg_c": self.reg_c,
            "alpha": self.alpha, "beta": self.beta, "rho": self.rho,
            "gate_rep": self.gate_rep, "gate_div": self.gate_div,
            "gate_amb": self.gate_amb, "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "compute_metrics": self.compute_metrics,
            "trajectory_dir": self.trajectory_dir,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "SessionConfig":
        return cls(**rec)


@dataclass
class SessionState:
    config: SessionConfig
    n_total: int
    t: int = 0
    displays: List[Tuple[Display, List[int]]] = field(default_factory=list)
    model: Optional[clf.ClassifierModel] = None
    metrics: List[mx.MetricRecord] = field(default_factory=list)
    pending_display: Optional[Display] = None
    rng_state: dict = field(default_factory=dict)
    report_label: str = ""
    report_variant: str = ""

    def __post_init__(self):
        if not self.rng_state:
            self.rng_state = {"base_seed": self.config.seed}
        if not self.report_label:
            self.report_label = self.config.strategy
        if not self.report_variant:
            self.report_variant = self.config.variant or ""

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def T(self) -> int:
        return self.config.T

    @property
    def complete(self) -> bool:
        return self.t >= self.config.T

    def labeled_ids(self) -> List[int]:
        out: List[int] = []
        for display, _ in self.displays:
            out.extend(display.sample_ids)
        return out

    def labeled_pairs(self, pool: Pool):
        pairs = []
        for display, labels in self.displays:
            feats = pool.features_of(display.sample_ids)
            pairs.extend(zip(feats, labels))
        return pairs

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "n_total": self.n_total,
            "t": self.t,
            "displays": [
                {"display": d.to_dict(), "labels": list(labels)}
                for d, labels in self.displays
            ],
            "model": self.model.to_record() if self.model else None,
            "metrics": [m.to_dict() for m in self.metrics],
            "pending_display": (self.pending_display.to_dict()
                                if self.pending_display else None),
            "rng_state": self.rng_state,
            "report_label": self.report_label,
            "report_variant": self.report_variant,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "SessionState":
        return cls(
            config=SessionConfig.from_dict(rec["config"]),
            n_total=int(rec["n_total"]),
            t=int(rec["t"]),
            displays=[
                (Display.from_dict(item["display"]), [int(v) for v in item["labels"]])
                for item in rec["displays"]
            ],
            model=(clf.ClassifierModel.from_record(rec["model"])
                   if rec.get("model") else None),
            metrics=[mx.MetricRecord.from_dict(m) for m in rec["metrics"]],
            pending_display=(Display.from_dict(rec["pending_display"])
                             if rec.get("pending_display") else None),
            rng_state=dict(rec.get("rng_state", {})),
            report_label=rec.get("report_label", ""),
            report_variant=rec.get("report_variant", ""),
        )


# -- display strategies ------------------------------------------------------


def _available_ids(pool: Pool, excluded) -> np.ndarray:
    excluded = set(int(i) for i in excluded)
    train = pool.train_ids()
    keep = np.array([i for i in train if int(i) not in excluded], dtype=np.int64)
    return np.sort(keep)


def _require_capacity(available: np.ndarray, K: int):
    if len(available) < K:
        raise InvalidStateError(
            f"need {K} unlabeled training samples, only {len(available)} left")


def initial_display(pool: Pool, K: int, seed: int) -> Display:
    """K distinct uniform-random training ids; the session's starting point."""
    return random_display(pool, excluded=(), K=K, seed=seed)


def random_display(pool: Pool, excluded, K: int, seed: int) -> Display:
    available = _available_ids(pool, excluded)
    _require_capacity(available, K)
    rng = np.random.default_rng(seed)
    picks = rng.choice(available, size=K, replace=False)
    return Display(tuple(int(i) for i in picks), ORIGIN_RANDOM)


def uncertainty_display(pool: Pool, model: clf.ClassifierModel, excluded,
                        K: int) -> Display:
    """The K available samples with scores closest to zero; ties by id."""
    available = _available_ids(pool, excluded)
    _require_capacity(available, K)
    scores = clf.score_many(model, pool.features_of(available))
    order = np.lexsort((available, np.abs(scores)))
    picks = available[order[:K]]
    return Display(tuple(int(i) for i in picks), ORIGIN_UNCERTAINTY)


def maxmin_display(pool: Pool, labeled_ids, excluded, K: int, seed: int) -> Display:
    """Greedy farthest-point picks: each pick maximizes its minimum squared
    distance to the labeled set plus earlier picks; ties by smallest id.
    With nothing labeled yet this degenerates to a random display."""
    labeled_ids = list(labeled_ids)
    if not labeled_ids:
        picked = random_display(pool, excluded, K, seed)
        return Display(picked.sample_ids, ORIGIN_MAXMIN)
    available = _available_ids(pool, excluded)
    _require_capacity(available, K)
    avail_X = pool.features_of(available)
    ref_X = pool.features_of(labeled_ids)

    # Running minimum squared distance to the reference set; argmax returns
    # the first (smallest-id) position on exact ties because `available`
    # is sorted.
    diff = avail_X[:, None, :] - ref_X[None, :, :]
    mind = np.einsum("nrd,nrd->nr", diff, diff).min(axis=1)
    picks = []
    for _ in range(K):
        best = int(np.argmax(mind))
        picks.append(int(available[best]))
        delta = avail_X - avail_X[best]
        dist_new = np.einsum("nd,nd->n", delta, delta)
        mind = np.minimum(mind, dist_new)
        mind[best] = -np.inf
    return Display(tuple(picks), ORIGIN_MAXMIN)


def map_exemplars_to_pool(exemplars: np.ndarray, pool: Pool, excluded,
                          origin: str) -> Display:
    """Assign each virtual exemplar its nearest available real sample.

    Exemplars claim samples greedily in order of increasing nearest-sample
    distance, so a contested sample goes to the closer exemplar and the
    other takes its next nearest. Sample ties break by smallest id,
    exemplar ties by smallest exemplar index. The returned ids are ordered
    by exemplar index.
    """
    exemplars = np.asarray(exemplars, dtype=np.float64)
    K = exemplars.shape[0]
    available = _available_ids(pool, excluded)
    _require_capacity(available, K)
    avail_X = pool.features_of(available)
    diff = exemplars[:, None, :] - avail_X[None, :, :]
    dist = np.einsum("kad,kad->ka", diff, diff)  # K x available

    taken = np.zeros(len(available), dtype=bool)
    assigned: Dict[int, int] = {}
    for _ in range(K):
        best_k, best_col, best_d = -1, -1, np.inf
        for k in range(K):
            if k in assigned:
                continue
            row = np.where(taken, np.inf, dist[k])
            col = int(np.argmin(row))  # first minimum = smallest id
            if row[col] < best_d:
                best_k, best_col, best_d = k, col, row[col]
        assigned[best_k] = best_col
        taken[best_col] = True
    ids = tuple(int(available[assigned[k]]) for k in range(K))
    return Display(ids, origin)


# -- the loop ----------------------------------------------------------------


Oracle = Callable[[Sequence[int]], Sequence[int]]


def make_ground_truth_oracle(pool: Pool) -> Oracle:
    """Simulated oracle answering from the pool's stored labels."""

    def oracle(sample_ids):
        labels = pool.labels_of(sample_ids)
        missing = [i for i, lab in zip(sample_ids, labels) if lab is None]
        if missing:
            raise InvalidStateError(
                f"pool has no ground truth for ids {missing[:5]}")
        return labels

    return oracle


def _collect_labels(display: Display, answer) -> List[int]:
    ids = display.sample_ids
    if isinstance(answer, dict):
        if set(answer.keys()) != set(ids):
            raise ProtocolError(
                "oracle must label exactly the displayed ids")
        values = [answer[i] for i in ids]
    else:
        values = list(answer)
        if len(values) != len(ids):
            raise ProtocolError(
                f"oracle returned {len(values)} labels for {len(ids)} ids")
    out = []
    for v in values:
        if v not in (-1, 1):
            raise ProtocolError(f"label must be -1 or +1, got {v!r}")
        out.append(int(v))
    return out


def _next_display(state: SessionState, pool: Pool) -> Display:
    cfg = state.config
    excluded = state.labeled_ids()
    pick_seed = derive_seed(cfg.seed, state.t, _ROLE_PICK)
    if cfg.strategy == STRATEGY_RANDOM:
        return random_display(pool, excluded, cfg.K, pick_seed)
    if cfg.strategy == STRATEGY_UNCERTAINTY:
        return uncertainty_display(pool, state.model, excluded, cfg.K)
    if cfg.strategy == STRATEGY_MAXMIN:
        return maxmin_display(pool, excluded, excluded, cfg.K, pick_seed)
    # Learned displays: solve on the unlabeled training features, then map
    # the virtual exemplars back onto real samples.
    available = _available_ids(pool, excluded)
    X = pool.features_of(available)
    result = opt.solve_display(X, state.model, cfg.optimizer_config(state.t))
    origin = (ORIGIN_VIRTUAL_EARLY if cfg.strategy == STRATEGY_LEARNED_EARLY
              else ORIGIN_VIRTUAL_SURROGATE)
    return map_exemplars_to_pool(result.exemplars, pool, excluded, origin)


def _record_metric(state: SessionState, pool: Pool) -> None:
    cfg = state.config
    eer_value = None
    if cfg.compute_metrics and pool.split is not None:
        eval_X, eval_y = pool.eval_scored_truth()
        if len(eval_y) and len(np.unique(eval_y)) == 2:
            scores = clf.score_many(state.model, eval_X)
            eer_value = mx.eer(scores, eval_y)
    state.metrics.append(mx.MetricRecord(
        iteration=state.t,
        sampling_percent=mx.sampling_percent(state.t, cfg.K, state.n_total),
        eer_percent=eer_value,
    ))


def run_iteration(state: SessionState, oracle: Oracle, pool: Pool) -> SessionState:
    """Label the pending display, retrain on all labels so far, record the
    metric, and stage the next display (none once the session completes).

    Oracle protocol violations leave the state untouched.
    """
    if state.complete:
        raise InvalidStateError(f"session already ran its {state.T} iterations")
    if state.pending_display is None:
        raise InvalidStateError("no display is awaiting labels")

    display = state.pending_display
    labels = _collect_labels(display, oracle(display.sample_ids))

    state.displays.append((display, labels))
    state.model = clf.train(state.labeled_pairs(pool), reg_c=state.config.reg_c,
                            seed=state.config.seed)
    state.t += 1
    state.pending_display = None
    _record_metric(state, pool)
    if not state.complete:
        state.pending_display = _next_display(state, pool)
    return state


def start_session(pool: Pool, config: SessionConfig) -> SessionState:
    """Fresh state with the seeded initial display staged for labeling."""
    train_size = len(pool.train_ids())
    if config.T * config.K > train_size:
        raise ValueError(
            f"budget T*K = {config.T * config.K} exceeds the {train_size} "
            "training samples")
    state = SessionState(config=config, n_total=pool.n)
    state.pending_display = initial_display(
        pool, config.K, derive_seed(config.seed, 0, _ROLE_INITIAL))
    return state


def run_session(pool: Pool, config: SessionConfig, oracle: Oracle,
                T: Optional[int] = None) -> SessionState:
    """Run the whole budgeted loop with the given oracle."""
    if T is not None and T != config.T:
        raise ValueError("T disagrees with config.T")
    state = start_session(pool, config)
    for _ in range(config.T):
        run_iteration(state, oracle, pool)
    return state
