"""Batch experiment runner and service launcher.

Subcommands:
  synth    write a synthetic labeled pool to CSV
  session  run one simulated-oracle session and report its EERs
  ablate   run the 7 gate combinations x both variants over a seed list
  compare  run all five strategies plus a fully-supervised reference
  serve    launch the HTTP labeling service

Experiment cells are independent: a failing cell is reported on stderr with
its coordinates and leaves its row blank rather than aborting the grid.
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import classifier as clf
from . import loop
from . import metrics as mx
from .dataset import Pool, load_csv, save_csv, split_half, synthesize

GATE_GRID = [
    ((0, 0, 1), "amb"),
    ((0, 1, 0), "div"),
    ((1, 0, 0), "rep"),
    ((1, 0, 1), "rep+amb"),
    ((0, 1, 1), "div+amb"),
    ((1, 1, 0), "rep+div"),
    ((1, 1, 1), "rep+div+amb"),
]


@dataclass
class ExperimentSpec:
    K: int
    T: int
    seeds: List[int]
    out_dir: str
    data_path: Optional[str] = None
    n: int = 2200
    d: int = 16
    positive_fraction: float = 39 / 2200
    reg_c: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    rho: float = 1.0
    epsilon: float = 1e-3
    max_iterations: int = 100

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("at least one seed is required")

    def pool_for_seed(self, seed: int) -> Pool:
        if self.data_path:
            pool = load_csv(self.data_path)
        else:
            pool = synthesize(self.n, self.d, self.positive_fraction, seed=seed)
        return split_half(pool, seed=seed + 1)

    def session_config(self, strategy: str, seed: int,
                       gates=(1, 1, 1)) -> loop.SessionConfig:
        return loop.SessionConfig(
            strategy=strategy, K=self.K, T=self.T, seed=seed,
            reg_c=self.reg_c, alpha=self.alpha, beta=self.beta, rho=self.rho,
            gate_rep=gates[0], gate_div=gates[1], gate_amb=gates[2],
            epsilon=self.epsilon, max_iterations=self.max_iterations,
        )


@dataclass
class ReportRow:
    """Duck-typed stand-in for a SessionState inside `report_table`."""

    report_label: str
    report_variant: str
    T: int
    K: int
    n_total: int
    metrics: List[mx.MetricRecord] = field(default_factory=list)

    @classmethod
    def from_eers(cls, label, variant, eers, T, K, n_total):
        row = cls(label, variant, T, K, n_total)
        row.metrics = [
            mx.MetricRecord(t, mx.sampling_percent(t, K, n_total), e)
            for t, e in zip(range(1, T + 1), eers)
        ]
        return row


def _blank_eers(T: int) -> List[Optional[float]]:
    return [None] * T


def _run_cell(spec: ExperimentSpec, strategy: str, seed: int, gates,
              label: str, variant: str):
    """One (config, seed) session; on failure, report and return blanks."""
    try:
        pool = spec.pool_for_seed(seed)
        config = spec.session_config(strategy, seed, gates)
        state = loop.run_session(pool, config, loop.make_ground_truth_oracle(pool))
        return [m.eer_percent for m in state.metrics]
    except Exception as err:  # keep the rest of the grid alive
        print(f"cell failed: config={label} variant={variant} seed={seed}: "
              f"{type(err).__name__}: {err}", file=sys.stderr)
        return _blank_eers(spec.T)


def _supervised_reference(spec: ExperimentSpec, seed: int):
    """EER of a model trained on the whole labeled training half."""
    try:
        pool = spec.pool_for_seed(seed)
        train_ids = pool.train_ids()
        labels = pool.labels_of(train_ids)
        if any(lab is None for lab in labels):
            raise ValueError("training half is not fully labeled")
        pairs = list(zip(pool.features_of(train_ids), labels))
        model = clf.train(pairs, reg_c=spec.reg_c)
        eval_X, eval_y = pool.eval_scored_truth()
        value = mx.eer(clf.score_many(model, eval_X), eval_y)
        return [value] * spec.T
    except Exception as err:
        print(f"cell failed: config=supervised seed={seed}: "
              f"{type(err).__name__}: {err}", file=sys.stderr)
        return _blank_eers(spec.T)


def _mean_eers(per_seed: List[List[Optional[float]]]) -> List[Optional[float]]:
    out: List[Optional[float]] = []
    for t in range(len(per_seed[0])):
        column = [row[t] for row in per_seed]
        if any(v is None for v in column):
            out.append(None)
        else:
            out.append(float(np.mean(column)))
    return out


def _emit(spec: ExperimentSpec, basename: str, cells):
    """cells: list of (label, variant, {seed: eers}). Writes one averaged
    file plus one per-seed file in the identical layout, and returns the
    averaged rows keyed (label, variant)."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_total = spec.n if spec.data_path is None else spec.pool_for_seed(spec.seeds[0]).n

    averaged = {}
    avg_rows = []
    for label, variant, by_seed in cells:
        mean = _mean_eers([by_seed[s] for s in spec.seeds])
        averaged[(label, variant)] = mean
        avg_rows.append(ReportRow.from_eers(label, variant, mean,
                                            spec.T, spec.K, n_total))
    (out_dir / f"{basename}.csv").write_text(mx.report_table(avg_rows),
                                             encoding="utf-8")
    written = [out_dir / f"{basename}.csv"]
    for s in spec.seeds:
        rows = [ReportRow.from_eers(label, variant, by_seed[s],
                                    spec.T, spec.K, n_total)
                for label, variant, by_seed in cells]
        path = out_dir / f"{basename}_seed{s}.csv"
        path.write_text(mx.report_table(rows), encoding="utf-8")
        written.append(path)
    return averaged, written


def run_ablation(spec: ExperimentSpec):
    """Gate-combination grid, both variants, simulated oracle."""
    cells = []
    for gates, label in GATE_GRID:
        for strategy, variant in (
                (loop.STRATEGY_LEARNED_EARLY, "early"),
                (loop.STRATEGY_LEARNED_SURROGATE, "surrogate")):
            by_seed = {s: _run_cell(spec, strategy, s, gates, label, variant)
                       for s in spec.seeds}
            cells.append((label, variant, by_seed))
    return _emit(spec, "ablation", cells)


def run_comparison(spec: ExperimentSpec):
    """All five strategies plus the fully-supervised reference row."""
    cells = []
    for strategy in loop.STRATEGIES:
        variant = ""
        if strategy == loop.STRATEGY_LEARNED_EARLY:
            variant = "early"
        elif strategy == loop.STRATEGY_LEARNED_SURROGATE:
            variant = "surrogate"
        by_seed = {s: _run_cell(spec, strategy, s, (1, 1, 1), strategy, variant)
                   for s in spec.seeds}
        cells.append((strategy, variant, by_seed))
    by_seed = {s: _supervised_reference(spec, s) for s in spec.seeds}
    cells.append(("supervised", "", by_seed))
    return _emit(spec, "comparison", cells)


# -- argument plumbing --------------------------------------------------------


def _parse_seeds(raw: Optional[List[str]]) -> List[int]:
    if not raw:
        return [0]
    seeds: List[int] = []
    for chunk in raw:
        seeds.extend(int(part) for part in chunk.split(",") if part)
    return seeds


def _positive_fraction(pos: float, n: int) -> float:
    return pos / n if pos >= 1 else pos


def _add_dataset_args(p: argparse.ArgumentParser):
    p.add_argument("--data", help="pool CSV; omit to synthesize per seed")
    p.add_argument("--n", type=int, default=2200)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--pos", type=float, default=39.0,
                   help="positive count (>=1) or fraction (<1)")


def _add_loop_args(p: argparse.ArgumentParser):
    p.add_argument("--k", type=int, default=16, help="display size")
    p.add_argument("--t", type=int, default=10, help="iterations")
    p.add_argument("--reg-c", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--max-iterations", type=int, default=100)


def _spec_from_args(args) -> ExperimentSpec:
    return ExperimentSpec(
        K=args.k, T=args.t, seeds=_parse_seeds(args.seed), out_dir=args.out,
        data_path=args.data, n=args.n, d=args.d,
        positive_fraction=_positive_fraction(args.pos, args.n),
        reg_c=args.reg_c, alpha=args.alpha, beta=args.beta, rho=args.rho,
        epsilon=args.epsilon, max_iterations=args.max_iterations,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vexal",
        description="Active learning with learned virtual-exemplar displays")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic pool CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--pos", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="pool.csv")

    p = sub.add_parser("session", help="run one simulated-oracle session")
    _add_dataset_args(p)
    _add_loop_args(p)
    p.add_argument("--strategy", choices=loop.STRATEGIES, required=True)
    p.add_argument("--seed", action="append",
                   help="seed (repeatable or comma-separated); first is used")
    p.add_argument("--gate-rep", type=int, choices=(0, 1), default=1)
    p.add_argument("--gate-div", type=int, choices=(0, 1), default=1)
    p.add_argument("--gate-amb", type=int, choices=(0, 1), default=1)
    p.add_argument("--trajectory-dir",
                   help="dump per-solve optimizer trajectories here")
    p.add_argument("--out", default=".")

    p = sub.add_parser("ablate", help="run the gate-combination grid")
    _add_dataset_args(p)
    _add_loop_args(p)
    p.add_argument("--seed", action="append")
    p.add_argument("--out", default=".")

    p = sub.add_parser("compare", help="run all strategies plus supervised")
    _add_dataset_args(p)
    _add_loop_args(p)
    p.add_argument("--seed", action="append")
    p.add_argument("--out", default=".")

    p = sub.add_parser("serve", help="launch the labeling service")
    p.add_argument("--storage", default="./sessions")
    p.add_argument("--assets", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_synth(args) -> int:
    pf = _positive_fraction(args.pos, args.n)
    pool = synthesize(args.n, args.d, pf, seed=args.seed)
    save_csv(pool, args.out)
    n_pos = sum(1 for i in pool.ids if pool.sample(int(i)).label == 1)
    print(f"wrote {pool.n} samples ({n_pos} positive) to {args.out}")
    return 0


def _cmd_session(args) -> int:
    spec = _spec_from_args(args)
    seed = spec.seeds[0]
    pool = spec.pool_for_seed(seed)
    config = spec.session_config(
        args.strategy, seed,
        gates=(args.gate_rep, args.gate_div, args.gate_amb))
    if args.trajectory_dir:
        Path(args.trajectory_dir).mkdir(parents=True, exist_ok=True)
        config.trajectory_dir = args.trajectory_dir
    state = loop.run_session(pool, config, loop.make_ground_truth_oracle(pool))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = mx.report_table([state])
    (out_dir / "session.csv").write_text(report, encoding="utf-8")
    for record in state.metrics:
        shown = mx.format_2dp(record.eer_percent) or "n/a"
        print(f"iteration {record.iteration}: "
              f"samp {mx.format_2dp(record.sampling_percent)}% eer {shown}")
    eers = [m.eer_percent for m in state.metrics]
    if all(e is not None for e in eers):
        print(f"auc {mx.format_2dp(mx.auc_over_iterations(eers))}")
    return 0


def _cmd_ablate(args) -> int:
    spec = _spec_from_args(args)
    _, written = run_ablation(spec)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    spec = _spec_from_args(args)
    _, written = run_comparison(spec)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionManager, build_app

    manager = SessionManager(args.storage, asset_root=args.assets)
    uvicorn.run(build_app(manager), host=args.host, port=args.port,
                log_level="warning")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "session": _cmd_session,
    "ablate": _cmd_ablate,
    "compare": _cmd_compare,
    "serve": _cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 1
    except Exception as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
