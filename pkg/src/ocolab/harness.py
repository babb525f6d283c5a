"""Experiment runner: single runs, seed grids, aggregation and CSV/SVG output."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .algorithms import OGD, ONS, ConOGD, ConONS, Hybrid
from .core import OnlineLearner, RunRecord, checkpoints
from .instances import Instance, make_exp1, make_exp2, make_exp3, make_ons_adversary
from .universal import Maler, MetaGrad

__all__ = [
    "ALGORITHMS",
    "EXPERIMENTS",
    "make_learner",
    "ExperimentConfig",
    "RunResult",
    "SummaryStats",
    "GridResult",
    "run_single",
    "run_grid",
    "make_instance",
    "emit_csv",
    "write_svg",
    "RUN_HEADER",
    "SUMMARY_HEADER",
]

ALGORITHMS: dict[str, Callable[[], OnlineLearner]] = {
    "ogd": lambda: OGD(rule="sqrt"),
    "ons": ONS,
    "con_ons": ConONS,
    "con_ogd": ConOGD,
    "hybrid": Hybrid,
    "hybrid_s1_empty": lambda: Hybrid(use_s1=False),
    "hybrid_s2_empty": lambda: Hybrid(use_s2=False),
    "metagrad": MetaGrad,
    "metagrad_positive": lambda: MetaGrad(master_sign="positive"),
    "maler": Maler,
}

EXPERIMENTS = ("exp1", "exp2", "exp3", "adversary")

RUN_HEADER = ["experiment", "algorithm", "seed", "t", "x_norm", "cum_loss", "regret"]
SUMMARY_HEADER = ["experiment", "algorithm", "t", "n_seeds", "mean_x_norm", "mean_regret", "std_regret"]


def make_learner(name: str) -> OnlineLearner:
    try:
        return ALGORITHMS[name]()
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    T: int = 1000
    k: int = 250
    n: int = 10
    d: int = 5
    seeds: int | tuple[int, ...] = 100
    algorithms: tuple[str, ...] = ("ogd", "ons", "metagrad", "con_ons")
    stride: int = 25
    out: str | None = None
    # adversary only
    gamma: float = 0.005
    G: float = 100.0
    D: float = 1.0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {name!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if isinstance(self.seeds, int):
            if self.seeds < 1:
                raise ValueError("need at least one seed")
        else:
            object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
            if not self.seeds:
                raise ValueError("need at least one seed")

    @property
    def seed_list(self) -> tuple[int, ...]:
        if isinstance(self.seeds, int):
            return tuple(range(self.seeds))
        return self.seeds


def make_instance(config: ExperimentConfig, seed: int) -> Instance:
    c = config
    if c.experiment == "exp1":
        return make_exp1(c.T, c.k, seed)
    if c.experiment == "exp2":
        return make_exp2(c.T, c.k, seed)
    if c.experiment == "exp3":
        return make_exp3(c.T, c.k, c.n, c.d, seed)
    return make_ons_adversary(c.T, c.gamma, c.G, c.D)


@dataclass
class RunResult:
    algorithm: str
    records: list[RunRecord]
    curve: list[tuple[int, float]]

    @property
    def final_regret(self) -> float:
        return self.curve[-1][1]

    def checkpoint_records(self) -> list[RunRecord]:
        return [self.records[t - 1] for t, _ in self.curve]


def run_single(learner: OnlineLearner | str, instance: Instance, stride: int = 25) -> RunResult:
    """Play ``instance`` with ``learner`` and attach regret at every checkpoint.

    Each round the iterate is fixed before the stream is queried, so adaptive
    streams only ever see the committed ``x_t``.
    """
    name = learner if isinstance(learner, str) else type(learner).__name__
    if isinstance(learner, str):
        learner = make_learner(learner)
    stream, region = instance.stream, instance.region
    stream.reset()
    learner.start(region, instance.bounds, instance.x1)
    records: list[RunRecord] = []
    cum = 0.0
    for t in range(1, stream.T + 1):
        x = learner.predict()
        if not np.all(np.isfinite(x)):
            raise RuntimeError(f"{name}: non-finite iterate at t={t}: {x}")
        if not region.contains(x):
            raise RuntimeError(f"{name}: infeasible iterate at t={t}: {x}")
        f = stream.next(t, x)
        loss = f.value(x)
        cum += loss
        learner.observe(f.grad(x), f.tag)
        records.append(RunRecord(t=t, x=x, loss=loss, cum_loss=cum))
    oracle = instance.oracle
    curve = []
    for t in checkpoints(stream.T, stride):
        regret = records[t - 1].cum_loss - float(oracle.opt_value(t))
        records[t - 1] = replace(records[t - 1], regret=regret)
        curve.append((t, regret))
    return RunResult(name, records, curve)


@dataclass
class SummaryStats:
    experiment: str
    seeds: tuple[int, ...]
    checkpoints: np.ndarray
    mean_regret: dict[str, np.ndarray] = field(default_factory=dict)
    std_regret: dict[str, np.ndarray] = field(default_factory=dict)
    mean_x_norm: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def algorithms(self) -> list[str]:
        return list(self.mean_regret)

    def final(self, algorithm: str) -> float:
        return float(self.mean_regret[algorithm][-1])

    def at(self, algorithm: str, t: int) -> float:
        i = int(np.searchsorted(self.checkpoints, t))
        if i >= len(self.checkpoints) or self.checkpoints[i] != t:
            raise KeyError(f"t={t} is not a checkpoint")
        return float(self.mean_regret[algorithm][i])


@dataclass
class GridResult:
    config: ExperimentConfig
    rows: list[tuple]
    summary: SummaryStats


def _run_seed(config: ExperimentConfig, seed: int) -> dict[str, list[tuple[int, float, float, float]]]:
    instance = make_instance(config, seed)
    out = {}
    for name in config.algorithms:
        res = run_single(name, instance, config.stride)
        out[name] = [(r.t, r.x_norm, r.cum_loss, r.regret) for r in res.checkpoint_records()]
    return out


def _run_seed_star(args):
    return _run_seed(*args)


def run_grid(config: ExperimentConfig, workers: int = 1) -> GridResult:
    """Run every (algorithm, seed) pair and aggregate over seeds.

    Aggregates are computed in sorted-seed order, so they do not depend on the
    seed order or on the parallel schedule.
    """
    seeds = config.seed_list
    unique = sorted(set(seeds))
    if workers > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed_star, [(config, s) for s in unique]))
    else:
        results = [_run_seed(config, s) for s in unique]
    by_seed = dict(zip(unique, results))

    rows = []
    for name in config.algorithms:
        for seed in seeds:
            for t, xn, cum, reg in by_seed[seed][name]:
                rows.append((config.experiment, name, seed, t, xn, cum, reg))

    ts = np.array(checkpoints(config.T, config.stride))
    stats = SummaryStats(config.experiment, tuple(sorted(seeds)), ts)
    for name in config.algorithms:
        reg = np.array([[row[3] for row in by_seed[s][name]] for s in sorted(seeds)])
        xn = np.array([[row[1] for row in by_seed[s][name]] for s in sorted(seeds)])
        stats.mean_regret[name] = reg.mean(axis=0)
        stats.std_regret[name] = reg.std(axis=0, ddof=0)
        stats.mean_x_norm[name] = xn.mean(axis=0)
    return GridResult(config, rows, stats)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write(path_or_buf, header, rows):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def emit_csv(data, path_or_buf) -> None:
    """Write per-run rows (a list of tuples or a :class:`GridResult`) or a :class:`SummaryStats`.

    Per-run files use :data:`RUN_HEADER`; summaries use :data:`SUMMARY_HEADER`.
    Floats are printed with 17 significant digits.
    """
    if isinstance(data, SummaryStats):
        rows = []
        for name in data.algorithms:
            for i, t in enumerate(data.checkpoints):
                rows.append(
                    (data.experiment, name, int(t), len(data.seeds), data.mean_x_norm[name][i], data.mean_regret[name][i], data.std_regret[name][i])
                )
        _write(path_or_buf, SUMMARY_HEADER, rows)
        return
    if isinstance(data, GridResult):
        data = data.rows
    _write(path_or_buf, RUN_HEADER, data)


def write_svg(stats: SummaryStats, path: str) -> None:
    """Mean regret curves with standard-deviation error bars."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "ocolab"
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in stats.algorithms:
        ax.errorbar(stats.checkpoints, stats.mean_regret[name], yerr=stats.std_regret[name], label=name, capsize=2, linewidth=1)
    ax.set_xlabel("t")
    ax.set_ylabel("regret")
    ax.set_title(stats.experiment)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

