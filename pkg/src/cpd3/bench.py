"""Benchmark harness: random-instance suites with machine-readable output.

Two built-in suites mirror the reference measurement tables: "table1"
covers K = R = (I-1)(J-1) instances solved by the full-column-rank
pipeline, "table2" covers K < R instances.  Each configuration is run on
``trials`` random standard-normal factor tensors; per-trial seeds are
derived from (seed, config index, trial) so runs are reproducible and
trials can be distributed over a process pool (CPD_THREADS).
"""

from __future__ import annotations

import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algebraic import auto_l
from .core import FactorTriple, Tensor3, synthesize
from .errors import CpdError

#: A trial counts as a success only below this reconstruction residual.
SUCCESS_RESIDUAL = 1e-8

#: Configurations whose Gram side exceeds this need the --big flag.
BIG_GRAM_DIM = 6000


@dataclass(frozen=True)
class BenchConfig:
    dims: tuple[int, int, int]
    R: int
    expected_m: int | None = None
    expected_l: int | None = None
    expected_D: int | None = None

    @property
    def name(self) -> str:
        i, j, k = self.dims
        return f"{i}x{j}x{k}/R{self.R}"


@dataclass(frozen=True)
class BenchRow:
    """Aggregated outcome of one configuration."""

    dims: tuple[int, int, int]
    R: int
    l_used: int
    m: int
    D: int
    success_rate: float
    mean_wall_time_seconds: float
    max_residual: float
    trials: int

    def as_dict(self) -> dict:
        i, j, k = self.dims
        return {
            "I": i, "J": j, "K": k, "R": self.R,
            "m": self.m, "l": self.l_used, "D": self.D,
            "success_rate": self.success_rate,
            "mean_seconds": self.mean_wall_time_seconds,
            "max_residual": self.max_residual,
            "trials": self.trials,
        }


def _table1_config(i, j, l, d):
    r = (i - 1) * (j - 1)
    return BenchConfig(dims=(i, j, r), R=r, expected_m=2, expected_l=l, expected_D=d)


TABLE1 = (
    _table1_config(3, 3, 0, 10),
    _table1_config(3, 4, 0, 21),
    _table1_config(3, 5, 0, 36),
    _table1_config(3, 6, 0, 55),
    _table1_config(3, 7, 1, 364),
    _table1_config(3, 8, 1, 560),
    _table1_config(3, 9, 1, 816),
    _table1_config(3, 10, 1, 1140),
    _table1_config(3, 11, 1, 1540),
    _table1_config(3, 12, 1, 2024),
    _table1_config(3, 13, 1, 2600),
    _table1_config(4, 4, 0, 45),
    _table1_config(4, 5, 1, 364),
    _table1_config(4, 6, 1, 680),
    _table1_config(4, 7, 2, 5985),
    _table1_config(4, 8, 2, 10626),
    _table1_config(4, 9, 2, 17550),
    _table1_config(5, 5, 1, 816),
    _table1_config(5, 6, 2, 8855),
    _table1_config(5, 7, 2, 17550),
)

TABLE2 = (
    BenchConfig((4, 5, 6), 7, 3, 1, 126),
    BenchConfig((5, 7, 7), 9, 4, 1, 462),
    BenchConfig((6, 9, 8), 11, 5, 1, 1716),
    BenchConfig((7, 7, 7), 10, 5, 1, 924),
    BenchConfig((4, 6, 8), 9, 3, 1, 330),
    BenchConfig((4, 7, 10), 11, 3, 1, 715),
    BenchConfig((5, 6, 6), 8, 4, 2, 462),
    BenchConfig((5, 7, 8), 10, 4, 2, 1716),
)

CSV_HEADER = "I,J,K,R,m,l,D,success_rate,mean_seconds,max_residual"


def gram_dim(R: int, m: int, l: int) -> int:
    """Symmetric-subspace dimension for compressed K = R - m + 2."""
    k_comp = R - m + 2
    return math.comb(k_comp + m + l - 1, m + l)


def random_instance(dims, R, seed_parts) -> tuple[Tensor3, FactorTriple]:
    """Standard-normal factor triple and its tensor for a derived seed."""
    rng = np.random.default_rng(np.random.SeedSequence(tuple(int(p) for p in seed_parts)))
    i, j, k = dims
    truth = FactorTriple(
        A=rng.standard_normal((i, R)),
        B=rng.standard_normal((j, R)),
        C=rng.standard_normal((k, R)),
    )
    return synthesize(truth), truth


def run_trial(dims, R, seed, config_index, trial, l_max=3, max_dim=None) -> dict:
    """One random instance through the level-search pipeline."""
    t, _ = random_instance(dims, R, (seed, config_index, trial))
    kwargs = {} if max_dim is None else {"max_dim": max_dim}
    start = time.perf_counter()
    try:
        res = auto_l(t, R, l_max=l_max, seed=int(seed) + trial, **kwargs)
    except CpdError as exc:
        return {
            "success": False,
            "seconds": time.perf_counter() - start,
            "error": f"{type(exc).__name__}: {exc}",
        }
    return {
        "success": res.residual <= SUCCESS_RESIDUAL,
        "seconds": time.perf_counter() - start,
        "l_used": res.l_used,
        "m": res.m,
        "D": gram_dim(R, res.m, res.l_used),
        "residual": res.residual,
    }


def _trial_star(args):
    return run_trial(*args)


def worker_count() -> int:
    return max(1, int(os.environ.get("CPD_THREADS", "1")))


def run_config(
    cfg: BenchConfig,
    trials: int = 20,
    seed: int = 0,
    config_index: int = 0,
    l_max: int = 3,
    max_dim: int | None = None,
    workers: int | None = None,
) -> BenchRow:
    """Run all trials of one configuration and aggregate."""
    workers = worker_count() if workers is None else max(1, workers)
    tasks = [
        (cfg.dims, cfg.R, seed, config_index, trial, l_max, max_dim)
        for trial in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_trial_star, tasks))
    else:
        outcomes = [run_trial(*task) for task in tasks]

    good = [o for o in outcomes if o["success"]]
    if good:
        l_used = Counter(o["l_used"] for o in good).most_common(1)[0][0]
        m = Counter(o["m"] for o in good).most_common(1)[0][0]
        d = gram_dim(cfg.R, m, l_used)
        max_resid = max(o["residual"] for o in good)
    else:
        l_used, m, d, max_resid = -1, 0, 0, float("nan")
    return BenchRow(
        dims=cfg.dims,
        R=cfg.R,
        l_used=l_used,
        m=m,
        D=d,
        success_rate=len(good) / trials if trials else 0.0,
        mean_wall_time_seconds=float(np.mean([o["seconds"] for o in outcomes])) if outcomes else 0.0,
        max_residual=max_resid,
        trials=trials,
    )


def suite_configs(
    suite: str, big: bool = False, max_d: int | None = None
) -> list[BenchConfig]:
    """Configurations of a named suite, with the large rows gated."""
    if suite == "table1":
        rows = list(TABLE1)
    elif suite == "table2":
        rows = list(TABLE2)
    else:
        raise ValueError(f"unknown suite {suite!r}")
    if not big:
        rows = [c for c in rows if (c.expected_D or 0) <= BIG_GRAM_DIM]
    if max_d is not None:
        rows = [c for c in rows if (c.expected_D or 0) <= max_d]
    return rows


def run_suite(
    configs,
    trials: int = 20,
    seed: int = 0,
    l_max: int = 3,
    workers: int | None = None,
    progress=None,
) -> list[BenchRow]:
    rows = []
    for idx, cfg in enumerate(configs):
        row = run_config(
            cfg, trials=trials, seed=seed, config_index=idx, l_max=l_max, workers=workers
        )
        if progress is not None:
            progress(cfg, row)
        rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        i, j, k = r.dims
        lines.append(
            f"{i},{j},{k},{r.R},{r.m},{r.l_used},{r.D},"
            f"{r.success_rate:.4f},{r.mean_wall_time_seconds:.4f},{r.max_residual:.3e}"
        )
    return "\n".join(lines) + "\n"
