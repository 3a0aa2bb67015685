"""Replicated simulation: fate curves, growth-rate statistics, moment checks."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from statistics import NormalDist

import numpy as np

from .model import ModelConfig, conditional_moments
from .sampling import derive_stream
from .simulator import Category, FateKind, RecordMode, Trajectory, simulate, step_batch

CATEGORIES = tuple(Category)
DEFAULT_HORIZON = 100
DEFAULT_REPLICATES = 10_000


def _chunks(replicates: int, parallelism: int) -> list[range]:
    parts = max(1, min(parallelism * 4, replicates))
    bounds = np.linspace(0, replicates, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _map_chunks(fn, args_for, replicates: int, parallelism: int) -> list:
    chunks = _chunks(replicates, parallelism)
    if parallelism <= 1:
        return [fn(*args_for(c)) for c in chunks]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, *zip(*(args_for(c) for c in chunks))))


def run_replicates(
    cfg: ModelConfig,
    horizon: int,
    replicates: int,
    root_seed: int,
    record_mode: RecordMode = RecordMode.STATES_ONLY,
    parallelism: int = 1,
) -> list[Trajectory]:
    """Simulate replicates 0..replicates-1; output order follows replicate index."""
    parts = _map_chunks(
        _simulate_range,
        lambda c: (cfg, horizon, c.start, c.stop, root_seed, record_mode),
        replicates,
        parallelism,
    )
    return [t for part in parts for t in part]


def _simulate_range(cfg, horizon, start, stop, root_seed, record_mode):
    return [simulate(cfg, horizon, derive_stream(root_seed, i), record_mode) for i in range(start, stop)]


# ---------------------------------------------------------------------------
# fate curves


@dataclass
class FateCurve:
    """Per-generation category counts, generations 0..horizon."""

    counts: np.ndarray  # shape (horizon + 1, len(CATEGORIES))
    replicates: int
    root_seed: int

    def __getitem__(self, category: Category | str) -> np.ndarray:
        return self.counts[:, CATEGORIES.index(Category(category))]

    def probability(self, category: Category | str) -> np.ndarray:
        return self[category] / self.replicates

    @property
    def horizon(self) -> int:
        return self.counts.shape[0] - 1

    @property
    def both_alive(self) -> np.ndarray:
        return self[Category.BOTH_ALIVE]

    @property
    def system_extinct(self) -> np.ndarray:
        return self[Category.SYSTEM_EXTINCT]

    @property
    def prey_only(self) -> np.ndarray:
        return self[Category.PREY_ONLY]

    @property
    def predator_only(self) -> np.ndarray:
        return self[Category.PREDATOR_ONLY]

    @property
    def exploded(self) -> np.ndarray:
        return self[Category.EXPLODED]


def accumulate_categories(trajectories, horizon: int) -> np.ndarray:
    """Count, per generation, how many trajectories sit in each category.

    After a trajectory stops (absorption or explosion) its last category
    persists to the horizon.
    """
    counts = np.zeros((horizon + 2, len(CATEGORIES)), dtype=np.int64)
    index = {c: i for i, c in enumerate(CATEGORIES)}
    for t in trajectories:
        prev = None
        for gen, cat in t.changes:
            if prev is not None:
                counts[gen, index[prev]] -= 1
            counts[gen, index[cat]] += 1
            prev = cat
    return np.cumsum(counts, axis=0)[: horizon + 1]


def _fate_counts_range(cfg, horizon, start, stop, root_seed):
    trajs = (simulate(cfg, horizon, derive_stream(root_seed, i), RecordMode.FATE_ONLY) for i in range(start, stop))
    return accumulate_categories(trajs, horizon)


def estimate_fate_curve(
    cfg: ModelConfig,
    horizon: int = DEFAULT_HORIZON,
    replicates: int = DEFAULT_REPLICATES,
    root_seed: int = 0,
    parallelism: int = 1,
) -> FateCurve:
    """Monte Carlo fate curve; identical for any ``parallelism`` at fixed seed."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    parts = _map_chunks(
        _fate_counts_range,
        lambda c: (cfg, horizon, c.start, c.stop, root_seed),
        replicates,
        parallelism,
    )
    return FateCurve(sum(parts[1:], parts[0]), replicates, root_seed)


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("Wilson interval undefined for zero trials")
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    phat = successes / trials
    z2n = z * z / trials
    centre = (phat + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# growth rates


class Condition(str, Enum):
    COEXISTING = "coexisting"
    PREY_ONLY = "prey_only"


@dataclass
class Quantiles:
    q1: np.ndarray
    median: np.ndarray
    q3: np.ndarray

    @classmethod
    def of(cls, rows: np.ndarray) -> Quantiles:
        if rows.shape[0] == 0:
            empty = np.full(rows.shape[1], np.nan)
            return cls(empty, empty.copy(), empty.copy())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            q = np.nanquantile(rows, [0.25, 0.5, 0.75], axis=0)
        return cls(q[0], q[1], q[2])


@dataclass
class GrowthSummary:
    """Cross-trajectory quantiles for the retained paths, indexed by generation.

    Ratio arrays have length ``horizon`` (entry n is Z_{n+1}/Z_n); the
    normalised and density arrays have length ``horizon + 1``.
    """

    condition: Condition
    retained: int
    replicates: int
    predator_ratio: Quantiles
    prey_ratio: Quantiles
    predator_normalized: Quantiles
    prey_normalized: Quantiles
    density_median: np.ndarray
    paths: np.ndarray = field(repr=False)

    @property
    def empty(self) -> bool:
        return self.retained == 0

    def pooled_median(self, species: str, generations: range) -> float:
        """Median of Z_{n+1}/Z_n pooled over retained paths and ``generations``."""
        col = 0 if species == "predator" else 1
        x = self.paths[:, :, col].astype(float)
        with np.errstate(all="ignore"):
            ratios = x[:, 1:] / x[:, :-1]
        sel = ratios[:, list(generations)]
        sel = sel[np.isfinite(sel)]
        return float(np.median(sel)) if sel.size else math.nan


def growth_stats(
    cfg: ModelConfig,
    horizon: int,
    replicates: int,
    root_seed: int,
    condition: Condition | str = Condition.COEXISTING,
    parallelism: int = 1,
) -> GrowthSummary:
    condition = Condition(condition)
    if cfg.carrying is not None:
        raise ValueError("growth statistics cover the model without carrying capacity")
    trajs = run_replicates(cfg, horizon, replicates, root_seed, RecordMode.STATES_ONLY, parallelism)
    want = Category.BOTH_ALIVE if condition is Condition.COEXISTING else Category.PREY_ONLY
    kept = [t for t in trajs if t.fate.kind is not FateKind.EXPLODED and len(t.states) == horizon + 1
            and t.category_at(horizon) is want]
    paths = np.array([t.states for t in kept], dtype=float).reshape(len(kept), horizon + 1, 2)
    z, zt = paths[:, :, 0], paths[:, :, 1]
    with np.errstate(all="ignore"):
        rz = np.where(z[:, :-1] > 0, z[:, 1:] / z[:, :-1], np.nan)
        rzt = np.where(zt[:, :-1] > 0, zt[:, 1:] / zt[:, :-1], np.nan)
        dens = np.where(z > 0, zt / z, np.inf)
    n = np.arange(horizon + 1)
    rate = cfg.predator_survival.rho2 * cfg.predator_law.mean
    rate_t = cfg.prey_survival.rho2 * cfg.prey_law.mean
    dens_med = np.median(dens, axis=0) if len(kept) else np.full(horizon + 1, np.nan)
    return GrowthSummary(
        condition=condition,
        retained=len(kept),
        replicates=replicates,
        predator_ratio=Quantiles.of(rz),
        prey_ratio=Quantiles.of(rzt),
        predator_normalized=Quantiles.of(z / rate**n),
        prey_normalized=Quantiles.of(zt / rate_t**n),
        density_median=dens_med,
        paths=paths,
    )


# ---------------------------------------------------------------------------
# one-step moment checks


@dataclass
class MomentRow:
    state: tuple[int, int]
    species: str
    analytic_mean: float
    empirical_mean: float
    standard_error: float
    analytic_variance: float
    empirical_variance: float
    mean_ok: bool
    variance_ok: bool

    @property
    def ok(self) -> bool:
        return self.mean_ok and self.variance_ok


@dataclass
class MomentReport:
    rows: list[MomentRow]
    draws: int

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


MEAN_SE_TOL = 4.0
VARIANCE_REL_TOL = 0.10


def moment_check(
    cfg: ModelConfig,
    states: list[tuple[int, int]],
    draws: int = 1_000_000,
    seed: int = 0,
) -> MomentReport:
    """Compare empirical one-step moments with the analytic formulas.

    Means must sit within 4 standard errors, variances within 10%. When the
    analytic variance is zero the sample must be constant and equal to the mean.
    """
    if draws < 10_000:
        raise ValueError("moment_check needs at least 10^4 draws per state")
    rows = []
    for i, state in enumerate(states):
        rng = derive_stream(seed, i).generator()
        batch = step_batch(cfg, state, draws, rng)
        analytic = conditional_moments(cfg, state)
        for species, sample, mp in (("predator", batch.predators, analytic[0]), ("prey", batch.preys, analytic[1])):
            x = sample.astype(float)
            mean, var = float(x.mean()), float(x.var(ddof=1))
            se = math.sqrt(mp.variance / draws)
            if mp.variance == 0.0:
                mean_ok = var == 0.0 and mean == mp.mean
                var_ok = var == 0.0
            else:
                mean_ok = abs(mean - mp.mean) <= MEAN_SE_TOL * se
                var_ok = abs(var - mp.variance) <= VARIANCE_REL_TOL * mp.variance
            rows.append(MomentRow(tuple(state), species, mp.mean, mean, se, mp.variance, var, mean_ok, var_ok))
    return MomentReport(rows, draws)
