"""Generation step engines and trajectory simulation with fate classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .model import ModelConfig, density
from .sampling import (
    BINOMIAL_SIZE_LIMIT,
    EXPLODED,
    SeedStream,
    offspring_sums,
    reposition,
    sample_binomial,
    sample_offspring_sum,
)


class PopulationState(NamedTuple):
    predators: int
    preys: int


@dataclass(frozen=True, slots=True)
class GenerationRecord:
    n: int
    state_before: PopulationState
    predator_survivors: int
    prey_survivors: int
    competition_survivors: int | None
    density_before_control: float


class Category(str, Enum):
    """Status of a replicate at one generation."""

    BOTH_ALIVE = "both_alive"
    SYSTEM_EXTINCT = "system_extinct"
    PREY_ONLY = "prey_only"
    PREDATOR_ONLY = "predator_only"
    EXPLODED = "exploded"


def categorize(predators: int, preys: int) -> Category:
    if predators > 0:
        return Category.BOTH_ALIVE if preys > 0 else Category.PREDATOR_ONLY
    return Category.PREY_ONLY if preys > 0 else Category.SYSTEM_EXTINCT


class FateKind(str, Enum):
    EXTINCT = "extinct"
    PREDATOR_ONLY = "predator_only"
    PREY_ONLY = "prey_only"
    BOTH_ALIVE_AT_HORIZON = "both_alive_at_horizon"
    EXPLODED = "exploded"


class Fate(NamedTuple):
    kind: FateKind
    generation: int | None = None


class RecordMode(str, Enum):
    FULL = "full"
    STATES_ONLY = "states_only"
    FATE_ONLY = "fate_only"


@dataclass
class Trajectory:
    """Outcome of one replicate.

    ``changes`` lists ``(generation, category)`` every time the category
    changes, starting at generation 0; it is kept in every record mode and is
    enough to rebuild the per-generation category sequence. ``states`` holds
    ``(Z_n, Z~_n)`` for n = 0..last (not kept in FATE_ONLY mode).
    """

    fate: Fate
    final_state: PopulationState | None
    last_generation: int
    changes: list[tuple[int, Category]]
    records: list[GenerationRecord] = field(default_factory=list)
    states: list[PopulationState] = field(default_factory=list)

    def path(self, horizon: int) -> np.ndarray:
        """States for n = 0..horizon as floats; (0, 0) after absorption, NaN after explosion."""
        out = np.full((horizon + 1, 2), np.nan)
        k = min(len(self.states), horizon + 1)
        out[:k] = self.states[:k]
        if self.fate.kind is FateKind.EXTINCT:
            out[k:] = 0.0
        return out

    def category_at(self, n: int) -> Category:
        cat = self.changes[0][1]
        for gen, c in self.changes:
            if gen > n:
                break
            cat = c
        return cat


# ---------------------------------------------------------------------------
# single steps


def _interaction(cfg: ModelConfig, z: int, zt: int, rng: np.random.Generator) -> tuple[int, int]:
    d = density(z, zt)
    phi = sample_binomial(z, cfg.predator_survival(d), rng) if z else 0
    phit = sample_binomial(zt, cfg.prey_survival(d), rng) if zt else 0
    return phi, phit


def _reproduce(cfg: ModelConfig, phi: int, phit: int, rng: np.random.Generator):
    nz = sample_offspring_sum(cfg.predator_law, phi, rng)
    nzt = sample_offspring_sum(cfg.prey_law, phit, rng)
    if nz is EXPLODED or nzt is EXPLODED:
        return EXPLODED
    return PopulationState(nz, nzt)


def _check_size(state: PopulationState) -> None:
    if max(state) > BINOMIAL_SIZE_LIMIT:
        raise OverflowError("state exceeds the binomial size limit")


def step(cfg: ModelConfig, state: PopulationState, stream: SeedStream | np.random.Generator, n: int = 0):
    """One generation of the model without carrying capacity.

    Returns ``(next_state, record)``; ``next_state`` is EXPLODED when an
    offspring total overflows.
    """
    if cfg.carrying is not None:
        raise ValueError("config has a carrying capacity; use step_carrying")
    rng = stream.generator() if isinstance(stream, SeedStream) else stream
    z, zt = state
    _check_size(state)
    phi, phit = _interaction(cfg, z, zt, rng)
    rec = GenerationRecord(n, PopulationState(z, zt), phi, phit, None, density(z, zt))
    return _reproduce(cfg, phi, phit, rng), rec


def step_carrying(cfg: ModelConfig, state: PopulationState, stream: SeedStream | np.random.Generator, n: int = 0):
    """One generation with prey competition before the predator-prey interaction."""
    if cfg.carrying is None:
        raise ValueError("config has no carrying capacity; use step")
    rng = stream.generator() if isinstance(stream, SeedStream) else stream
    z, zt = state
    _check_size(state)
    m = sample_binomial(zt, cfg.carrying(zt), rng) if zt else 0
    phi, phit = _interaction(cfg, z, m, rng)
    rec = GenerationRecord(n, PopulationState(z, zt), phi, phit, m, density(z, zt))
    return _reproduce(cfg, phi, phit, rng), rec


# ---------------------------------------------------------------------------
# trajectories


def simulate(
    cfg: ModelConfig,
    horizon: int,
    stream: SeedStream,
    record_mode: RecordMode = RecordMode.FULL,
) -> Trajectory:
    """Run one replicate until ``horizon``, absorption at (0, 0) or explosion.

    Draws for generation n come from ``stream.at_generation(n)``, so a
    trajectory replays bit-exactly from ``(root_seed, replicate_index)``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    stepper = step_carrying if cfg.carrying is not None else step
    keep_records = record_mode is RecordMode.FULL
    keep_states = record_mode is not RecordMode.FATE_ONLY
    rng = stream.at_generation(0).generator()

    state = PopulationState(*cfg.initial)
    cat = categorize(*state)
    changes = [(0, cat)]
    records: list[GenerationRecord] = []
    states = [state] if keep_states else []
    n = 0
    while n < horizon and cat is not Category.SYSTEM_EXTINCT:
        if n:
            reposition(rng, n)
        nxt, rec = stepper(cfg, state, rng, n)
        if keep_records:
            records.append(rec)
        if nxt is not EXPLODED and max(nxt) > BINOMIAL_SIZE_LIMIT:
            nxt = EXPLODED
        n += 1
        if nxt is EXPLODED:
            changes.append((n, Category.EXPLODED))
            return Trajectory(Fate(FateKind.EXPLODED, n), None, n, changes, records, states)
        state = nxt
        if keep_states:
            states.append(state)
        new_cat = categorize(*state)
        if new_cat is not cat:
            changes.append((n, new_cat))
            cat = new_cat

    return Trajectory(_fate(changes, cat), state, n, changes, records, states)


def _fate(changes: list[tuple[int, Category]], final: Category) -> Fate:
    gen = changes[-1][0]
    if final is Category.SYSTEM_EXTINCT:
        return Fate(FateKind.EXTINCT, gen)
    if final is Category.PREY_ONLY:
        return Fate(FateKind.PREY_ONLY, gen)
    if final is Category.PREDATOR_ONLY:
        return Fate(FateKind.PREDATOR_ONLY, gen)
    return Fate(FateKind.BOTH_ALIVE_AT_HORIZON, None)


# ---------------------------------------------------------------------------
# batched one-step draws from a fixed state


@dataclass
class StepBatch:
    predators: np.ndarray
    preys: np.ndarray
    predator_survivors: np.ndarray
    prey_survivors: np.ndarray
    competition_survivors: np.ndarray | None


def step_batch(cfg: ModelConfig, state: tuple[int, int], size: int, rng: np.random.Generator) -> StepBatch:
    """``size`` independent one-generation transitions out of ``state``.

    Same law as :func:`step` / :func:`step_carrying`, drawn with array calls.
    """
    z, zt = state
    m = None
    if cfg.carrying is not None:
        m = rng.binomial(zt, cfg.carrying(zt), size=size) if zt else np.zeros(size, dtype=np.int64)
        prey_pool = m
    else:
        prey_pool = np.full(size, zt, dtype=np.int64)
    dens = np.full(size, math.inf) if z == 0 else prey_pool / z
    phi = rng.binomial(z, cfg.predator_survival.evaluate(dens)) if z else np.zeros(size, dtype=np.int64)
    phit = rng.binomial(prey_pool, cfg.prey_survival.evaluate(dens))
    return StepBatch(
        offspring_sums(cfg.predator_law, phi, rng),
        offspring_sums(cfg.prey_law, phit, rng),
        phi,
        phit,
        m,
    )
