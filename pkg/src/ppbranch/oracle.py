"""Brute-force one-step transition laws for tiny states.

These enumerate the binomial control and convolve truncated offspring pmfs
directly; they share no code path with the samplers they are used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig

MAX_ORACLE_STATE = 6


@dataclass
class StepDistribution:
    """Joint law of (Z_{n+1}, Z~_{n+1}) as ``probs[z', z~']``.

    ``truncation_tail_mass`` is the probability lost to offspring truncation;
    ``probs.sum() == 1 - truncation_tail_mass`` up to rounding.
    """

    probs: np.ndarray
    truncation_tail_mass: float

    @property
    def support(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(self.probs[i, j]) for i, j in zip(*np.nonzero(self.probs))}

    def marginal(self, species: int) -> np.ndarray:
        return self.probs.sum(axis=1 - species)

    def marginal_moments(self, species: int) -> tuple[float, float]:
        """Mean and variance of one marginal, renormalised over the kept mass."""
        q = self.marginal(species)
        q = q / q.sum()
        k = np.arange(len(q))
        mean = float(q @ k)
        return mean, float(q @ (k - mean) ** 2)


def _binom(n: int, p: float) -> list[float]:
    return [math.comb(n, k) * p**k * (1.0 - p) ** (n - k) for k in range(n + 1)]


def _convolution_powers(pmf: np.ndarray, upto: int) -> list[np.ndarray]:
    powers = [np.array([1.0])]
    for _ in range(upto):
        powers.append(np.convolve(powers[-1], pmf))
    return powers


def _species_marginal(size: int, prob: float, pmf: np.ndarray) -> np.ndarray:
    powers = _convolution_powers(pmf, size)
    out = np.zeros(len(powers[-1]))
    for k, w in enumerate(_binom(size, prob)):
        out[: len(powers[k])] += w * powers[k]
    return out


def exact_step_distribution(
    cfg: ModelConfig, state: tuple[int, int], offspring_truncation: float = 1e-9
) -> StepDistribution:
    """Exact one-step law of the model without carrying capacity."""
    z, zt = state
    if max(z, zt) > MAX_ORACLE_STATE:
        raise ValueError(f"oracle refuses states above {MAX_ORACLE_STATE} (got {state})")
    if cfg.carrying is not None:
        raise ValueError("exact_step_distribution covers the model without carrying capacity")
    d = math.inf if z == 0 else zt / z
    r = cfg.predator_survival(d)
    rt = cfg.prey_survival(d)
    pmf, _ = cfg.predator_law.truncated_pmf(offspring_truncation)
    pmft, _ = cfg.prey_law.truncated_pmf(offspring_truncation)
    pred = _species_marginal(z, r, pmf)
    prey = _species_marginal(zt, rt, pmft)
    # the species are independent given the state
    probs = np.outer(pred, prey)
    return StepDistribution(probs, max(0.0, 1.0 - math.fsum(pred) * math.fsum(prey)))


@dataclass
class CarryingPreyMean:
    mean: float
    upper_bound: float


def exact_carrying_prey_mean(cfg: ModelConfig, state: tuple[int, int]) -> CarryingPreyMean:
    """E[Z~_{n+1} | state] in the carrying-capacity model by summing over
    the competition survivors m ~ Binomial(z~, s(z~, K))."""
    if cfg.carrying is None:
        raise ValueError("config has no carrying capacity")
    z, zt = state
    mu_t = cfg.prey_law.mean
    rho2_t = cfg.prey_survival.rho2
    s = cfg.carrying(zt)
    bound = rho2_t * mu_t * s * zt
    if zt == 0:
        return CarryingPreyMean(0.0, 0.0)
    ms = np.arange(zt + 1)
    logpmf = (
        np.array([math.lgamma(zt + 1) - math.lgamma(m + 1) - math.lgamma(zt - m + 1) for m in ms])
        + _xlogy(ms, s)
        + _xlogy(zt - ms, 1.0 - s)
    )
    w = np.exp(logpmf)
    dens = ms / z if z else np.full(len(ms), math.inf)
    mean = mu_t * math.fsum(w * ms * cfg.prey_survival.evaluate(dens))
    if mean > bound * (1 + 1e-9):
        raise AssertionError(f"carrying prey mean {mean} exceeds its bound {bound}")
    return CarryingPreyMean(mean, bound)


def _xlogy(x: np.ndarray, y: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if y == 0.0:
        return np.where(x == 0, 0.0, -np.inf)
    return x * math.log(y)


def empirical_histogram(predators: np.ndarray, preys: np.ndarray) -> dict[tuple[int, int], int]:
    pairs, counts = np.unique(np.stack([predators, preys], axis=1), axis=0, return_counts=True)
    return {(int(a), int(b)): int(c) for (a, b), c in zip(pairs, counts)}


def distribution_distance(empirical: dict[tuple[int, int], int], exact: StepDistribution) -> float:
    """Total variation between a sample histogram and an exact law.

    Exact mass lost to truncation is counted entirely as disagreement.
    """
    total = sum(empirical.values())
    if total == 0:
        raise ValueError("empty histogram")
    probs = exact.probs
    diff = 0.0
    seen = 0.0
    for (i, j), c in empirical.items():
        e = c / total
        if i < probs.shape[0] and j < probs.shape[1]:
            q = probs[i, j]
            seen += q
            diff += abs(e - q)
        else:
            diff += e
    unseen = max(0.0, probs.sum() - seen)
    return 0.5 * (diff + unseen + exact.truncation_tail_mass)
