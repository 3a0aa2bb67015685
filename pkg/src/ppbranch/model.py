"""Model parameters, survival/competition families and analytic one-step moments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

TOL = 1e-12
MAX_EXPLICIT_SUPPORT = 10_000


class ParameterError(ValueError):
    """Raised when a model constraint is violated at construction time."""


def density(predators: int, preys: int) -> float:
    """Preys per predator, +inf when predators are absent."""
    if predators == 0:
        return math.inf
    return preys / predators


# ---------------------------------------------------------------------------
# offspring laws


class OffspringKind(str, Enum):
    GEOMETRIC = "geometric"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class OffspringLaw:
    """Reproduction law on {0, 1, 2, ...}.

    Geometric laws use ``p * (1 - p) ** k``; explicit laws carry a finite pmf
    over ``0..len(pmf) - 1``.
    """

    kind: OffspringKind
    p: float | None = None
    pmf: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind is OffspringKind.GEOMETRIC:
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ParameterError(f"geometric success probability must lie in (0, 1), got {self.p}")
        else:
            if not self.pmf:
                raise ParameterError("explicit offspring law needs a non-empty pmf")
            if len(self.pmf) > MAX_EXPLICIT_SUPPORT + 1:
                raise ParameterError(f"explicit pmf support exceeds {MAX_EXPLICIT_SUPPORT}")
            if any(q < 0 for q in self.pmf):
                raise ParameterError("pmf entries must be non-negative")
            if abs(math.fsum(self.pmf) - 1.0) > TOL:
                raise ParameterError(f"pmf sums to {math.fsum(self.pmf)!r}, not 1")

    @classmethod
    def geometric(cls, p: float) -> OffspringLaw:
        return cls(OffspringKind.GEOMETRIC, p=float(p))

    @classmethod
    def explicit(cls, pmf: Sequence[float] | dict[int, float]) -> OffspringLaw:
        if isinstance(pmf, dict):
            size = max(pmf) + 1
            pmf = [float(pmf.get(k, 0.0)) for k in range(size)]
        return cls(OffspringKind.EXPLICIT, pmf=tuple(float(q) for q in pmf))

    @property
    def mean(self) -> float:
        if self.kind is OffspringKind.GEOMETRIC:
            return (1.0 - self.p) / self.p
        return math.fsum(k * q for k, q in enumerate(self.pmf))

    @property
    def variance(self) -> float:
        if self.kind is OffspringKind.GEOMETRIC:
            return (1.0 - self.p) / self.p**2
        m = self.mean
        return math.fsum(q * (k - m) ** 2 for k, q in enumerate(self.pmf))

    def prob(self, k: int) -> float:
        if k < 0:
            return 0.0
        if self.kind is OffspringKind.GEOMETRIC:
            return self.p * (1.0 - self.p) ** k
        return self.pmf[k] if k < len(self.pmf) else 0.0

    def truncated_pmf(self, tail_mass: float = 1e-9) -> tuple[np.ndarray, float]:
        """Return ``(pmf[0..K], dropped)`` with ``dropped <= tail_mass``."""
        if self.kind is OffspringKind.EXPLICIT:
            return np.array(self.pmf), 0.0
        q = 1.0 - self.p
        # P(X > K) = q**(K+1)
        last = max(0, math.ceil(math.log(tail_mass) / math.log(q)) - 1)
        ks = np.arange(last + 1)
        return self.p * q**ks, q ** (last + 1)

    def to_dict(self) -> dict:
        if self.kind is OffspringKind.GEOMETRIC:
            return {"kind": "geometric", "p": self.p}
        return {"kind": "explicit", "pmf": list(self.pmf)}


# ---------------------------------------------------------------------------
# survival functions


class SurvivalFamily(str, Enum):
    G1 = "g1"
    G2 = "g2"
    TABLE = "table"


@dataclass(frozen=True)
class SurvivalFunction:
    """Density-dependent survival probability r(x), x = preys per predator.

    ``derived`` is the base k for g1 and the exponent l for g2. Table
    functions interpolate linearly between ``points`` and approach ``rho2``
    hyperbolically past the last point.
    """

    family: SurvivalFamily
    rho1: float
    rho2: float
    gamma: float
    derived: float | None = None
    points: tuple[tuple[float, float], ...] | None = None
    _log_k: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.family is SurvivalFamily.G1:
            object.__setattr__(self, "_log_k", math.log(self.derived))
        elif self.family is SurvivalFamily.TABLE:
            pts = self.points
            if not pts or pts[0][0] != 0.0:
                raise ParameterError("table survival function must start at x = 0")
            xs = [x for x, _ in pts]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ParameterError("table grid must be strictly increasing")
            ys = [y for _, y in pts]
            if any(not 0.0 <= y <= 1.0 for y in ys) or any(b < a for a, b in zip(ys, ys[1:])):
                raise ParameterError("table values must be non-decreasing probabilities")
            if ys[-1] > self.rho2:
                raise ParameterError("table values may not exceed the stated limit rho2")

    def __call__(self, x: float) -> float:
        return self.rho2 - self.gap(x)

    def gap(self, x: float) -> float:
        """``rho2 - r(x)``, evaluated without cancellation."""
        if x == math.inf:
            return 0.0
        if self.family is SurvivalFamily.G1:
            return (self.rho2 - self.rho1) * math.exp(-x * self._log_k)
        if self.family is SurvivalFamily.G2:
            try:
                xl = x**self.derived
            except OverflowError:
                return 0.0
            return (self.rho2 - self.rho1) / (xl + 1.0)
        pts = self.points
        x_last, y_last = pts[-1]
        if x >= x_last:
            if x_last == 0.0:
                return self.rho2 - y_last
            return (self.rho2 - y_last) * x_last / x
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return self.rho2 - float(np.interp(x, xs, ys))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Vectorised r(x); +inf entries map to rho2."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.rho2)
        finite = np.isfinite(x)
        xf = x[finite]
        if self.family is SurvivalFamily.G1:
            out[finite] = self.rho2 - (self.rho2 - self.rho1) * np.exp(-xf * self._log_k)
        elif self.family is SurvivalFamily.G2:
            with np.errstate(over="ignore"):
                out[finite] = self.rho2 - (self.rho2 - self.rho1) / (xf**self.derived + 1.0)
        else:
            out[finite] = [self(v) for v in xf]
        return out

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "rho1": self.rho1, "rho2": self.rho2, "gamma": self.gamma}
        if self.family is SurvivalFamily.TABLE:
            d["points"] = [list(p) for p in self.points]
        return d


def _check_rates(rho1: float, rho2: float, gamma: float, mu: float) -> None:
    if not 0.0 < rho1 < rho2 < 1.0:
        raise ParameterError(f"need 0 < rho1 < rho2 < 1, got rho1={rho1}, rho2={rho2}")
    if gamma <= 0:
        raise ParameterError(f"need gamma > 0, got {gamma}")
    if not rho1 * mu < 1.0:
        raise ParameterError(f"need rho1*mu < 1, got {rho1 * mu}")
    if not 1.0 < rho2 * mu:
        raise ParameterError(f"need rho2*mu > 1, got {rho2 * mu}")


def build_g1(rho1: float, rho2: float, gamma: float, mu: float) -> SurvivalFunction:
    """Exponential-approach survival function with r(gamma) = 1/mu."""
    _check_rates(rho1, rho2, gamma, mu)
    k = ((rho2 * mu - rho1 * mu) / (rho2 * mu - 1.0)) ** (1.0 / gamma)
    return SurvivalFunction(SurvivalFamily.G1, rho1, rho2, gamma, derived=k)


def build_g2(rho1: float, rho2: float, gamma: float, mu: float) -> SurvivalFunction:
    """Rational survival function with r(gamma) = 1/mu; needs a positive exponent."""
    _check_rates(rho1, rho2, gamma, mu)
    if gamma == 1.0:
        raise ParameterError("g2 inapplicable for these parameters: log(gamma) = 0")
    ell = math.log((1.0 - rho1 * mu) / (rho2 * mu - 1.0)) / math.log(gamma)
    if not ell > 0:
        raise ParameterError(f"g2 inapplicable for these parameters: l = {ell:.6g} <= 0")
    return SurvivalFunction(SurvivalFamily.G2, rho1, rho2, gamma, derived=ell)


def build_table(
    points: Sequence[tuple[float, float]], rho1: float, rho2: float, gamma: float
) -> SurvivalFunction:
    pts = tuple((float(x), float(y)) for x, y in points)
    return SurvivalFunction(SurvivalFamily.TABLE, float(rho1), float(rho2), float(gamma), points=pts)


def eval_survival(f: SurvivalFunction, x: float) -> float:
    return f(x)


# ---------------------------------------------------------------------------
# competition (carrying capacity)


class CompetitionFamily(str, Enum):
    BEVERTON_HOLT = "beverton_holt"
    HASSEL = "hassel"
    RICKER = "ricker"


@dataclass(frozen=True)
class CompetitionFunction:
    """Prey survival probability s(z, K) under competition for resources."""

    family: CompetitionFamily
    K: float
    v: float = 1.0

    def __post_init__(self) -> None:
        if not self.K > 0:
            raise ParameterError(f"carrying capacity K must be positive, got {self.K}")
        if self.family is CompetitionFamily.HASSEL and self.v < 1:
            raise ParameterError(f"Hassel exponent needs v >= 1, got {self.v}")
        if self.family is CompetitionFamily.RICKER and not self.v > 1:
            raise ParameterError(f"Ricker base needs v > 1, got {self.v}")

    def __call__(self, preys: float) -> float:
        if self.family is CompetitionFamily.BEVERTON_HOLT:
            return self.K / (self.K + preys)
        if self.family is CompetitionFamily.HASSEL:
            return (self.K / (self.K + preys)) ** self.v
        return self.v ** (-preys / self.K)

    def to_dict(self) -> dict:
        d: dict = {"family": self.family.value, "K": self.K}
        if self.family is not CompetitionFamily.BEVERTON_HOLT:
            d["v"] = self.v
        return d


def eval_competition(c: CompetitionFunction, preys: float) -> float:
    return c(preys)


# ---------------------------------------------------------------------------
# full configuration


@dataclass(frozen=True)
class ModelConfig:
    predator_law: OffspringLaw
    prey_law: OffspringLaw
    predator_survival: SurvivalFunction
    prey_survival: SurvivalFunction
    carrying: CompetitionFunction | None = None
    initial: tuple[int, int] = (1, 1)

    def to_dict(self) -> dict:
        return {
            "predator_law": self.predator_law.to_dict(),
            "prey_law": self.prey_law.to_dict(),
            "predator_survival": self.predator_survival.to_dict(),
            "prey_survival": self.prey_survival.to_dict(),
            "carrying": self.carrying.to_dict() if self.carrying else None,
            "initial": list(self.initial),
        }


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float


def control_probabilities(cfg: ModelConfig, predators: int, preys: int) -> tuple[float, float]:
    """Survival probabilities of one predator and one prey in state (z, z~).

    The z~ = 0 and z = 0 boundary laws fall out of r(0) = rho1 and r(inf) = rho2.
    """
    d = density(predators, preys)
    return cfg.predator_survival(d), cfg.prey_survival(d)


def conditional_moments(cfg: ModelConfig, state: tuple[int, int]) -> tuple[MomentPair, MomentPair]:
    """Exact mean and variance of (Z_{n+1}, Z~_{n+1}) given (Z_n, Z~_n) = state."""
    if cfg.carrying is not None:
        raise ValueError("conditional_moments covers the model without carrying capacity; "
                         "use oracle.exact_carrying_prey_mean instead")
    z, zt = state
    r, rt = control_probabilities(cfg, z, zt)
    out = []
    for count, prob, law in ((z, r, cfg.predator_law), (zt, rt, cfg.prey_law)):
        if count == 0:
            out.append(MomentPair(0.0, 0.0))
            continue
        mu, s2 = law.mean, law.variance
        out.append(MomentPair(count * prob * mu, count * prob * s2 + count * prob * (1 - prob) * mu**2))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# validation


def _law_violations(name: str, law: OffspringLaw) -> list[str]:
    out = []
    if law.prob(0) + law.prob(1) >= 1.0:
        out.append(f"{name}: p0+p1 >= 1")
    if not law.variance > 0:
        out.append(f"{name}: offspring variance must be positive")
    return out


def _survival_violations(name: str, f: SurvivalFunction, mu: float) -> list[str]:
    out = []
    if not 0.0 < f.rho1:
        out.append(f"{name}: rho1 <= 0")
    if not f.rho1 < f.rho2:
        out.append(f"{name}: rho1 >= rho2")
    if not f.rho2 < 1.0:
        out.append(f"{name}: rho2 >= 1")
    if not f.rho1 * mu < 1.0:
        out.append(f"{name}: rho1*mu >= 1 ({f.rho1}*{mu:g} = {f.rho1 * mu:g})")
    if not f.rho2 * mu > 1.0:
        out.append(f"{name}: rho2*mu <= 1 ({f.rho2}*{mu:g} = {f.rho2 * mu:g})")
    if abs(f(0.0) - f.rho1) > TOL:
        out.append(f"{name}: r(0) != rho1")
    if mu > 0 and abs(f(f.gamma) - 1.0 / mu) > TOL:
        out.append(f"{name}: r(gamma) != 1/mu ({f(f.gamma):.15g} vs {1.0 / mu:.15g})")
    grid = np.concatenate([[0.0], np.logspace(-6, 8, 400)])
    vals = [f(x) for x in grid]
    if any(b <= a for a, b in zip(vals, vals[1:]) if b < f.rho2):
        out.append(f"{name}: survival function not strictly increasing")
    if any(not f.rho1 - TOL <= v <= f.rho2 for v in vals):
        out.append(f"{name}: survival function leaves [rho1, rho2]")
    return out


def validate_config(cfg: ModelConfig) -> list[str]:
    """Return every violated model constraint; an empty list means valid."""
    problems: list[str] = []
    problems += _law_violations("predator_law", cfg.predator_law)
    problems += _law_violations("prey_law", cfg.prey_law)
    problems += _survival_violations("predator_survival", cfg.predator_survival, cfg.predator_law.mean)
    problems += _survival_violations("prey_survival", cfg.prey_survival, cfg.prey_law.mean)
    if cfg.predator_survival.gamma != cfg.prey_survival.gamma:
        problems.append(
            f"gamma mismatch between species ({cfg.predator_survival.gamma} vs {cfg.prey_survival.gamma})"
        )
    z0, zt0 = cfg.initial
    if z0 < 1 or zt0 < 1:
        problems.append(f"initial counts must be >= 1, got {cfg.initial}")
    return problems


# ---------------------------------------------------------------------------
# tail decay of rho2 - r(x)


@dataclass
class TailDecayReport:
    nu: float
    max_value: float
    last_value: float
    eventually_nonincreasing: bool
    numerically_bounded: bool
    analytic_pass: bool | None

    @property
    def passes(self) -> bool:
        if self.analytic_pass is None:
            return self.numerically_bounded
        return self.analytic_pass and self.numerically_bounded


def check_tail_decay(f: SurvivalFunction, nu: float, grid: Sequence[float] | None = None) -> TailDecayReport:
    """Inspect ``(rho2 - r(x)) * x**nu`` on a grid reaching far into the tail.

    The sequence counts as bounded when its value at the end of the grid does
    not exceed twice its maximum over the first half of the grid.
    """
    if grid is None:
        grid = np.logspace(0, 8, 161)
    xs = np.asarray(grid, dtype=float)
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be strictly increasing")
    vals = np.array([f.gap(x) * x**nu for x in xs])
    half = len(vals) // 2
    head_max = float(vals[: max(half, 1)].max())
    bounded = bool(vals[-1] <= 2.0 * head_max + 1e-300)
    tail = vals[half:]
    nonincreasing = bool(np.all(np.diff(tail) <= 1e-12 * max(head_max, 1e-300)))
    if f.family is SurvivalFamily.G1:
        analytic = True
    elif f.family is SurvivalFamily.G2:
        analytic = nu <= f.derived + 1e-12
    else:
        analytic = nu <= 1.0
    return TailDecayReport(nu, float(vals.max()), float(vals[-1]), nonincreasing, bounded, analytic)
