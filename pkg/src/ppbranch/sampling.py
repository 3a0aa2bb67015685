"""Reproducible random variates for the control and reproduction phases.

Streams are counter-based: a Philox generator keyed by
``(root_seed, replicate_index)`` whose counter is positioned at
``(draw_counter, 0, generation_index, 0)``. Any draw can therefore be
replayed from the tuple alone, independent of how replicates were scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import OffspringKind, OffspringLaw

# A binomial size or population count beyond these bounds ends the trajectory.
BINOMIAL_SIZE_LIMIT = 2**62
COUNT_LIMIT = 2**63 - 1

_MASK64 = 2**64 - 1


class _Exploded:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EXPLODED"

    def __reduce__(self):
        return (_Exploded, ())


EXPLODED = _Exploded()
"""Signal value returned instead of a count once a population diverges."""


@dataclass(frozen=True)
class SeedStream:
    root_seed: int
    replicate_index: int = 0
    generation_index: int = 0
    draw_counter: int = 0

    def at_generation(self, n: int) -> SeedStream:
        return replace(self, generation_index=n, draw_counter=0)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key, counter=self.counter))

    @property
    def key(self) -> list[int]:
        return [self.root_seed & _MASK64, self.replicate_index & _MASK64]

    @property
    def counter(self) -> list[int]:
        return [self.draw_counter, 0, self.generation_index, 0]


def derive_stream(root_seed: int, replicate_index: int) -> SeedStream:
    if replicate_index < 0:
        raise ValueError("replicate_index must be non-negative")
    return SeedStream(int(root_seed), int(replicate_index))


def reposition(rng: np.random.Generator, generation: int) -> None:
    """Move a stream generator to the start of ``generation`` in place."""
    bg = rng.bit_generator
    st = bg.state
    st["state"]["counter"][:] = (0, 0, generation, 0)
    st["buffer_pos"] = 4
    st["has_uint32"] = 0
    st["uinteger"] = 0
    bg.state = st


def _rng(stream: SeedStream | np.random.Generator) -> np.random.Generator:
    if isinstance(stream, SeedStream):
        return stream.generator()
    return stream


def sample_binomial(n: int, p: float, stream: SeedStream | np.random.Generator):
    """Exact Binomial(n, p) draw, or EXPLODED when ``n`` exceeds the size limit.

    numpy's sampler uses inversion for ``n*min(p, 1-p) <= 30`` and BTPE
    rejection otherwise; neither approximates.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if n > BINOMIAL_SIZE_LIMIT:
        return EXPLODED
    if n == 0 or p == 0.0:
        return 0
    if p == 1.0:
        return int(n)
    return int(_rng(stream).binomial(n, p))


def sample_offspring_sum(law: OffspringLaw, count: int, stream: SeedStream | np.random.Generator):
    """Total offspring of ``count`` independent parents, or EXPLODED on overflow."""
    if count == 0:
        return 0
    if count * law.mean > 2**62:
        return EXPLODED
    rng = _rng(stream)
    if law.kind is OffspringKind.GEOMETRIC:
        # sum of `count` geometric(p) failures-before-success ~ NegBin(count, p)
        total = int(rng.negative_binomial(count, law.p))
    else:
        pmf = law.pmf
        if len(pmf) == 1:
            return 0
        counts = rng.multinomial(count, pmf)
        total = int(np.dot(counts, np.arange(len(pmf), dtype=np.int64)))
    if total > COUNT_LIMIT:
        return EXPLODED
    return total


def offspring_sums(law: OffspringLaw, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorised offspring totals for an array of parent counts."""
    counts = np.asarray(counts, dtype=np.int64)
    out = np.zeros(counts.shape, dtype=np.int64)
    pos = counts > 0
    if not pos.any():
        return out
    if law.kind is OffspringKind.GEOMETRIC:
        out[pos] = rng.negative_binomial(counts[pos], law.p)
        return out
    support = np.arange(len(law.pmf), dtype=np.int64)
    idx = np.flatnonzero(pos)
    chunk = max(1, 2_000_000 // len(support))
    for start in range(0, len(idx), chunk):
        sel = idx[start : start + chunk]
        out[sel] = rng.multinomial(counts[sel], law.pmf) @ support
    return out


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """Exact Binomial(n, p) probabilities for k = 0..n (small n)."""
    return np.array([math.comb(n, k) * p**k * (1.0 - p) ** (n - k) for k in range(n + 1)])
