import math
from dataclasses import replace

import numpy as np
import pytest

from ppbranch.model import CompetitionFamily, CompetitionFunction, conditional_moments
from ppbranch.oracle import (
    StepDistribution,
    distribution_distance,
    exact_carrying_prey_mean,
    exact_step_distribution,
)
from ppbranch.sampling import derive_stream
from ppbranch.simulator import step_batch


def test_absorbing_point_mass(ex1):
    d = exact_step_distribution(ex1, (0, 0))
    assert d.support == {(0, 0): 1.0}


def test_single_predator_no_prey(ex1):
    d = exact_step_distribution(ex1, (1, 0))
    prey = d.marginal(1)
    assert prey[0] == pytest.approx(1 - d.truncation_tail_mass, abs=1e-15)
    pred = d.marginal(0)
    rho1, p = 0.1, 1 / 3
    assert pred[0] == pytest.approx(0.9 + rho1 * p, abs=1e-15)
    for k in range(1, 10):
        assert pred[k] == pytest.approx(rho1 * p * (1 - p) ** k, rel=1e-12)


def test_predator_mean_matches_formula(ex1):
    d = exact_step_distribution(ex1, (2, 3), offspring_truncation=(2 / 3) ** 61)
    assert d.marginal_moments(0)[0] == pytest.approx(conditional_moments(ex1, (2, 3))[0].mean, abs=1e-6)


@pytest.mark.parametrize("z", range(5))
@pytest.mark.parametrize("zt", range(5))
def test_moments_match_formulas(ex1, z, zt):
    d = exact_step_distribution(ex1, (z, zt))
    assert abs(d.probs.sum() - (1 - d.truncation_tail_mass)) < 1e-10
    assert d.truncation_tail_mass < 1e-6
    analytic = conditional_moments(ex1, (z, zt))
    for species in (0, 1):
        mean, var = d.marginal_moments(species)
        size = d.probs.shape[species]
        budget = max(10 * d.truncation_tail_mass * size**2, 1e-9)
        assert mean == pytest.approx(analytic[species].mean, abs=budget)
        assert var == pytest.approx(analytic[species].variance, abs=budget * size)


def test_oracle_refuses_big_states(ex1):
    with pytest.raises(ValueError):
        exact_step_distribution(ex1, (7, 1))


def test_carrying_mean_boundaries(ex3):
    assert exact_carrying_prey_mean(ex3, (4, 0)).mean == 0.0
    for state in [(1, 1), (5, 50), (3, 700), (0, 300), (20, 5000)]:
        res = exact_carrying_prey_mean(ex3, state)
        assert res.mean <= res.upper_bound * (1 + 1e-9)


def test_carrying_mean_without_competition(ex1):
    huge = replace(ex1, carrying=CompetitionFunction(CompetitionFamily.BEVERTON_HOLT, 1e15))
    for state in [(1, 3), (5, 100), (2, 40)]:
        plain = conditional_moments(ex1, state)[1].mean
        assert exact_carrying_prey_mean(huge, state).mean == pytest.approx(plain, abs=1e-9)


def test_carrying_mean_against_simulator(ex3):
    exact = exact_carrying_prey_mean(ex3, (5, 5000)).mean
    preys = step_batch(ex3, (5, 5000), 100_000, derive_stream(4, 0).generator()).preys.astype(float)
    assert abs(preys.mean() - exact) <= 4 * preys.std(ddof=1) / math.sqrt(len(preys))


def test_distance_edge_cases():
    point = StepDistribution(np.array([[1.0]]), 0.0)
    assert distribution_distance({(0, 0): 10}, point) == 0.0
    other = StepDistribution(np.array([[0.0, 0.0], [0.0, 1.0]]), 0.0)
    assert distribution_distance({(0, 0): 10}, other) == 1.0
    lossy = StepDistribution(np.array([[0.9]]), 0.1)
    assert distribution_distance({(0, 0): 5}, lossy) == pytest.approx(0.1)
