# -*- coding: utf-8 -*-

import itertools
import math

import numpy as np
import pytest
import sympy

from gapforge_concentration import (exact_membership, good_fraction,
                                    good_integers, good_mask, good_set_params,
                                    gp_mask, in_G, in_Gp, mc_membership,
                                    mean_r, params_from_context, r_of, r_tilde,
                                    r_values, sample_a, sieved_count, sigma)
from gapforge_errors import DomainError
from gapforge_residues import admissible_classes

DESK_S = list(sympy.primerange(8, 301))


def _desk_params(k, tolerance=0.1):
    return good_set_params(DESK_S, k, 10 ** 5, 10 ** 5 + 4000, tolerance)


def _matched_integers(params, t, band=0.005):
    """Greedy n_list whose exact survival stays within band of sigma^t."""
    target = sigma(params).sigma
    chosen = []
    for n in range(params.x, params.y + 1):
        if len(chosen) == t:
            break
        if not in_G(n, params):
            continue
        trial = chosen + [n]
        if abs(exact_membership(trial, params) / target ** len(trial) - 1) < band:
            chosen = trial
    assert len(chosen) == t
    return chosen

##########
# Params #
##########

def test_class_tables():
    params = good_set_params(DESK_S, 6, 10 ** 5, 10 ** 5 + 100)
    assert params.units == (1, 5)
    assert params.d[1] == 6 and params.d[5] == 2
    assert sorted(params.S_u[1] + params.S_u[5]) == DESK_S
    for u in params.units:
        assert all(s % 6 == u for s in params.S_u[u])
        assert params.r_star[u] == pytest.approx(
            sum(1.0 / s for s in params.S_u[u]) / params.d[u])
    assert params.tolerance == pytest.approx(math.log(10 ** 5) ** (-1 / 40.0))


def test_context_params(toy_context):
    params = params_from_context(toy_context, tolerance=0.2)
    assert params.S == toy_context.S
    assert (params.x, params.y) == (20, 50)
    assert params.tolerance == 0.2
    with pytest.raises(DomainError):
        good_set_params([3], 0, 1, 10)
    with pytest.raises(DomainError):
        good_set_params([3], 2, 10, 1)

###############
# r and good  #
###############

def test_r_of_examples():
    params = good_set_params([7], 3, 1, 100)
    assert r_of(2, 1, params) == pytest.approx(1.0 / 7)
    assert r_of(1, 1, params) == 0.0
    assert r_of(9, 2, params) == 0.0
    with pytest.raises(DomainError):
        r_of(5, 0, params)


def test_r_values_agree_and_average_out():
    params = _desk_params(3)
    numbers = np.arange(10 ** 5, 10 ** 5 + 60000, dtype=np.int64)
    for u in params.units:
        values = r_values(numbers, u, params)
        for n in (10 ** 5, 10 ** 5 + 17, 10 ** 5 + 999):
            assert values[n - 10 ** 5] == pytest.approx(r_of(n, u, params))
        assert r_tilde(u, params) == pytest.approx(mean_r(u, params))
        assert values.mean() == pytest.approx(mean_r(u, params), abs=2e-3)
        gap = sum(1.0 / (params.d[u] * s * s) for s in params.S_u[u])
        assert params.r_star[u] - r_tilde(u, params) == pytest.approx(gap)


def test_good_mask_matches_in_G():
    params = _desk_params(2, tolerance=0.05)
    lo, hi = params.x, params.x + 300
    mask = good_mask(lo, hi, params)
    assert mask.tolist() == [in_G(n, params) for n in range(lo, hi + 1)]
    assert good_fraction(lo, hi, params) == pytest.approx(mask.mean())
    with pytest.raises(DomainError):
        in_G(params.x - 1, params)


@pytest.mark.parametrize("lenient", [False, True])
def test_gp_mask_matches_in_Gp(lenient):
    params = good_set_params(DESK_S, 2, 10 ** 5, 10 ** 5 + 600, 0.08,
                             lenient=lenient)
    shifts = (0, 2, 6)
    numbers = np.arange(params.x, params.y + 1, dtype=np.int64)
    mask = gp_mask(numbers, 11, shifts, params)
    assert mask.tolist() == [in_Gp(int(n), 11, shifts, params) for n in numbers]
    # a single form has no translates
    assert gp_mask(numbers, 11, (0,), params).tolist() == \
        good_mask(params.x, params.y, params).tolist()


def test_good_integers():
    params = _desk_params(2, tolerance=0.05)
    found = good_integers(params, 5)
    assert len(found) == 5 and found == sorted(found)
    assert all(in_G(n, params) for n in found)
    skipped = [n for n in range(params.x, found[-1]) if n not in found]
    assert not any(in_G(n, params) for n in skipped)
    tight = good_set_params(DESK_S, 2, 10 ** 5, 10 ** 5 + 10, 1e-9)
    with pytest.raises(DomainError):
        good_integers(tight, 3)

##################
# Random vectors #
##################

def test_sigma_and_empty_S():
    params = _desk_params(2)
    value = sigma(params)
    assert value.terms == len(DESK_S)
    assert value.sigma == pytest.approx(math.prod(1 - 1.0 / s for s in DESK_S))
    empty = good_set_params([], 2, 10, 20)
    assert sigma(empty).sigma == 1.0
    assert len(sample_a(empty, 0)) == 0


def test_sample_a_is_seeded_and_uniform():
    params = good_set_params([7], 3, 1, 100)
    assert dict(sample_a(params, 42)) == dict(sample_a(params, 42))
    family = admissible_classes(7, 3)
    assert family.classes == (0, 2)
    counts = {0: 0, 2: 0}
    for seed in range(10000):
        a, witness = sample_a(params, seed)[7]
        assert family.witness(a) == witness
        counts[a] += 1
    # 5 sigma of a fair coin over 10^4 draws
    assert abs(counts[0] - 5000) < 250


def test_exact_membership_enumerates():
    params = good_set_params([3, 5, 7, 11], 2, 1, 1000)
    families = [admissible_classes(s, 2).classes for s in params.S]
    for n_list in ([4], [1, 8], [6, 9, 10]):
        survive = 0
        total = 0
        for vector in itertools.product(*families):
            total += 1
            survive += all(n % s != a for n in n_list
                           for s, a in zip(params.S, vector))
        assert exact_membership(n_list, params) == pytest.approx(survive / total)


def test_mc_membership_small_cases():
    params = good_set_params([5], 2, 1, 100)
    assert mc_membership([], params, 100, 0) == (1.0, 0.0)
    assert mc_membership([1], params, 2000, 0) == (1.0, 0.0)
    estimate, stderr = mc_membership([2], params, 20000, 3)
    assert exact_membership([2], params) == 0.5
    assert abs(estimate - 0.5) <= 4 * stderr
    with pytest.raises(DomainError):
        mc_membership([2], params, 0, 0)


def test_mc_membership_ignores_worker_count():
    params = _desk_params(2)
    n_list = [params.x, params.x + 1]
    assert mc_membership(n_list, params, 30000, 9) == \
        mc_membership(n_list, params, 30000, 9, workers=4)


def test_sieved_count():
    a_part = {3: (0, 0), 5: (2, 1), 7: (4, 1)}
    count, expected = sieved_count(100, 400, a_part)
    brute = sum(1 for n in range(100, 401)
                if n % 3 and n % 5 != 2 and n % 7 != 4)
    assert count == brute
    assert expected == pytest.approx(301 * (2 / 3.0) * (4 / 5.0) * (6 / 7.0))


@pytest.mark.slow
@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("t", [1, 2, 3])
def test_survival_matches_sigma_power(k, t):
    params = _desk_params(k)
    n_list = _matched_integers(params, t)
    exact = exact_membership(n_list, params)
    estimate, stderr = mc_membership(n_list, params, 10 ** 5, seed=2024)
    target = sigma(params).sigma ** t
    assert abs(estimate - exact) <= 4 * stderr
    assert abs(estimate - target) <= max(3 * stderr, 0.01 * target)
