# -*- coding: utf-8 -*-

import itertools
import math

import numpy as np
import pytest
import sympy

from gapforge_concentration import good_mask, good_set_params
from gapforge_errors import CapacityError, DomainError
from gapforge_weights import (F_eval, I_g, J_g, LinearSystem, apply_lattice,
                              build_lattice, character_restricted_sum_check,
                              concentration_moment_check, default_R,
                              find_admissible_tuple, gate_check, is_admissible,
                              is_admissible_system, lp_system, lp_weights,
                              omega_table, psi, singular_series,
                              theorem77_check, theorem78_check, tuple_system,
                              w_final, w_final_array, w_star, w_star_array,
                              weight_table)

TWIN = tuple_system((0, 2))
TWIN_CONSTANT = 1.3203236316937


def _naive_weights(lattice, system, lo, hi):
    """Direct loop over every stored divisor vector for every n."""
    out = []
    for n in range(lo, hi + 1):
        values = [a * n + b for a, b in system.forms]
        if any(v % p == 0 for p in system.W_primes for v in values):
            out.append(0.0)
            continue
        total = 0.0
        for d, value in lattice.lam.items():
            if all(v % d_i == 0 for v, d_i in zip(values, d)):
                total += value
        out.append(total * total)
    return np.array(out)


def _root_count(system, p):
    return len(set(n for n in range(p) for a, b in system.forms
                   if (a * n + b) % p == 0))

#################
# Admissibility #
#################

def test_find_admissible_tuple():
    assert find_admissible_tuple(1) == (0,)
    assert find_admissible_tuple(2) == (0, 2)
    assert find_admissible_tuple(3) == (0, 2, 6)
    for r in range(1, 12):
        shifts = find_admissible_tuple(r)
        assert len(shifts) == r and is_admissible(shifts)
        assert max(shifts) <= 2 * r * r
    assert not is_admissible((0, 2, 4))
    with pytest.raises(DomainError):
        find_admissible_tuple(0)


def test_admissible_systems_and_roots():
    assert is_admissible_system(TWIN)
    assert not is_admissible_system(LinearSystem(((1, 0), (1, 1))))
    table = omega_table(TWIN, 3)
    assert table.omega[2] == 1 and table.omega[3] == 2
    assert table.roots[3] == (0, 1)
    assert table.j[(2, 0)] == 0
    assert (table.j[(3, 0)], table.j[(3, 1)]) == (0, 1)
    triple = omega_table(tuple_system((0, 2, 6)), 50)
    assert all(triple.omega[p] == 3 for p in sympy.primerange(7, 51))
    with pytest.raises(DomainError):
        omega_table(TWIN, 1)
    with pytest.raises(DomainError):
        LinearSystem(((1, 0), (1, 0)))


def test_default_R_window():
    for x in (10 ** 4, 10 ** 6, 10 ** 9):
        R = default_R(x)
        assert x ** 0.025 <= R < x ** (0.25 / 3)

###################
# Singular series #
###################

def test_singular_series():
    twin = singular_series(TWIN, 1)
    assert abs(twin.value - TWIN_CONSTANT) <= twin.tail_bound
    assert singular_series(TWIN, 2).value == pytest.approx(twin.value / 2,
                                                           rel=1e-12)
    coarse = singular_series(TWIN, 1, cutoff=10 ** 4)
    assert abs(coarse.value - twin.value) < coarse.tail_bound
    assert singular_series(tuple_system((0,)), 1).value == pytest.approx(1.0)
    with pytest.raises(DomainError):
        singular_series(LinearSystem(((1, 0), (1, 1))), 1)

############
# Cutoff F #
############

def test_psi_shape():
    assert psi(0.0) == 1.0 and psi(0.1) == 1.0
    assert psi(1.0) == 0.0 and psi(3.0) == 0.0
    grid = np.linspace(0.0, 1.2, 601)
    values = psi(grid)
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(values) <= 1e-15)


def test_F_eval_support_and_monotonicity():
    assert F_eval(np.zeros(3)) == 1.0
    assert F_eval(np.array([0.6, 0.5])) == 0.0
    rng = np.random.default_rng(17)
    for _ in range(1000):
        t = rng.random(2) * 0.8
        smaller = t * rng.random(2)
        assert F_eval(t) <= F_eval(smaller) + 1e-15


def test_integrals():
    indicator = lambda t: np.all(t < 1.0, axis=-1).astype(float)
    assert I_g(1, indicator, support=1.0).value == pytest.approx(1.0)
    for g in (2, 3):
        quad = I_g(g)
        assert 0 < quad.value <= 1.0 / math.factorial(g)
        mc = I_g(g, method="mc", samples=200000, seed=1)
        assert abs(quad.value - mc.value) <= \
            4 * math.hypot(quad.error, mc.error) + 1e-3 * quad.value
        quad = J_g(g)
        mc = J_g(g, method="mc", samples=100000, seed=2)
        assert abs(quad.value - mc.value) <= \
            4 * math.hypot(quad.error, mc.error) + 1e-3 * quad.value
    with pytest.raises(DomainError):
        I_g(2, method="simpson")

##################
# Lambda lattice #
##################

@pytest.mark.parametrize("shifts,R", [((0,), 10), ((0,), 50), ((0, 2), 50),
                                      ((0, 2), 200), ((0, 2, 6), 50)])
def test_weights_match_divisor_loop(shifts, R):
    system = tuple_system(shifts)
    lattice = build_lattice(system, R)
    table = apply_lattice(lattice, 1000, 1999, workers=3)
    naive = _naive_weights(lattice, system, 1000, 1999)
    scale = sum(abs(v) for v in lattice.lam.values()) ** 2
    np.testing.assert_allclose(table.w, naive, rtol=1e-9, atol=1e-9 * scale)
    assert np.all(table.w >= 0)


@pytest.mark.parametrize("shifts,R", [((0,), 50), ((0, 2), 200),
                                      ((0, 2, 6), 50), ((0, 4, 6), 120)])
def test_lambda_support_and_formula(shifts, R):
    system = tuple_system(shifts)
    lattice = build_lattice(system, R)
    roots = omega_table(system, R)
    excluded = system.W * system.B
    for d in lattice.lam:
        product = math.prod(d)
        assert product < R
        assert all(e == 1 for e in sympy.factorint(product).values())
        assert math.gcd(product, excluded) == 1
        for i, d_i in enumerate(d):
            a, b = system.forms[i]
            for p in sympy.primefactors(d_i):
                assert roots.j[(p, -b * pow(a, -1, p) % p)] == i

    # lambda_d = mu(d) d sum_{d | r} y_r / prod (p - omega(p))
    expected = {}
    for r, y_r in lattice.y.items():
        primes = sympy.primefactors(math.prod(r))
        phi = math.prod(p - _root_count(system, p) for p in primes)
        for d in itertools.product(*[sympy.divisors(r_i) for r_i in r]):
            expected[d] = expected.get(d, 0.0) + y_r / phi
    assert set(expected) == set(lattice.lam)
    for d, total in expected.items():
        sign = (-1) ** len(sympy.primefactors(math.prod(d)))
        assert lattice.lam[d] == pytest.approx(sign * math.prod(d) * total,
                                               rel=1e-9)


def test_lattice_budget():
    with pytest.raises(CapacityError) as info:
        build_lattice(tuple_system((0, 2, 6)), 10 ** 6, budget=1000)
    assert info.value.estimate > 1000


def test_workers_do_not_change_weights():
    lattice = build_lattice(TWIN, 200)
    one = apply_lattice(lattice, 5000, 9000)
    many = apply_lattice(lattice, 5000, 9000, workers=4)
    assert np.array_equal(one.w, many.w)


def test_lp_weights_reuse_the_tuple_lattice():
    lattice = build_lattice(TWIN, 50)
    for p in (101, 211):
        reused = lp_weights(lattice, (0, 2), p, 10000, 12000)
        rebuilt = apply_lattice(build_lattice(lp_system((0, 2), p, R=50), 50),
                                10000, 12000)
        assert reused.system.forms == ((1, 0), (1, 2 * p))
        np.testing.assert_allclose(reused.w, rebuilt.w, rtol=1e-9,
                                   atol=1e-12 * rebuilt.w.max())
    with pytest.raises(DomainError):
        lp_weights(lattice, (0, 6), 101, 10000, 12000)

######################
# Restricted weights #
######################

def test_w_star_and_gates():
    table = weight_table(TWIN, (2000, 6000), R=50)
    n = next(n for n in range(2000, 6001)
             if n % 7 != 1 and table.weight(n) > 0 and (1 - n) % 7 in (1, 6))
    assert w_star(7, n, 3, table) == pytest.approx(3 * table.weight(n))
    one = next(n for n in range(2000, 6001) if n % 7 == 1)
    assert w_star(7, one, 3, table) == 0.0

    params = good_set_params(list(sympy.primerange(8, 100)), 2, 2000, 6000,
                             tolerance=0.1)
    p = 13
    lp_table = weight_table(lp_system((0,), p), (2000, 6000), R=50)
    single = w_final_array(p, 2, lp_table, params, (0,))
    gated = w_star_array(p, 2, lp_table) * good_mask(2000, 6000, params)
    assert np.array_equal(single, gated)

    lp_table = weight_table(lp_system((0, 2), p), (2000, 6000), R=50)
    star = w_star_array(p, 2, lp_table)
    final = w_final_array(p, 2, lp_table, params, (0, 2))
    assert np.all(final <= star)
    assert np.all(star <= math.gcd(p - 1, 2) * lp_table.w + 1e-12)
    for n in (2000, 2500, 5999):
        assert w_final(p, n, 2, lp_table, params, (0, 2)) == \
            final[n - 2000]
    assert w_final(p, 1999, 2, lp_table, params, (0, 2)) == 0.0
    report = gate_check(lp_table, p, 2, params, (0, 2))
    assert report["sum_w_final"] <= report["sum_w_star"]

##########
# Checks #
##########

def test_theorem77_report_scales_with_lambda():
    lattice = build_lattice(TWIN, 200)
    base = theorem77_check(apply_lattice(lattice, 10000, 20000))
    scaled = theorem77_check(apply_lattice(lattice, 10000, 20000, scale=3.0))
    assert scaled["predicted"] == base["predicted"]
    assert scaled["sum_w"] == pytest.approx(9.0 * base["sum_w"], rel=1e-12)
    assert set(base["terms"]) >= {"B_factor", "singular_series", "count",
                                  "log_R_power", "I_g"}

    doubled = theorem77_check(weight_table(TWIN, (10000, 20000), R=400))
    assert doubled["predicted"] / base["predicted"] == pytest.approx(
        (math.log(400) / math.log(200)) ** 2)


def test_theorem78_report():
    table = weight_table(TWIN, (10000, 30000), R=100)
    report = theorem78_check(table)
    assert report["terms"]["prime_count"] == \
        len(list(sympy.primerange(10000, 30001)))
    assert report["L_exceeds_R"]
    assert report["sum_prime_w"] <= float(table.w.sum())
    assert report["ratio"] > 0


def test_character_restricted_sums():
    table = weight_table(TWIN, (10 ** 5, 2 * 10 ** 5 - 1), R=50)
    control = character_restricted_sum_check(table, 101, 1)
    assert control["D"] == 1
    assert control["deviation"] == pytest.approx(control["stratum_mass"],
                                                 rel=1e-9)
    for p in (101, 211):
        for k in (2, 3):
            report = character_restricted_sum_check(table, p, k)
            assert report["D"] == math.gcd(p - 1, k)
            assert abs(report["ratio"] - 1.0) < 0.25


def test_concentration_moments():
    params = good_set_params(list(sympy.primerange(8, 100)), 2, 5000, 9000,
                             tolerance=0.1)
    table = weight_table(lp_system((0, 2), 13), (5000, 8000), R=50)
    report = concentration_moment_check(table, 13, 1, params, (0, 2))
    assert report["centered"] == pytest.approx(report["centered_direct"],
                                               rel=1e-6)
    assert report["r_star"] == params.r_star[1]
    assert len(report["predicted"]) == 3

    empty = good_set_params([], 2, 5000, 9000, tolerance=0.1)
    report = concentration_moment_check(table, 13, 1, empty, (0, 2))
    assert report["moments"][1] == 0.0 and report["moments"][2] == 0.0


@pytest.mark.slow
def test_selberg_case_ratio():
    table = weight_table(tuple_system((0,)), (1, 10 ** 6), R=1000, workers=4)
    report = theorem77_check(table)
    assert 0.5 <= report["ratio"] <= 2.0
