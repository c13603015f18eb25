# -*- coding: utf-8 -*-
#
# gapforge - certified prime gaps around prime powers
#
# This program is free software; you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by the
# Free Software Foundation; either version 2 of the License, or (at your
# option) any later version. Please read the COPYING file.
#

"""
Good integers: the weighted density r(n, u) of sieving primes s in S_u for
which n is shift solvable, compared against its mean r*(u), and the random
sieving vectors a used to check that typical n survive with probability
close to sigma^t.
"""

import math
from dataclasses import dataclass
from multiprocessing.pool import ThreadPool
from types import MappingProxyType

import numpy as np

from gapforge_errors import DomainError
from gapforge_log import LOGGER
from gapforge_residues import admissible_classes, solvable_mask

TRIAL_CHUNK = 8192

##########
# Params #
##########

@dataclass(frozen=True)
class GoodSetParams:
    S: tuple
    k: int
    x: int
    y: int
    tolerance: float
    lenient: bool
    units: tuple
    S_u: MappingProxyType
    d: MappingProxyType
    r_star: MappingProxyType

@dataclass(frozen=True)
class SigmaValue:
    sigma: float
    terms: int

def good_set_params(S, k, x, y, tolerance=None, tolerance_exponent=1.0 / 40,
                    lenient=False):
    """Builds the per-class tables for the primes S and exponent k.

    tolerance is absolute when given, else (log x)^(-tolerance_exponent).
    """
    if k < 1:
        raise DomainError("k must be positive")
    if x > y:
        raise DomainError("empty window [%d, %d]" % (x, y))
    if tolerance is None:
        tolerance = math.log(x) ** (-tolerance_exponent) if x > 1 else 1.0
    units = tuple(u for u in range(k) if math.gcd(u, k) == 1)
    S = tuple(sorted(S))
    S_u, d, r_star = {}, {}, {}
    for u in units:
        S_u[u] = tuple(s for s in S if s % k == u)
        d[u] = math.gcd(u - 1, k)
        r_star[u] = sum(1.0 / s for s in S_u[u]) / d[u]
    return GoodSetParams(S, k, x, y, float(tolerance), bool(lenient), units,
                         MappingProxyType(S_u), MappingProxyType(d),
                         MappingProxyType(r_star))

def params_from_context(ctx, tolerance=None, tolerance_exponent=1.0 / 40,
                        lenient=False):
    return good_set_params(ctx.S, ctx.k, ctx.x, ctx.y, tolerance,
                           tolerance_exponent, lenient)

###############
# Good set G  #
###############

def r_of(n, u, params):
    """Sum of 1/s over s in S_u with n shift solvable mod s."""
    if u not in params.S_u:
        raise DomainError("u = %d is not a unit mod %d" % (u, params.k))
    return sum(1.0 / s for s in params.S_u[u]
               if solvable_mask(s, params.k)[n % s])

def r_values(numbers, u, params):
    """r(n, u) for every n of an integer array."""
    numbers = np.asarray(numbers, dtype=np.int64)
    total = np.zeros(len(numbers), dtype=np.float64)
    for s in params.S_u[u]:
        total += solvable_mask(s, params.k)[numbers % s] / float(s)
    return total

def r_tilde(u, params):
    """Exact mean of r(n, u) from the solvable class count (s-1)/gcd(s-1, k)."""
    return sum((s - 1) // math.gcd(s - 1, params.k) / float(s * s)
               for s in params.S_u[u])

def mean_r(u, params):
    """Mean of r(n, u) over n uniform mod every s, by counting masks."""
    return sum(np.count_nonzero(solvable_mask(s, params.k)) / float(s * s)
               for s in params.S_u[u])

def _check_window(n, params):
    if not params.x <= n <= params.y:
        raise DomainError("n = %d outside [%d, %d]" % (n, params.x, params.y))

def in_G(n, params):
    _check_window(n, params)
    return all(abs(r_of(n, u, params) - params.r_star[u]) <= params.tolerance
               for u in params.units)

def in_Gp(n, p, shifts, params):
    """n and every translate n + (h_i - h_l)p are good.

    Translates leaving [x, y] fail unless params.lenient is set.
    """
    if not in_G(n, params):
        return False
    for i, h_i in enumerate(shifts):
        for l, h_l in enumerate(shifts):
            if i == l:
                continue
            m = n + (h_i - h_l) * p
            if not params.x <= m <= params.y:
                if params.lenient:
                    continue
                return False
            if not in_G(m, params):
                return False
    return True

def good_mask(lo, hi, params):
    """Boolean array over n in [lo, hi]: n lies in G."""
    _check_window(lo, params)
    _check_window(hi, params)
    numbers = np.arange(lo, hi + 1, dtype=np.int64)
    good = np.ones(len(numbers), dtype=bool)
    for u in params.units:
        good &= np.abs(r_values(numbers, u, params) - params.r_star[u]) \
            <= params.tolerance
    return good

def gp_mask(numbers, p, shifts, params):
    """Vectorized in_Gp; n outside [x, y] is never in G(p)."""
    numbers = np.asarray(numbers, dtype=np.int64)
    good = good_mask(params.x, params.y, params)

    def lookup(values, outside):
        inside = (values >= params.x) & (values <= params.y)
        found = np.full(len(values), outside, dtype=bool)
        found[inside] = good[values[inside] - params.x]
        return found

    mask = lookup(numbers, False)
    for i, h_i in enumerate(shifts):
        for l, h_l in enumerate(shifts):
            if i != l:
                mask &= lookup(numbers + (h_i - h_l) * p, params.lenient)
    return mask

def good_fraction(lo, hi, params):
    """Exact fraction of [lo, hi] inside G."""
    mask = good_mask(lo, hi, params)
    return float(np.count_nonzero(mask)) / len(mask)

def good_integers(params, t, lo=None):
    """The t smallest members of G from lo on."""
    found = []
    n = params.x if lo is None else lo
    while len(found) < t:
        if n > params.y:
            raise DomainError("fewer than %d good integers in the window" % t)
        if in_G(n, params):
            found.append(n)
        n += 1
    return found

##################
# Random vectors #
##################

def sigma(params):
    """Product of (1 - 1/s) over S, multiplied in descending order."""
    value = 1.0
    for s in sorted(params.S, reverse=True):
        value *= 1.0 - 1.0 / s
    return SigmaValue(value, len(params.S))

def sample_a(params, seed):
    """Uniform independent a_s from each admissible family."""
    rng = np.random.default_rng(seed)
    chosen = {}
    for s in params.S:
        family = admissible_classes(s, params.k)
        a = family.classes[int(rng.integers(len(family)))]
        chosen[s] = (a, family.witness(a))
    return MappingProxyType(chosen)

def exact_membership(n_list, params):
    """P(every n_i survives a uniform a) as a product over s."""
    probability = 1.0
    for s in sorted(params.S, reverse=True):
        family = admissible_classes(s, params.k)
        hit = set(n % s for n in n_list) & set(family.classes)
        probability *= 1.0 - len(hit) / float(len(family))
    return probability

def _trial_chunk(n_array, params, seed, index, size):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    alive = np.ones(size, dtype=bool)
    for s in params.S:
        classes = np.array(admissible_classes(s, params.k).classes,
                           dtype=np.int64)
        drawn = classes[rng.integers(len(classes), size=size)]
        for n in n_array:
            alive &= drawn != n % s
    return int(np.count_nonzero(alive))

def mc_membership(n_list, params, trials, seed, workers=1):
    """Monte-Carlo estimate of P(all n_i in S(a)) with its standard error.

    Trials run in fixed chunks seeded from (seed, chunk index), so the
    estimate does not depend on the worker count.
    """
    if not n_list:
        return 1.0, 0.0
    if trials < 1:
        raise DomainError("trials must be positive")
    n_array = [int(n) for n in n_list]
    chunks = [(index, min(TRIAL_CHUNK, trials - start))
              for index, start in enumerate(range(0, trials, TRIAL_CHUNK))]

    def job(chunk):
        return _trial_chunk(n_array, params, seed, chunk[0], chunk[1])

    if workers > 1 and len(chunks) > 1:
        with ThreadPool(workers) as pool:
            hits = pool.map(job, chunks)
    else:
        hits = [job(chunk) for chunk in chunks]
    estimate = sum(hits) / float(trials)
    stderr = math.sqrt(estimate * (1.0 - estimate) / trials)
    LOGGER.debug("mc_membership t=%d trials=%d estimate=%.6f"
                 % (len(n_array), trials, estimate))
    return estimate, stderr

def sieved_count(lo, hi, a_part):
    """Survivors of the classes a_part in [lo, hi] against sigma * length."""
    numbers = np.arange(lo, hi + 1, dtype=np.int64)
    alive = np.ones(len(numbers), dtype=bool)
    expected = float(len(numbers))
    for s in sorted(a_part, reverse=True):
        alive &= numbers % s != a_part[s][0]
        expected *= 1.0 - 1.0 / s
    return int(np.count_nonzero(alive)), expected
