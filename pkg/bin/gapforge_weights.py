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
Multidimensional sieve weights for a system of linear forms
L_i(n) = a_i*n + b_i.

The lambda lattice is built once from y_r = (WB/phi(WB))^g * G_WB * F(...)
and then applied to disjoint n ranges: every lambda_d adds itself to the
single residue class mod d_1*...*d_g on which d_i | L_i(n) for all i.
"""

import math
import itertools
from dataclasses import dataclass, field
from functools import reduce
from multiprocessing.pool import ThreadPool
from types import MappingProxyType

import numpy as np

from gapforge_arith import (Congruence, crt_combine, is_prime, prime_factors,
                            prime_range)
from gapforge_concentration import gp_mask, r_values
from gapforge_errors import CapacityError, DomainError
from gapforge_log import LOGGER
from gapforge_residues import solvable_mask

PSI_VARIANT = "psi-smoothstep-v1"
PSI_FLAT = 0.1
SERIES_CUTOFF = 10 ** 5
LATTICE_BUDGET = 5 * 10 ** 6
MC_CHUNK = 8192
QUADRATURE_NODES = {1: 400, 2: 120, 3: 48, 4: 24, 5: 14, 6: 10}

#################
# Linear forms  #
#################

@dataclass(frozen=True)
class LinearSystem:
    forms: tuple
    B: int = 1
    theta: float = 0.25
    R: int = 1000

    def __post_init__(self):
        forms = tuple((int(a), int(b)) for a, b in self.forms)
        if not forms:
            raise DomainError("a linear system needs at least one form")
        if len(set(forms)) != len(forms):
            raise DomainError("linear forms must be distinct")
        if self.B < 1:
            raise DomainError("B must be positive")
        object.__setattr__(self, "forms", forms)

    @property
    def g(self):
        return len(self.forms)

    @property
    def W_primes(self):
        """The primes <= 2g^2 not dividing B."""
        return tuple(p for p in prime_range(0, 2 * self.g ** 2) if self.B % p)

    @property
    def W(self):
        return reduce(lambda acc, p: acc * p, self.W_primes, 1)

    def excluded_primes(self):
        """Prime divisors of W*B."""
        return sorted(set(self.W_primes) | set(prime_factors(self.B)))

    def values(self, numbers, index):
        a, b = self.forms[index]
        return a * np.asarray(numbers, dtype=np.int64) + b

def tuple_system(shifts, B=1, theta=0.25, R=1000):
    """The forms n + h_i."""
    return LinearSystem(tuple((1, h) for h in shifts), B, theta, R)

def lp_system(shifts, p, B=1, theta=0.25, R=1000):
    """The forms n + h_i*p."""
    return LinearSystem(tuple((1, h * p) for h in shifts), B, theta, R)

def default_R(x, theta=0.25):
    """x^(theta/4), inside [x^(theta/10), x^(theta/3))."""
    return max(2, int(round(x ** (theta / 4.0))))

def _covers(shifts, p):
    return len(set(h % p for h in shifts)) >= p

def is_admissible(shifts):
    """No prime p <= len(shifts) sees every residue class."""
    return not any(_covers(shifts, p) for p in prime_range(0, len(shifts)))

def find_admissible_tuple(r):
    """Greedy smallest-next admissible r-tuple inside [0, 2r^2]."""
    if r < 1:
        raise DomainError("r must be positive")
    primes = prime_range(0, r)
    shifts = [0]
    candidate = 1
    while len(shifts) < r:
        if candidate > 2 * r * r:
            raise DomainError("no admissible %d-tuple in [0, %d]" % (r, 2 * r * r))
        trial = shifts + [candidate]
        if not any(_covers(trial, p) for p in primes):
            shifts = trial
        candidate += 1
    return tuple(shifts)

def _roots(system, p):
    """Returns {root: least form index} for n in [0, p)."""
    roots = {}
    for index, (a, b) in enumerate(system.forms):
        if a % p:
            root = -b * pow(a, -1, p) % p
            roots.setdefault(root, index)
        elif b % p == 0:
            for n in range(p):
                roots.setdefault(n, index)
    return roots

def is_admissible_system(system):
    """omega(p) < p wherever a form can vanish identically or p <= g."""
    suspects = set(prime_range(0, system.g))
    for a, b in system.forms:
        common = math.gcd(a, b)
        if common > 1:
            suspects.update(prime_factors(common))
    return all(len(_roots(system, p)) < p for p in suspects)

@dataclass(frozen=True)
class OmegaTable:
    omega: MappingProxyType
    roots: MappingProxyType
    j: MappingProxyType

def omega_table(system, p_max):
    """Roots of prod L_i(n) mod every p <= p_max, with least form indices.

    Roots are residues in [0, p); j maps (p, root) to a 0-based form index.
    """
    if p_max < 2:
        raise DomainError("p_max must be at least 2")
    omega, roots, j = {}, {}, {}
    for p in prime_range(0, p_max):
        found = _roots(system, p)
        omega[p] = len(found)
        roots[p] = tuple(sorted(found))
        for root, index in found.items():
            j[(p, root)] = index
    return OmegaTable(MappingProxyType(omega), MappingProxyType(roots),
                      MappingProxyType(j))

###################
# Singular series #
###################

@dataclass(frozen=True)
class SingularSeries:
    value: float
    excluded: int
    cutoff: int
    tail_bound: float

def _discriminant_primes(system):
    terms = [a for a, _ in system.forms]
    terms.extend(a1 * b2 - b1 * a2 for (a1, b1), (a2, b2)
                 in itertools.combinations(system.forms, 2))
    primes = set()
    for term in terms:
        if abs(term) > 1:
            primes.update(prime_factors(abs(term)))
    return sorted(primes)

def singular_series(system, D=1, cutoff=SERIES_CUTOFF):
    """Product of (1 - omega(p)/p)(1 - 1/p)^-g over p not dividing D."""
    g = system.g
    log_value = 0.0
    primes = prime_range(0, cutoff)
    for p in primes + [q for q in _discriminant_primes(system) if q > cutoff]:
        if D % p == 0:
            continue
        omega = len(_roots(system, p))
        if omega >= p:
            raise DomainError("system is not admissible at p = %d" % p)
        log_value += math.log1p(-omega / p) - g * math.log1p(-1.0 / p)
    value = math.exp(log_value)
    tail = value * math.expm1(g * g / float(max(cutoff - g, 1)))
    return SingularSeries(value, D, cutoff, tail)

#################
# Cutoff F      #
#################

def _bump(s):
    s = np.asarray(s, dtype=np.float64)
    positive = s > 0
    return np.where(positive, np.exp(-1.0 / np.where(positive, s, 1.0)), 0.0)

def psi(t):
    """Smooth step: 1 on [0, 1/10], 0 on [1, inf), non-increasing between."""
    s = (1.0 - np.asarray(t, dtype=np.float64)) / (1.0 - PSI_FLAT)
    up, down = _bump(s), _bump(1.0 - s)
    value = up / (up + down)
    return float(value) if np.ndim(value) == 0 else value

def F_eval(t, g=None):
    """psi(sum t) * prod psi(t_i/U_g) / (1 + T_g t_i) over the last axis."""
    t = np.asarray(t, dtype=np.float64)
    g = t.shape[-1] if g is None else g
    T_g = g * math.log(g)
    U_g = g ** -0.5
    value = psi(t.sum(axis=-1)) * np.prod(psi(t / U_g) / (1.0 + T_g * t),
                                          axis=-1)
    return float(value) if np.ndim(value) == 0 else value

@dataclass(frozen=True)
class IntegralValue:
    value: float
    error: float

def _grid(g, nodes, support):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = (x + 1.0) * support / 2.0
    w = w * support / 2.0
    points = np.stack(np.meshgrid(*([x] * g), indexing="ij"), axis=-1)
    weights = reduce(np.multiply.outer, [w] * g)
    return points, weights, w

def _quadrature_I(g, F, nodes, support):
    points, weights, _ = _grid(g, nodes, support)
    return float(np.sum(weights * F(points) ** 2))

def _quadrature_J(g, F, nodes, support):
    points, _, w = _grid(g, nodes, support)
    inner = np.tensordot(F(points), w, axes=([-1], [0]))
    if g == 1:
        return float(inner) ** 2
    outer = reduce(np.multiply.outer, [w] * (g - 1))
    return float(np.sum(outer * inner ** 2))

def _integral(kind, g, F, support, nodes, method, samples, seed):
    if g < 1:
        raise DomainError("g must be positive")
    F = F or (lambda t: F_eval(t, g))
    support = g ** -0.5 if support is None else support
    if method == "quadrature":
        if g > 6 and nodes is None:
            raise DomainError("tensor quadrature only up to g = 6")
        nodes = nodes or QUADRATURE_NODES[g]
        rule = _quadrature_I if kind == "I" else _quadrature_J
        value = rule(g, F, nodes, support)
        coarse = rule(g, F, max(4, 2 * nodes // 3), support)
        return IntegralValue(value, abs(value - coarse))
    if method != "mc":
        raise DomainError("unknown integration method '%s'" % method)
    rng = np.random.default_rng(seed)
    if kind == "I":
        points = rng.random((samples, g)) * support
        values = F(points) ** 2 * support ** g
    elif g == 1:
        return _integral("J", g, F, support, nodes, "quadrature", samples, seed)
    else:
        x, w = np.polynomial.legendre.leggauss(nodes or 64)
        x = (x + 1.0) * support / 2.0
        w = w * support / 2.0
        parts = []
        for start in range(0, samples, MC_CHUNK):
            size = min(MC_CHUNK, samples - start)
            outer = rng.random((size, g - 1)) * support
            points = np.concatenate(
                [np.repeat(outer[:, None, :], len(x), axis=1),
                 np.broadcast_to(x[None, :, None], (size, len(x), 1))], axis=-1)
            parts.append((F(points) @ w) ** 2 * support ** (g - 1))
        values = np.concatenate(parts)
    return IntegralValue(float(values.mean()),
                         float(values.std(ddof=1) / math.sqrt(samples)))

def I_g(g, F=None, support=None, nodes=None, method="quadrature",
        samples=200000, seed=0):
    """Integral of F^2 over [0, support]^g."""
    return _integral("I", g, F, support, nodes, method, samples, seed)

def J_g(g, F=None, support=None, nodes=None, method="quadrature",
        samples=200000, seed=0):
    """Integral of (integral of F dt_g)^2 over the first g-1 coordinates."""
    return _integral("J", g, F, support, nodes, method, samples, seed)

##################
# Lambda lattice #
##################

@dataclass(frozen=True)
class Lattice:
    system: LinearSystem
    R: int
    lam: MappingProxyType
    y: MappingProxyType
    norm: float

def _vector(assignment, g):
    vector = [1] * g
    for p, index in assignment:
        vector[index] *= p
    return tuple(vector)

def _assignment(vector):
    pairs = []
    for index, d in enumerate(vector):
        pairs.extend((p, index) for p in prime_factors(d))
    return tuple(sorted(pairs))

def _slots(system, R):
    """Allowed form indices per prime < R coprime to WB."""
    excluded = system.W * system.B
    slots = []
    for p in prime_range(0, R - 1):
        if excluded % p == 0:
            continue
        indices = sorted(set(_roots(system, p).values()))
        if indices:
            slots.append((p, indices))
    return slots

def _walk(slots, R, budget):
    found = []
    stack = [(0, 1, ())]
    while stack:
        index, product, assignment = stack.pop()
        found.append(assignment)
        if len(found) > budget:
            raise CapacityError("lambda lattice passed %d vectors" % budget,
                                estimate=len(found))
        for nxt in range(index, len(slots)):
            p, indices = slots[nxt]
            if product * p >= R:
                break
            for i in indices:
                stack.append((nxt + 1, product * p, assignment + ((p, i),)))
    return found

def build_lattice(system, R=None, budget=LATTICE_BUDGET, cutoff=SERIES_CUTOFF):
    """Computes y_r and lambda_d over the support prod d_i < R."""
    R = system.R if R is None else R
    if R < 2:
        raise DomainError("R must be at least 2")
    g = system.g
    estimate = int(R * max(1.0, math.log(R)) ** (g - 1))
    if estimate > budget:
        raise CapacityError("lambda lattice for R = %d, g = %d needs about %d "
                            "vectors" % (R, g, estimate), estimate=estimate)
    if not is_admissible_system(system):
        raise DomainError("linear system is not admissible")

    excluded = system.W * system.B
    ratio = 1.0
    for p in system.excluded_primes():
        ratio *= p / (p - 1.0)
    series = singular_series(system, excluded, cutoff).value
    norm = ratio ** g * series
    log_R = math.log(R)

    omega = {}
    totals = {}
    y = {}
    for assignment in _walk(_slots(system, R), R, budget):
        r = _vector(assignment, g)
        value = F_eval(np.log(np.array(r, dtype=np.float64)) / log_R, g)
        if value <= 0:
            continue
        y[r] = norm * value
        phi = 1.0
        for p, _ in assignment:
            if p not in omega:
                omega[p] = len(_roots(system, p))
            phi *= p - omega[p]
        share = y[r] / phi
        for size in range(len(assignment) + 1):
            for subset in itertools.combinations(assignment, size):
                totals[subset] = totals.get(subset, 0.0) + share

    lam = {}
    for subset, total in totals.items():
        product = 1
        for p, _ in subset:
            product *= p
        lam[_vector(subset, g)] = (-1) ** len(subset) * product * total
    LOGGER.debug("lattice g=%d R=%d: %d y values, %d lambda values"
                 % (g, R, len(y), len(lam)))
    return Lattice(system, R, MappingProxyType(dict(sorted(lam.items()))),
                   MappingProxyType(y), norm)

###########
# Weights #
###########

@dataclass(frozen=True, eq=False)
class WeightTable:
    system: LinearSystem
    R: int
    lam: MappingProxyType
    y: MappingProxyType
    lo: int
    hi: int
    w: np.ndarray
    T_g: float = field(init=False)
    U_g: float = field(init=False)

    def __post_init__(self):
        g = self.system.g
        object.__setattr__(self, "T_g", g * math.log(g))
        object.__setattr__(self, "U_g", g ** -0.5)
        self.w.flags.writeable = False

    def numbers(self):
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def weight(self, n):
        if not self.lo <= n <= self.hi:
            raise DomainError("n = %d outside the table" % n)
        return float(self.w[n - self.lo])

def _classes(system, lam):
    """(residue, modulus, lambda) for every lambda_d."""
    out = []
    for vector, value in lam.items():
        congruences = []
        for p, index in _assignment(vector):
            a, b = system.forms[index]
            congruences.append(Congruence(-b * pow(a, -1, p) % p, p))
        if congruences:
            combined = crt_combine(congruences)
            out.append((int(combined.residue), int(combined.modulus), value))
        else:
            out.append((0, 1, value))
    return out

def _w_gate(system, numbers):
    keep = np.ones(len(numbers), dtype=bool)
    for p in system.W_primes:
        reduced = numbers % p
        for a, b in system.forms:
            keep &= (a % p * reduced + b % p) % p != 0
    return keep

def _weights_range(system, classes, lo, hi):
    sums = np.zeros(hi - lo + 1, dtype=np.float64)
    for residue, modulus, value in classes:
        first = lo + (residue - lo) % modulus
        if first <= hi:
            sums[first - lo::modulus] += value
    w = sums * sums
    w[~_w_gate(system, np.arange(lo, hi + 1, dtype=np.int64))] = 0.0
    return w

def apply_lattice(lattice, lo, hi, workers=1, system=None, scale=1.0):
    """w_n = (sum of lambda_d with d_i | L_i(n))^2 for n in [lo, hi]."""
    if lo > hi:
        raise DomainError("empty range %d:%d" % (lo, hi))
    system = system or lattice.system
    lam = lattice.lam
    if scale != 1.0:
        lam = MappingProxyType(dict((d, value * scale)
                                    for d, value in lam.items()))
    classes = _classes(system, lam)
    pieces = max(1, min(workers, hi - lo + 1))
    edges = np.linspace(lo, hi + 1, pieces + 1).astype(np.int64).tolist()
    ranges = [(edges[i], edges[i + 1] - 1) for i in range(pieces)
              if edges[i] < edges[i + 1]]

    def job(bounds):
        return _weights_range(system, classes, bounds[0], bounds[1])

    if len(ranges) > 1:
        with ThreadPool(workers) as pool:
            parts = pool.map(job, ranges)
    else:
        parts = [job(bounds) for bounds in ranges]
    return WeightTable(system, lattice.R, lam, lattice.y, lo, hi,
                       np.concatenate(parts))

def weight_table(system, n_range, R=None, workers=1, budget=LATTICE_BUDGET):
    """Builds the lambda lattice and the weights over n_range = (lo, hi)."""
    lattice = build_lattice(system, R, budget)
    return apply_lattice(lattice, n_range[0], n_range[1], workers)

def lp_weights(lattice, shifts, p, lo, hi, workers=1):
    """Weights of the forms n + h_i*p from the lattice of the forms n + h_i.

    Roots mod q != p collide in the same pattern for both systems, so for
    p > R only the singular series factor at p changes.
    """
    system = lp_system(shifts, p, lattice.system.B, lattice.system.theta,
                       lattice.R)
    if tuple(lattice.system.forms) != tuple((1, h) for h in shifts):
        raise DomainError("lattice was not built from the tuple %r" % (shifts,))
    if p < lattice.R or system.W % p == 0 or system.B % p == 0:
        return apply_lattice(build_lattice(system, lattice.R), lo, hi, workers)
    omega = len(set(h % p for h in shifts))
    scale = (1.0 - 1.0 / p) / (1.0 - omega / float(p))
    return apply_lattice(lattice, lo, hi, workers, system, scale)

def w_star(p, n, k, table):
    """D*w_n when n is shift solvable mod p, else 0; D = gcd(p-1, k)."""
    if not solvable_mask(p, k)[n % p]:
        return 0.0
    return math.gcd(p - 1, k) * table.weight(n)

def w_star_array(p, k, table):
    mask = solvable_mask(p, k)[table.numbers() % p]
    return math.gcd(p - 1, k) * table.w * mask

def w_final(p, n, k, table, params, shifts):
    """w*(p, n) of the shifted forms when n lies in G(p), else 0."""
    if not params.x <= n <= params.y:
        return 0.0
    mask = gp_mask(np.array([n], dtype=np.int64), p, shifts, params)
    return w_star(p, n, k, table) if mask[0] else 0.0

def w_final_array(p, k, table, params, shifts):
    return w_star_array(p, k, table) * gp_mask(table.numbers(), p, shifts,
                                               params)

##########
# Checks #
##########

def _phi_ratio(B):
    ratio = 1.0
    for p in prime_factors(B) if B > 1 else ():
        ratio *= p / (p - 1.0)
    return ratio

def prime_mask(system, index, lo, hi):
    """L_index(n) prime for n in [lo, hi]."""
    values = system.values(np.arange(lo, hi + 1, dtype=np.int64), index)
    top, bottom = int(values.max()), int(values.min())
    if bottom >= 0 and top <= 4 * 10 ** 9 and top - bottom <= 10 ** 8:
        primes = np.array(prime_range(max(bottom - 1, 0), top), dtype=np.int64)
        return np.isin(values, primes)
    return np.array([is_prime(int(v)) if v > 1 else False for v in values],
                    dtype=bool)

def theorem77_check(table, cutoff=SERIES_CUTOFF, integral=None):
    """Sum of w_n against the predicted main term."""
    system = table.system
    g = system.g
    series = singular_series(system, system.B, cutoff).value
    count = table.hi - table.lo + 1
    integral = integral or I_g(g)
    b_factor = _phi_ratio(system.B) ** g
    predicted = b_factor * series * count * math.log(table.R) ** g * integral.value
    total = float(table.w.sum())
    return {"sum_w": total,
            "predicted": predicted,
            "ratio": total / predicted if predicted else None,
            "terms": {"B_factor": b_factor,
                      "singular_series": series,
                      "count": count,
                      "log_R_power": math.log(table.R) ** g,
                      "I_g": integral.value,
                      "I_g_error": integral.error}}

def theorem78_check(table, index=0, cutoff=SERIES_CUTOFF):
    """Sum of 1_P(L(n)) w_n against the J_g main term."""
    system = table.system
    g = system.g
    a_m = system.forms[index][0]
    series = singular_series(system, system.B, cutoff).value
    primes = prime_mask(system, index, table.lo, table.hi)
    count = int(np.count_nonzero(primes))
    J = J_g(g)
    local = 1.0
    for p in prime_factors(abs(a_m)) if abs(a_m) > 1 else ():
        if system.B % p:
            local *= (p - 1.0) / p
    log_R = math.log(table.R)
    predicted = (_phi_ratio(system.B) ** (g - 1) * series * count
                 * log_R ** (g + 1) * J.value * local)
    error_scale = (_phi_ratio(system.B) ** g * series * (table.hi - table.lo + 1)
                   * log_R ** (g + 1) * I_g(g).value)
    total = float(np.sum(table.w[primes]))
    smallest = int(system.values(np.array([table.lo]), index)[0])
    return {"sum_prime_w": total,
            "predicted": predicted,
            "ratio": total / predicted if predicted else None,
            "error_scale": error_scale,
            "L_exceeds_R": smallest > table.R,
            "terms": {"prime_count": count,
                      "singular_series": series,
                      "log_R_power": log_R ** (g + 1),
                      "J_g": J.value,
                      "J_g_error": J.error,
                      "local_factor": local}}

def character_restricted_sum_check(table, p, k, index=0):
    """Sums of w* against sums of w, plain and on prime values of L_index."""
    numbers = table.numbers()
    restricted = w_star_array(p, k, table)
    primes = prime_mask(table.system, index, table.lo, table.hi)
    sum_w = float(table.w.sum())
    sum_star = float(restricted.sum())
    prime_w = float(table.w[primes].sum())
    prime_star = float(restricted[primes].sum())
    return {"p": p, "k": k, "D": math.gcd(p - 1, k),
            "sum_w": sum_w,
            "sum_w_star": sum_star,
            "ratio": sum_star / sum_w if sum_w else None,
            "deviation": sum_w - sum_star,
            "stratum_mass": float(table.w[numbers % p == 1].sum()),
            "sum_prime_w": prime_w,
            "sum_prime_w_star": prime_star,
            "prime_ratio": prime_star / prime_w if prime_w else None}

def gate_check(table, p, k, params, shifts):
    """Mass kept by the G(p) gate: sum of w(p, n) over sum of w*(p, n)."""
    star = w_star_array(p, k, table)
    final = w_final_array(p, k, table, params, shifts)
    sum_star, sum_final = float(star.sum()), float(final.sum())
    return {"p": p, "k": k,
            "sum_w": float(table.w.sum()),
            "sum_w_star": sum_star,
            "sum_w_final": sum_final,
            "ratio": sum_final / sum_star if sum_star else None}

def _moments(weights, r, r_star):
    moments = [float(np.sum(weights * r ** j)) for j in range(3)]
    centered = moments[2] - 2 * r_star * moments[1] + r_star ** 2 * moments[0]
    direct = float(np.sum(weights * (r - r_star) ** 2))
    return {"moments": moments,
            "centered": centered,
            "centered_direct": direct,
            "centered_ratio": centered / moments[2] if moments[2] else None}

def concentration_moment_check(table, p, u, params, shifts, i=0, l=1,
                               index=0, cutoff=SERIES_CUTOFF):
    """Weighted moments of r(n + (h_i - h_l)p, u) for j = 0, 1, 2.

    Also reports the same moments restricted to prime values of L_index.
    """
    if len(shifts) < 2:
        i = l = 0
    numbers = table.numbers()
    translated = numbers + (shifts[i] - shifts[l]) * p
    r = r_values(translated, u, params)
    r_star = params.r_star[u]
    main = theorem77_check(table, cutoff)["predicted"]
    report = _moments(table.w, r, r_star)
    report["predicted"] = [main * r_star ** j for j in range(3)]
    primes = prime_mask(table.system, index, table.lo, table.hi)
    report["prime"] = _moments(table.w * primes, r, r_star)
    report.update({"p": p, "u": u, "i": i, "l": l, "r_star": r_star})
    return report
