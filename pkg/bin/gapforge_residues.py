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
k-th power residue logic.

A residue n mod p is "shift solvable" when n = 1 - (e+1)^k (mod p) for some
e != -1, that is when 1 - n is a nonzero k-th power. Witnesses are always
stored in that e-form. D = gcd(p-1, k) everywhere.
"""

import math
import cmath
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType

import numpy as np

from gapforge_arith import discrete_log, primitive_root
from gapforge_errors import DomainError

# Below this every question is answered by enumeration
ENUMERATION_BOUND = 100

def _kth_powers_array(p, k):
    """Returns c^k mod p for c = 1..p-1 as an int64 array."""
    base = np.arange(1, p, dtype=np.int64)
    power = np.ones(p - 1, dtype=np.int64)
    for _ in range(k):
        power = power * base % p
    return power

@lru_cache(maxsize=1024)
def solvable_mask(p, k):
    """Boolean array over residues mod p: True where n is shift solvable."""
    mask = np.zeros(p, dtype=bool)
    mask[(1 - _kth_powers_array(p, k)) % p] = True
    mask.flags.writeable = False
    return mask

@dataclass(frozen=True)
class ShiftSolvability:
    p: int
    k: int
    D: int
    solvable_residues: frozenset

def shift_solvability(p, k):
    """Returns the full solvability record for (p, k)."""
    residues = frozenset(np.flatnonzero(solvable_mask(p, k)).tolist())
    return ShiftSolvability(p, k, math.gcd(p - 1, k), residues)

def shift_solvable(n, p, k):
    """True iff (e+1)^k = 1 - n (mod p) has a solution with e != -1."""
    target = (1 - n) % p
    if target == 0:
        return False
    if p < ENUMERATION_BOUND:
        return bool(solvable_mask(p, k)[n % p])
    D = math.gcd(p - 1, k)
    return pow(target, (p - 1) // D, p) == 1

def kth_roots(a, p, k):
    """Returns every c in [1, p-1] with c^k = a (mod p), ascending."""
    a %= p
    if a == 0:
        return []
    if p < ENUMERATION_BOUND:
        powers = _kth_powers_array(p, k)
        return (np.flatnonzero(powers == a) + 1).tolist()
    order = p - 1
    D = math.gcd(order, k)
    rho = primitive_root(p)
    s = discrete_log(p, rho, a)
    if s % D:
        return []
    reduced = order // D
    t0 = (s // D) * pow(k // D, -1, reduced) % reduced if reduced > 1 else 0
    return sorted(pow(rho, t0 + j * reduced, p) for j in range(D))

def shift_witness(n, p, k):
    """Returns the smallest e with (e+1)^k = 1 - n (mod p), e != -1, or None."""
    roots = kth_roots(1 - n, p, k)
    if not roots:
        return None
    return roots[0] - 1

def indicator_via_characters(n, p, k):
    """Solvability through the index of 1 - n: 1 iff D divides it."""
    target = (1 - n) % p
    if target == 0:
        return 0
    s = discrete_log(p, primitive_root(p), target)
    return int(s % math.gcd(p - 1, k) == 0)

##############################
# Admissible class families  #
##############################

@dataclass(frozen=True)
class AdmissibleClassFamily:
    s: int
    k: int
    classes: tuple
    witnesses: MappingProxyType

    def witness(self, a):
        """Returns the stored e for class a."""
        return self.witnesses[a]

    def __len__(self):
        return len(self.classes)

@lru_cache(maxsize=None)
def admissible_classes(s, k):
    """The classes 1 - c^k mod s (c = 1..s-1) with their smallest e."""
    if s == 2:
        # degenerate: only c = 1 exists
        return AdmissibleClassFamily(2, k, (0,), MappingProxyType({0: 0}))
    if s < 2:
        raise DomainError("admissible_classes needs a prime s")
    values = (1 - _kth_powers_array(s, k)) % s
    classes, first = np.unique(values, return_index=True)
    witnesses = dict(zip(classes.tolist(), first.tolist()))
    return AdmissibleClassFamily(s, k, tuple(classes.tolist()),
                                 MappingProxyType(witnesses))

#####################
# Exceptional primes #
#####################

def ptilde_member(p, x, C0, k):
    """Membership in the pairing prime set for window (x, C0*x]."""
    if not x < p <= C0 * x:
        return False
    if k % 2:
        return p % 3 == 2
    return p % (2 * k) == 3

def legendre(a, p):
    """Legendre symbol by the Euler criterion, p an odd prime."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1

def qr_count(u, ptilde):
    """Number of p in ptilde with (-u/p) = 1."""
    return sum(1 for p in ptilde if legendre(-u, p) == 1)

def qr_good(u, ptilde, delta_threshold):
    """True iff more than delta_threshold primes have (-u/p) = 1."""
    return qr_count(u, ptilde) > delta_threshold

##############
# Characters #
##############

@lru_cache(maxsize=256)
def index_table(p):
    """ind[a] = discrete log of a to the smallest primitive root, ind[0] = -1."""
    rho = primitive_root(p)
    table = np.full(p, -1, dtype=np.int64)
    value = 1
    for t in range(p - 1):
        table[value] = t
        value = value * rho % p
    table.flags.writeable = False
    return table

def power_character(n, p, k, l):
    """The character n -> e(l*ind(n)/D) of order dividing D = gcd(p-1, k)."""
    if n % p == 0:
        return 0j
    D = math.gcd(p - 1, k)
    s = discrete_log(p, primitive_root(p), n % p)
    return cmath.exp(2j * math.pi * l * s / D)

def character_partial_sums(p, k, l):
    """Partial sums of the l-th power character over n = 1..p."""
    D = math.gcd(p - 1, k)
    ind = index_table(p)
    values = np.exp(2j * np.pi * l * ind[1:] / D)
    values = np.append(values, 0j)
    return np.cumsum(values)

def polya_vinogradov_bound(q):
    return math.sqrt(q) * math.log(q)
