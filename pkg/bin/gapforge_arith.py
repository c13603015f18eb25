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
Integer, modular and prime primitives shared by every other module.

Sieving is done with numpy over fixed-size segments, big integers and modular
exponentiation with gmpy2, and the Dickman function with a grid integrator
refined by Richardson extrapolation and read back through scipy splines.
"""

import os
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from multiprocessing.pool import ThreadPool

import gmpy2
import numpy as np
from scipy.interpolate import CubicSpline

from gapforge_errors import CapacityError, CoprimeError, DomainError
from gapforge_log import LOGGER

BLOCK_SIZE = 1 << 20
SIEVE_LIMIT = 4 * 10 ** 9
SMOOTH_LIMIT = 10 ** 8
PRP_ROUNDS = 7
FACTOR_SEGMENT = 1 << 16

CACHE_MAGIC = b"GFPT"
CACHE_VERSION = 1
CACHE_HEADER = struct.Struct("<4sIQQ")
CACHE_NAME = "primes.gfpt"

##########
# Sieves #
##########

@lru_cache(maxsize=16)
def small_primes(limit):
    """Returns the primes <= limit as a read-only numpy array."""
    if limit < 2:
        primes = np.zeros(0, dtype=np.int64)
    else:
        mark = np.ones(limit + 1, dtype=bool)
        mark[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if mark[p]:
                mark[p * p::p] = False
        primes = np.flatnonzero(mark).astype(np.int64)
    primes.flags.writeable = False
    return primes

def _sieve_segment(lo, hi, base):
    """Returns the primes in (lo, hi] using the base primes."""
    size = hi - lo
    mark = np.ones(size, dtype=bool)
    for p in base:
        p = int(p)
        if p * p > hi:
            break
        start = max(p * p, -(-(lo + 1) // p) * p)
        if start <= hi:
            mark[start - lo - 1::p] = False
    numbers = np.arange(lo + 1, hi + 1, dtype=np.int64)[mark]
    return numbers[numbers >= 2]

def _sieve_array(lo, hi, block_size=None, limit=None, workers=1):
    block_size = block_size or BLOCK_SIZE
    limit = SIEVE_LIMIT if limit is None else limit
    if lo < 0 or lo > hi:
        raise DomainError("bad prime range (%d, %d]" % (lo, hi))
    if hi > limit:
        raise CapacityError("prime range up to %d exceeds the sieve limit %d"
                            % (hi, limit), estimate=hi)
    if hi < 2:
        return np.zeros(0, dtype=np.int64)

    base = small_primes(math.isqrt(hi))
    segments = [(start, min(start + block_size, hi))
                for start in range(lo, hi, block_size)]

    def job(segment):
        return _sieve_segment(segment[0], segment[1], base)

    if workers > 1 and len(segments) > 1:
        with ThreadPool(workers) as pool:
            parts = pool.map(job, segments)
    else:
        parts = [job(segment) for segment in segments]
    LOGGER.debug("sieved (%d, %d] in %d segments" % (lo, hi, len(segments)))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

def prime_range(lo, hi, block_size=None, limit=None, workers=1):
    """Returns the primes p with lo < p <= hi in ascending order."""
    return _sieve_array(int(lo), int(hi), block_size, limit, workers).tolist()

###################
# PrimeTable type #
###################

@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Every prime <= limit, ascending, read-only."""
    limit: int
    primes: np.ndarray

    def __post_init__(self):
        self.primes.flags.writeable = False

    def __len__(self):
        return len(self.primes)

    def __contains__(self, n):
        index = int(np.searchsorted(self.primes, n))
        return index < len(self.primes) and int(self.primes[index]) == n

    def between(self, lo, hi):
        """Returns the primes in (lo, hi] as a list."""
        if hi > self.limit:
            raise CapacityError("table limit %d below %d" % (self.limit, hi),
                                estimate=hi)
        left = int(np.searchsorted(self.primes, lo, side="right"))
        right = int(np.searchsorted(self.primes, hi, side="right"))
        return self.primes[left:right].tolist()

def _encode_varints(gaps):
    if len(gaps) == 0 or int(gaps.max()) < 0x80:
        return gaps.astype(np.uint8).tobytes()
    out = bytearray()
    for gap in gaps.tolist():
        while gap >= 0x80:
            out.append((gap & 0x7F) | 0x80)
            gap >>= 7
        out.append(gap)
    return bytes(out)

def _decode_varints(data, count):
    raw = np.frombuffer(data, dtype=np.uint8)
    if len(raw) == count and (len(raw) == 0 or int(raw.max()) < 0x80):
        return raw.astype(np.int64)
    gaps = []
    value = shift = 0
    for byte in data:
        value |= (byte & 0x7F) << shift
        if byte & 0x80:
            shift += 7
        else:
            gaps.append(value)
            value = shift = 0
    if len(gaps) != count:
        raise ValueError("truncated prime cache")
    return np.array(gaps, dtype=np.int64)

def write_prime_cache(path, table):
    """Writes the table in the GFPT binary format."""
    gaps = np.diff(np.concatenate(([0], table.primes)))
    directory = os.path.dirname(path)
    if directory and not os.path.isdir(directory):
        os.makedirs(directory)
    tmp = path + ".tmp"
    with open(tmp, "wb") as _file:
        _file.write(CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION,
                                      table.limit, len(table.primes)))
        _file.write(_encode_varints(gaps))
    os.replace(tmp, path)

def read_prime_cache(path):
    """Reads a GFPT file, returns None when missing or unreadable."""
    try:
        with open(path, "rb") as _file:
            header = _file.read(CACHE_HEADER.size)
            magic, version, limit, count = CACHE_HEADER.unpack(header)
            if magic != CACHE_MAGIC or version != CACHE_VERSION:
                return None
            gaps = _decode_varints(_file.read(), count)
    except (IOError, OSError, struct.error, ValueError):
        return None
    return PrimeTable(limit, np.cumsum(gaps))

def prime_table(limit, cache_dir=None, workers=1, block_size=None,
                sieve_limit=None):
    """Returns a PrimeTable up to limit, through the cache when given."""
    path = os.path.join(cache_dir, CACHE_NAME) if cache_dir else None
    if path:
        cached = read_prime_cache(path)
        if cached is not None and cached.limit >= limit:
            end = int(np.searchsorted(cached.primes, limit, side="right"))
            return PrimeTable(limit, cached.primes[:end].copy())
    table = PrimeTable(limit, _sieve_array(0, limit, block_size, sieve_limit,
                                           workers))
    if path:
        try:
            write_prime_cache(path, table)
        except (IOError, OSError) as error:
            LOGGER.log("cannot write prime cache %s: %s" % (path, error))
    return table

#############
# Primality #
#############

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)
# Deterministic below 2^64
_BASES_64 = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
_PRP_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
              59, 61, 67, 71, 73, 79, 83, 89, 97)

def _strong_probable_prime(n, base):
    """Strong Fermat test of odd n > 2 to the given base."""
    base = gmpy2.mpz(base) % n
    if base == 0:
        return True
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = gmpy2.powmod(base, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = gmpy2.powmod(x, 2, n)
        if x == n - 1:
            return True
    return False

def is_prime(n, rounds=PRP_ROUNDS):
    """Deterministic below 2^64, strong PRP plus Lucas test above."""
    n = gmpy2.mpz(n)
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if n < 2 ** 64:
        return all(_strong_probable_prime(n, base) for base in _BASES_64)
    if gmpy2.is_square(n):
        return False
    for base in _PRP_BASES[:max(1, rounds)]:
        if not _strong_probable_prime(n, base):
            return False
    return bool(gmpy2.is_strong_selfridge_prp(n))

def prime_factors(n):
    """Returns {prime: exponent} of n by trial division."""
    n = int(n)
    if n < 1:
        raise DomainError("cannot factor %d" % n)
    factors = {}
    lo = 0
    while n > 1 and lo * lo <= n:
        hi = lo + FACTOR_SEGMENT
        for p in _sieve_segment(lo, hi, small_primes(math.isqrt(hi))).tolist():
            if p * p > n:
                break
            while n % p == 0:
                factors[p] = factors.get(p, 0) + 1
                n //= p
        lo = hi
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors

def _trial_split(n, bound):
    """Splits n into (small prime factors <= bound, cofactor)."""
    factors = {}
    for p in small_primes(bound).tolist():
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
    return factors, n

def prime_certificate(n, trial_bound=10000):
    """Pocklington certificate for n, or None when n-1 is not smooth enough.

    The certificate lists the trial-division factors q of n-1 (their product
    F must exceed sqrt(n)) and a base a with a^(n-1) = 1 and
    gcd(a^((n-1)/q) - 1, n) = 1 for every q.
    """
    n = gmpy2.mpz(n)
    if n < 2 ** 64:
        return {"n": str(n), "factors": [], "base": 0} if is_prime(n) else None
    factors, _ = _trial_split(n - 1, trial_bound)
    part = 1
    for q, e in factors.items():
        part *= gmpy2.mpz(q) ** e
    if part * part <= n:
        return None
    for base in range(2, 2 + 1000):
        if gmpy2.powmod(base, n - 1, n) != 1:
            return None
        if all(gmpy2.gcd(gmpy2.powmod(base, (n - 1) // q, n) - 1, n) == 1
               for q in factors):
            flat = []
            for q, e in sorted(factors.items()):
                flat.extend([q] * e)
            return {"n": str(n), "factors": flat, "base": base}
    return None

def check_prime_certificate(cert):
    """Re-verifies a certificate made by prime_certificate."""
    n = gmpy2.mpz(cert["n"])
    if not cert["factors"]:
        return n < 2 ** 64 and is_prime(n)
    part = gmpy2.mpz(1)
    for q in cert["factors"]:
        if not (q < 2 ** 64 and is_prime(q)):
            return False
        part *= q
    if (n - 1) % part != 0 or part * part <= n:
        return False
    base = cert["base"]
    if gmpy2.powmod(base, n - 1, n) != 1:
        return False
    return all(gmpy2.gcd(gmpy2.powmod(base, (n - 1) // q, n) - 1, n) == 1
               for q in set(cert["factors"]))

#################
# Chinese rests #
#################

@dataclass(frozen=True)
class Congruence:
    residue: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 2:
            raise DomainError("modulus %d below 2" % self.modulus)
        if not 0 <= self.residue < self.modulus:
            raise DomainError("residue %d outside [0, %d)"
                              % (self.residue, self.modulus))

def _offending_pair(moduli):
    for i, first in enumerate(moduli):
        for second in moduli[i + 1:]:
            if math.gcd(first, second) != 1:
                return first, second
    return moduli[0], moduli[-1]

def crt_combine(classes):
    """Combines pairwise coprime congruences through a product tree."""
    classes = list(classes)
    if not classes:
        raise DomainError("no congruences to combine")
    # (residue, modulus, leaf moduli)
    level = [(gmpy2.mpz(c.residue), gmpy2.mpz(c.modulus), [c.modulus])
             for c in classes]
    while len(level) > 1:
        merged = []
        for i in range(0, len(level) - 1, 2):
            (r1, m1, l1), (r2, m2, l2) = level[i], level[i + 1]
            if gmpy2.gcd(m1, m2) != 1:
                raise CoprimeError(*_offending_pair(l1 + l2))
            t = ((r2 - r1) * gmpy2.invert(m1, m2)) % m2
            merged.append((r1 + m1 * t, m1 * m2, l1 + l2))
        if len(level) % 2:
            merged.append(level[-1])
        level = merged
    residue, modulus, _ = level[0]
    return Congruence(int(residue), int(modulus))

def primorial(x):
    """Returns the product of all primes strictly below x."""
    if x < 2:
        raise DomainError("primorial needs x >= 2")
    return int(gmpy2.primorial(int(math.ceil(x)) - 1))

#####################
# Discrete logarithm #
#####################

@lru_cache(maxsize=4096)
def primitive_root(p):
    """Returns the smallest generator of the units mod p."""
    if p == 2:
        return 1
    order = p - 1
    divisors = [order // q for q in prime_factors(order)]
    for candidate in range(2, p):
        if all(pow(candidate, d, p) != 1 for d in divisors):
            return candidate
    raise DomainError("%d has no primitive root" % p)

def discrete_log(p, rho, a):
    """Returns s in [0, p-2] with rho^s = a (mod p), baby-step giant-step."""
    a %= p
    if a == 0:
        raise DomainError("discrete log of 0 mod %d" % p)
    if p == 2:
        return 0
    order = p - 1
    step = math.isqrt(order)
    if step * step < order:
        step += 1
    table = {}
    value = 1
    for j in range(step):
        table.setdefault(value, j)
        value = value * rho % p
    giant = pow(rho, -step, p)
    gamma = a
    for i in range(step):
        j = table.get(gamma)
        if j is not None:
            return (i * step + j) % order
        gamma = gamma * giant % p
    raise DomainError("%d is not a primitive root mod %d" % (rho, p))

##################
# Iterated logs  #
##################

def iterated_log(x, j):
    """Returns log_j x (natural logs), raising when it is undefined."""
    value = x
    for level in range(j):
        if value <= 0:
            raise DomainError("log_%d undefined at %r" % (level + 1, x))
        value = math.log(value)
    return float(value)

def iterated_log_of_log(log_x, j):
    """Returns log_j x given log x, so that x may exceed float range."""
    if j < 1:
        raise DomainError("iterated_log_of_log needs j >= 1")
    return iterated_log(log_x, j - 1)

##################
# Smooth numbers #
##################

RHO_NODES = 1024

@lru_cache(maxsize=32)
def _rho_grid(intervals, nodes):
    """Trapezoid solution of u rho'(u) = -rho(u-1) on a uniform grid."""
    h = 1.0 / nodes
    t = np.arange(intervals * nodes + 1) * h
    rho = np.ones(intervals * nodes + 1)
    for k in range(1, intervals):
        here = slice(k * nodes, (k + 1) * nodes + 1)
        f = rho[(k - 1) * nodes:k * nodes + 1] / t[here]
        steps = 0.5 * h * (f[:-1] + f[1:])
        rho[k * nodes + 1:(k + 1) * nodes + 1] = rho[k * nodes] - np.cumsum(steps)
    rho.flags.writeable = False
    return rho

@lru_cache(maxsize=32)
def _rho_table(intervals):
    coarse = _rho_grid(intervals, RHO_NODES)
    fine = _rho_grid(intervals, 2 * RHO_NODES)
    # trapezoid error is even in h
    table = (4.0 * fine[::2] - coarse) / 3.0
    table.flags.writeable = False
    return table

def dickman_rho(u):
    """Returns the Dickman function rho(u)."""
    if u < 0:
        raise DomainError("dickman_rho needs u >= 0")
    if u <= 1:
        return 1.0
    intervals = int(math.ceil(u))
    table = _rho_table(intervals)
    k = int(math.floor(u))
    if k == u:
        return float(table[k * RHO_NODES])
    nodes = table[k * RHO_NODES:(k + 1) * RHO_NODES + 1]
    grid = np.linspace(k, k + 1, RHO_NODES + 1)
    return float(CubicSpline(grid, nodes)(u))

def smooth_count_exact(y, z, block_size=None):
    """Counts the z-smooth integers in [1, y]."""
    if y < 2 or z < 2:
        raise DomainError("smooth_count_exact needs y, z >= 2")
    if y > SMOOTH_LIMIT:
        raise CapacityError("smooth count beyond %d" % SMOOTH_LIMIT, estimate=y)
    if z >= y:
        return y
    if z * z >= y:
        # at most one prime factor exceeds sqrt(y)
        large = _sieve_array(z, y)
        return y - int((y // large).sum())

    base = small_primes(z).tolist()
    block_size = block_size or BLOCK_SIZE
    count = 0
    for lo in range(1, y + 1, block_size):
        hi = min(lo + block_size - 1, y)
        rest = np.arange(lo, hi + 1, dtype=np.int64)
        for p in base:
            power = p
            while power <= hi:
                first = -(-lo // power) * power
                if first <= hi:
                    rest[first - lo::power] //= p
                power *= p
        count += int(np.count_nonzero(rest == 1))
    return count
