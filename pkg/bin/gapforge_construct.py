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
Construction of certified gaps around q0^k.

Three prime sets drive the sieve: S in (s_floor, z], P in (x/2, x] and the
pairing primes Ptilde in (x, C0*x]. Every position u in [2, y] of the row
q0^k + u - 1 is either forced composite by a congruence on m0 or exposed and
tested directly while scanning rows q0 = m0 + 1 + r*modulus.
"""

import math
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool
from types import MappingProxyType

import gmpy2
import numpy as np

from gapforge_arith import (PRP_ROUNDS, Congruence, small_primes, crt_combine,
                            dickman_rho, is_prime, iterated_log,
                            iterated_log_of_log, prime_certificate,
                            prime_range, smooth_count_exact, SMOOTH_LIMIT)
from gapforge_errors import (AssemblyError, ContextError, DomainError,
                             GapforgeError, ScanError)
from gapforge_log import LOGGER, UI
from gapforge_residues import (admissible_classes, ptilde_member, qr_good,
                               shift_solvable, shift_witness)

ROW_CHUNK = 256

###############
# Window math #
###############

def g1(x):
    """log x log_2 x log_4 x / (log_3 x)^2."""
    return g1_of_log(iterated_log(x, 1))

def g2(x):
    """log x log_2 x log_4 x / log_3 x."""
    return g2_of_log(iterated_log(x, 1))

def _logs_from_log(log_x):
    l2 = iterated_log_of_log(log_x, 2)
    l3 = iterated_log_of_log(log_x, 3)
    l4 = iterated_log_of_log(log_x, 4)
    if l4 <= 0:
        raise DomainError("log_4 not positive at log x = %r" % log_x)
    return l2, l3, l4

def g1_of_log(log_x):
    l2, l3, l4 = _logs_from_log(log_x)
    return log_x * l2 * l4 / (l3 * l3)

def g2_of_log(log_x):
    l2, l3, l4 = _logs_from_log(log_x)
    return log_x * l2 * l4 / l3

def window_ratios(log_x, c):
    """Default window shape evaluated from log x alone.

    Returns y/x, log z and log s_floor so that the formulas can be checked at
    x far beyond float range.
    """
    l2 = iterated_log_of_log(log_x, 2)
    l3 = iterated_log_of_log(log_x, 3)
    return {"y_over_x": c * log_x * l3 / l2,
            "log_z": log_x * l3 / (4.0 * l2),
            "log_s_floor": max(math.log(7), 20.0 * math.log(log_x))}

######################
# Context and system #
######################

@dataclass(frozen=True)
class SieveContext:
    x: int
    k: int
    c: float
    C0: float
    y: int
    z: int
    s_floor: int
    S: tuple
    P: tuple
    Q: tuple
    Ptilde: tuple
    zero_primes: tuple
    modulus_primes: tuple
    overrides: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @property
    def limit(self):
        """Largest integer in the CRT window (x, C0*x]."""
        return int(math.floor(self.C0 * self.x + 1e-9))

def build_context(x, k, c, C0, overrides=None, primes=None):
    """Builds windows and prime sets; refuses degenerate default formulas.

    primes(lo, hi) lists the primes in (lo, hi], the sieve by default.
    """
    overrides = dict((key, value) for key, value in (overrides or {}).items()
                     if value is not None)
    if k < 2 or c <= 0 or C0 <= 1:
        raise DomainError("need k >= 2, c > 0 and C0 > 1")
    explicit = all(key in overrides for key in ("y", "z", "s_floor"))
    if x < 100 and not explicit:
        raise DomainError("x below 100 needs explicit y, z and s_floor")
    if x < 4:
        raise DomainError("x must be at least 4")

    failures = []
    log_x = math.log(x)
    y = overrides.get("y")
    z = overrides.get("z")
    s_floor = overrides.get("s_floor")
    if y is None or z is None:
        l2 = math.log(log_x)
        l3 = math.log(l2) if l2 > 0 else float("-inf")
        if l3 <= 0:
            failures.append("log_3 x = %s <= 0 in the y/z formulas" % l3)
        else:
            if y is None:
                y = int(math.ceil(c * x * log_x * l3 / l2))
            if z is None:
                z = int(math.ceil(x ** (l3 / (4.0 * l2))))
    if s_floor is None:
        s_floor = max(7, int(math.floor(log_x ** 20)))
    if not failures:
        if z <= s_floor:
            failures.append("S is empty: z = %d <= s_floor = %d" % (z, s_floor))
        if y < x + 2:
            failures.append("y = %d < x + 2" % y)
        if 2 * z > x:
            failures.append("z = %d overlaps P (z > x/2)" % z)
    if failures:
        raise ContextError(failures)

    limit = int(math.floor(C0 * x + 1e-9))
    primes = primes or prime_range
    modulus_primes = primes(0, max(limit, x))
    S = tuple(p for p in modulus_primes if s_floor < p <= z)
    P = tuple(p for p in modulus_primes if x / 2.0 < p <= x)
    sieved = set(S) | set(P)
    zero_primes = tuple(p for p in modulus_primes if p <= x and p not in sieved)
    Q = tuple(primes(x, y))
    Ptilde = tuple(p for p in modulus_primes if ptilde_member(p, x, C0, k))
    LOGGER.debug("context x=%d y=%d z=%d |S|=%d |P|=%d |Q|=%d |Ptilde|=%d"
                 % (x, y, z, len(S), len(P), len(Q), len(Ptilde)))
    return SieveContext(x, k, c, C0, y, z, s_floor, S, P, Q, Ptilde,
                        zero_primes, tuple(modulus_primes),
                        MappingProxyType(overrides))

@dataclass(frozen=True)
class ResidueSystem:
    """Witnessed classes: a[s] = (a_s, c_s), b[p] = (b_p, d_p)."""
    a: MappingProxyType
    b: MappingProxyType
    strategy: str = "greedy"
    seed: int = 0

    def classes(self):
        """Yields (prime, class, witness) over S then P."""
        for table in (self.a, self.b):
            for prime in sorted(table):
                yield (prime,) + tuple(table[prime])

def _initial_survivors(ctx, start):
    lo = ctx.x if start is None else start
    survivors = np.arange(lo + 1, ctx.y + 1, dtype=np.int64)
    for q in ctx.zero_primes:
        survivors = survivors[survivors % q != 0]
    return survivors

def choose_vectors(ctx, strategy="greedy", seed=0, start=None):
    """Picks a_s and b_p from the admissible families."""
    if strategy not in ("greedy", "random"):
        raise DomainError("unknown strategy '%s'" % strategy)
    a, b = {}, {}
    if strategy == "greedy":
        survivors = _initial_survivors(ctx, start)
        order = sorted(ctx.S + ctx.P, reverse=True)
    else:
        rng = np.random.default_rng(seed)
        order = sorted(ctx.S + ctx.P)
    in_S = set(ctx.S)
    for prime in order:
        family = admissible_classes(prime, ctx.k)
        if not family.classes:
            UI.warn("no admissible class mod %d, skipped" % prime)
            continue
        if strategy == "greedy":
            classes = np.array(family.classes, dtype=np.int64)
            hits = np.bincount(survivors % prime, minlength=prime)[classes]
            chosen = int(classes[int(np.argmax(hits))])
            survivors = survivors[survivors % prime != chosen]
        else:
            chosen = int(family.classes[int(rng.integers(len(family.classes)))])
        (a if prime in in_S else b)[prime] = (chosen, family.witness(chosen))
    return ResidueSystem(MappingProxyType(a), MappingProxyType(b),
                         strategy, seed)

###########
# Sifting #
###########

@dataclass(frozen=True)
class SiftedSet:
    members: tuple
    provenance: tuple
    start: int

    def __len__(self):
        return len(self.members)

    def count(self, tag):
        return sum(1 for item in self.provenance if item == tag)

def _is_smooth(n, z):
    for p in small_primes(z).tolist():
        while n % p == 0:
            n //= p
        if n == 1:
            return True
    return n == 1

def sift(ctx, system, start=None):
    """Applies every class over (start, y], start defaulting to x."""
    start = ctx.x if start is None else start
    alive = np.ones(ctx.y - start, dtype=bool)

    def strike(prime, residue):
        first = start + 1 + (residue - start - 1) % prime
        alive[first - start - 1::prime] = False

    for prime, residue, _ in system.classes():
        strike(prime, residue)
    for q in ctx.zero_primes:
        strike(q, 0)

    members = (np.flatnonzero(alive) + start + 1).tolist()
    provenance = []
    for n in members:
        if n <= ctx.x:
            provenance.append("low")
        elif _is_smooth(n, ctx.z):
            provenance.append("smooth")
        elif is_prime(n):
            provenance.append("Q-survivor")
        else:
            provenance.append("other")
    return SiftedSet(tuple(members), tuple(provenance), start)

###########
# Pairing #
###########

@dataclass(frozen=True)
class PairingResult:
    pairs: MappingProxyType
    exceptional: tuple

def pair_exceptions(ctx, sifted, delta=0.0):
    """Greedy assignment of sifted members to unused pairing primes."""
    threshold = delta * ctx.x / math.log(ctx.x)
    unused = list(ctx.Ptilde)
    pairs = {}
    exceptional = []
    for u in sorted(sifted.members):
        if ctx.k % 2 == 0 and not qr_good(u, ctx.Ptilde, threshold):
            exceptional.append(u)
            continue
        for index, p in enumerate(unused):
            if shift_solvable(u % p, p, ctx.k):
                pairs[u] = (p, shift_witness(u % p, p, ctx.k))
                del unused[index]
                break
        else:
            exceptional.append(u)
    LOGGER.debug("paired %d, exceptional %d" % (len(pairs), len(exceptional)))
    return PairingResult(MappingProxyType(pairs), tuple(exceptional))

############
# Assembly #
############

def residue_assignment(ctx, system, pairing):
    """Returns {prime: witness} over every prime <= C0*x."""
    assigned = {}

    def put(prime, value):
        if prime in assigned:
            raise AssemblyError(prime)
        assigned[prime] = value % prime

    for prime, _, witness in system.classes():
        put(prime, witness)
    for q in ctx.zero_primes:
        put(q, 0)
    for _, (p, e) in sorted(pairing.pairs.items()):
        put(p, e)
    for p in ctx.modulus_primes:
        if p <= ctx.limit and p not in assigned:
            assigned[p] = 0
    return assigned

def assemble_m0(ctx, system, pairing):
    """CRT assembly of m0 modulo the product of primes <= C0*x."""
    assigned = residue_assignment(ctx, system, pairing)
    combined = crt_combine([Congruence(value, prime)
                            for prime, value in sorted(assigned.items())])
    m0 = combined.residue or combined.modulus
    return m0, combined.modulus

##################
# Matrix scanning #
##################

@dataclass(frozen=True)
class CoverMap:
    """covering[u] is a prime dividing every entry of column u, 0 if exposed."""
    k: int
    y: int
    covering: np.ndarray
    exposed: tuple

def cover_map(ctx, assigned):
    """Maps each u in [2, y] to a prime forcing column u composite."""
    covering = np.zeros(ctx.y + 1, dtype=np.int64)
    for prime, witness in sorted(assigned.items()):
        column = (1 - pow(witness + 1, ctx.k, prime)) % prime
        first = column if column >= 2 else column + prime
        view = covering[first::prime]
        view[view == 0] = prime
    covering[:2] = 0
    exposed = tuple(u for u in range(2, ctx.y + 1) if covering[u] == 0)
    covering.flags.writeable = False
    return CoverMap(ctx.k, ctx.y, covering, exposed)

@dataclass(frozen=True)
class RowStatus:
    r: int
    q0: int
    clean: bool
    prime_positions: tuple

@dataclass(frozen=True)
class ScanResult:
    rows: tuple
    scanned: int

    @property
    def clean_rows(self):
        return tuple(row for row in self.rows if row.clean)

def _scan_chunk(cover, m0, modulus, first, last, rounds):
    rows = []
    positions = np.flatnonzero(cover.covering).tolist()
    for r in range(first, last + 1):
        q0 = gmpy2.mpz(m0) + 1 + r * gmpy2.mpz(modulus)
        if not is_prime(q0, rounds):
            continue
        top = q0 ** cover.k
        for u in positions:
            prime = int(cover.covering[u])
            if (top + u - 1) % prime:
                raise ScanError("row %d column %d not divisible by %d"
                                % (r, u, prime))
        hits = tuple(u for u in cover.exposed if is_prime(top + u - 1, rounds))
        rows.append(RowStatus(r, int(q0), not hits, hits))
    return rows

def scan_rows(ctx, cover, m0, modulus, r_max, workers=1, stop_after=None,
              rounds=PRP_ROUNDS):
    """Scans rows r = 1..r_max whose q0 is prime."""
    if r_max < 1:
        raise DomainError("r_max must be positive")
    chunks = [(lo, min(lo + ROW_CHUNK - 1, r_max))
              for lo in range(1, r_max + 1, ROW_CHUNK)]
    wave = max(1, workers)
    rows = []
    scanned = r_max

    def job(chunk):
        return _scan_chunk(cover, m0, modulus, chunk[0], chunk[1], rounds)

    pool = ThreadPool(workers) if workers > 1 else None
    try:
        for index in range(0, len(chunks), wave):
            batch = chunks[index:index + wave]
            parts = pool.map(job, batch) if pool else [job(c) for c in batch]
            for part in parts:
                rows.extend(part)
            if stop_after:
                clean = [row for row in rows if row.clean]
                if len(clean) >= stop_after:
                    last = clean[stop_after - 1].r
                    rows = [row for row in rows if row.r <= last]
                    scanned = last
                    break
    finally:
        if pool:
            pool.close()
    LOGGER.log("scanned %d rows, %d with q0 prime" % (scanned, len(rows)))
    return ScanResult(tuple(rows), scanned)

################
# Certificates #
################

@dataclass
class GapCertificate:
    q0: int
    k: int
    window: tuple
    left_prime: int
    right_prime: int
    gap_length: int
    g2_value: object
    ratio: object
    transcript: list
    x: object = None
    c: object = None
    C0: object = None
    m0: object = None
    P_x: object = None
    r: object = None
    q0_certificate: object = None

    def to_dict(self):
        """JSON shape: big integers become decimal strings."""
        data = {
            "x": self.x, "k": self.k, "c": self.c, "C0": self.C0,
            "m0": None if self.m0 is None else str(self.m0),
            "P_x": None if self.P_x is None else str(self.P_x),
            "r": self.r,
            "q0": str(self.q0),
            "window": {"lo": str(self.window[0]), "hi": str(self.window[1])},
            "left_prime": str(self.left_prime),
            "right_prime": str(self.right_prime),
            "gap_length": self.gap_length,
            "g2_value": self.g2_value,
            "ratio": self.ratio,
            "transcript": self.transcript,
        }
        if self.q0_certificate is not None:
            data["q0_certificate"] = self.q0_certificate
        return data

def _witness(n, trial_bound, rounds):
    for p in small_primes(trial_bound).tolist():
        if p * p > n:
            break
        if n % p == 0:
            return {"divisor": str(p)}
    return {"prp_rounds": rounds}

def certify_gap(q0, k, y_window=None, trial_bound=10000, rounds=PRP_ROUNDS,
                certify=False):
    """Finds the maximal prime gap around q0^k and records witnesses."""
    q0 = gmpy2.mpz(q0)
    if not is_prime(q0, rounds):
        raise DomainError("q0 = %s is not prime" % q0)
    top = q0 ** k
    transcript = []
    n = top
    while not is_prime(n, rounds):
        transcript.append({"n": str(n), "witness": _witness(n, trial_bound, rounds)})
        n -= 1
    left = n
    n = top + 1
    while not is_prime(n, rounds):
        transcript.append({"n": str(n), "witness": _witness(n, trial_bound, rounds)})
        n += 1
    right = n
    transcript.sort(key=lambda entry: int(entry["n"]))

    hi = top + (y_window - 1 if y_window else right - top - 1)
    if hi >= right:
        raise ScanError("window up to %s passes the prime %s" % (hi, right))
    try:
        g2_value = g2_of_log(math.log(int(left)))
        ratio = int(right - left) / g2_value
    except DomainError:
        g2_value = ratio = None
    cert = GapCertificate(int(q0), k, (int(top), int(hi)), int(left), int(right),
                          int(right - left), g2_value, ratio, transcript)
    if certify:
        cert.q0_certificate = prime_certificate(q0, trial_bound)
    return cert

############
# Pipeline #
############

@dataclass
class ConstructionResult:
    certificates: list
    metrics: dict

def construct(ctx, strategy="greedy", seed=0, r_max=100000, certificates=1,
              delta=0.0, workers=1, rounds=PRP_ROUNDS, trial_bound=10000,
              certify=False):
    """Runs vectors, sieve, pairing, assembly, scan and certification."""
    system = choose_vectors(ctx, strategy, seed, start=1)
    sifted = sift(ctx, system, start=1)
    pairing = pair_exceptions(ctx, sifted, delta)
    assigned = residue_assignment(ctx, system, pairing)
    m0, modulus = assemble_m0(ctx, system, pairing)
    cover = cover_map(ctx, assigned)
    scan = scan_rows(ctx, cover, m0, modulus, r_max, workers, certificates,
                     rounds)

    emitted = []
    for row in scan.clean_rows[:certificates]:
        cert = certify_gap(row.q0, ctx.k, ctx.y, trial_bound, rounds, certify)
        cert.x, cert.c, cert.C0 = ctx.x, ctx.c, ctx.C0
        cert.m0, cert.P_x, cert.r = m0, modulus, row.r
        emitted.append(cert)
    if not emitted:
        UI.warn("no clean row among %d scanned" % scan.scanned)

    upper = sift(ctx, system)
    metrics = {
        "sifted": len(upper),
        "sifted_ratio": len(upper) * math.log(ctx.x) / ctx.x,
        "sifted_other": upper.count("other"),
        "positions_exposed": len(cover.exposed),
        "paired": len(pairing.pairs),
        "exceptional": len(pairing.exceptional),
        "exceptional_scale": math.sqrt(ctx.x),
        "rows_scanned": scan.scanned,
        "rows_q0_prime": len(scan.rows),
        "rows_q0_prime_density": len(scan.rows) / float(scan.scanned),
        "rows_clean": len(scan.clean_rows),
        "modulus_bits": int(modulus).bit_length(),
    }
    if ctx.y <= SMOOTH_LIMIT and ctx.z >= 2:
        smooth = smooth_count_exact(ctx.y, ctx.z)
        metrics["smooth_count"] = smooth
        metrics["smooth_estimate"] = ctx.y * dickman_rho(math.log(ctx.y) / math.log(ctx.z))
    return ConstructionResult(emitted, metrics)
