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
Semi-random hypergraph covering.

Vertices are integer ids 0..N-1, edges are drawn by a sampler and grouped
into rounds. P_0(v) = 1 and P_j(v) = P_(j-1)(v) * exp(-d_j(v) / P_(j-1)(v))
predicts the survivors when every round draws its edges inside the current
survivors ("nibble" mode); "independent" mode draws from the whole vertex set.
"""

import math
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool

import numpy as np

from gapforge_arith import iterated_log
from gapforge_concentration import sigma as sigma_value
from gapforge_errors import DomainError
from gapforge_log import LOGGER, UI
from gapforge_weights import lp_weights, w_final_array

MODES = ("nibble", "independent")
AUDIT_PAIRS = 200

############
# Samplers #
############

class UniformSubsetSampler:
    """Edge i is edge_size uniform draws with replacement."""
    supports_nibble = True

    def __init__(self, n_vertices, edge_size=2):
        if n_vertices < 1 or edge_size < 1:
            raise DomainError("need at least one vertex and edge size >= 1")
        self.n_vertices = n_vertices
        self.edge_size = edge_size

    def size_bound(self, index):
        return self.edge_size

    def probability(self):
        return 1.0 - (1.0 - 1.0 / self.n_vertices) ** self.edge_size

    def probabilities(self, index):
        return np.full(self.n_vertices, self.probability())

    def pair_probability(self, index, first, second):
        if first == second:
            return self.probability()
        n, r = float(self.n_vertices), self.edge_size
        return 1.0 - 2.0 * (1.0 - 1.0 / n) ** r + (1.0 - 2.0 / n) ** r

    def pair_total(self, indices, first, second):
        return len(indices) * self.pair_probability(indices[0], first, second) \
            if len(indices) else 0.0

    def draw_many(self, indices, rng, alive=None):
        pool = np.arange(self.n_vertices) if alive is None \
            else np.flatnonzero(alive)
        if not len(indices) or not len(pool):
            return np.zeros(0, dtype=np.int64)
        picks = rng.integers(len(pool), size=(len(indices), self.edge_size))
        return pool[picks].ravel()

class FixedEdgeSampler:
    """Deterministic edges."""
    # fixed edges ignore the survivors
    supports_nibble = True

    def __init__(self, n_vertices, edges):
        self.n_vertices = n_vertices
        self.edges = [np.array(sorted(set(edge)), dtype=np.int64)
                      for edge in edges]

    def size_bound(self, index):
        return len(self.edges[index])

    def probabilities(self, index):
        vector = np.zeros(self.n_vertices)
        vector[self.edges[index]] = 1.0
        return vector

    def pair_probability(self, index, first, second):
        edge = self.edges[index]
        return float(first in edge and second in edge)

    def draw_many(self, indices, rng, alive=None):
        if not len(indices):
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([self.edges[i] for i in indices])

@dataclass(frozen=True)
class CoverInstance:
    n_vertices: int
    rounds: tuple
    sampler: object

    def __post_init__(self):
        seen = set()
        for indices in self.rounds:
            if seen & set(indices):
                raise DomainError("rounds must be disjoint")
            seen.update(indices)

def default_rounds(x):
    """floor(log_3 x / log 5), at least 1."""
    try:
        return max(1, int(math.floor(iterated_log(x, 3) / math.log(5))))
    except DomainError:
        return 1

def calibrated_degrees(m, coverage=1.25 * math.log(5)):
    """d_j = coverage * 4/5 * 5^-(j-1), summing to about coverage."""
    return [coverage * 0.8 * 5.0 ** -(j - 1) for j in range(1, m + 1)]

def synthetic_instance(n_vertices, m, edge_size=2, coverage=1.25 * math.log(5)):
    """Uniform edges with round j carrying normalized degree d_j."""
    sampler = UniformSubsetSampler(n_vertices, edge_size)
    single = sampler.probability()
    rounds = []
    start = 0
    for d in calibrated_degrees(m, coverage):
        count = int(round(d / single))
        rounds.append(tuple(range(start, start + count)))
        start += count
    return CoverInstance(n_vertices, tuple(rounds), sampler)

###################
# Degree profile  #
###################

@dataclass(frozen=True, eq=False)
class DegreeProfile:
    d: np.ndarray
    P: np.ndarray

def degree_recursion(d):
    """P_j from the degree array d[j-1, v]; returns m+1 rows."""
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    P = np.ones((d.shape[0] + 1, d.shape[1]))
    for j in range(d.shape[0]):
        P[j + 1] = P[j] * np.exp(-d[j] / P[j])
    return P

def degree_profile(instance, probe_samples=0, seed=0):
    """d_j(v) = sum of P(v in e_i) over round j, then the P recursion.

    Samplers without analytic probabilities are probed by drawing every edge
    probe_samples times.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for indices in instance.rounds:
        row = np.zeros(instance.n_vertices)
        if hasattr(instance.sampler, "probabilities"):
            for i in indices:
                row += instance.sampler.probabilities(i)
        else:
            if probe_samples < 1:
                raise DomainError("sampler needs probe_samples > 0")
            for _ in range(probe_samples):
                for i in indices:
                    hit = np.unique(instance.sampler.draw_many([i], rng))
                    row[hit] += 1.0 / probe_samples
        rows.append(row)
    d = np.array(rows) if rows else np.zeros((0, instance.n_vertices))
    return DegreeProfile(d, degree_recursion(d))

##############
# Simulation #
##############

@dataclass
class CoverStats:
    mode: str
    rounds: int
    residual_fractions: list
    round_means: list
    mean: float
    sd: float
    predicted_nibble: float
    predicted_independent: float
    covering_sums: dict
    audits: dict
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)

def _replicate(instance, rounds, mode, seed, index):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    alive = np.ones(instance.n_vertices, dtype=bool)
    fractions = []
    for indices in rounds:
        covered = instance.sampler.draw_many(
            indices, rng, alive if mode == "nibble" else None)
        alive[covered] = False
        fractions.append(np.count_nonzero(alive) / float(instance.n_vertices))
    return fractions

def _audit(instance, profile, rounds, seed, degree_floor, sparsity_cap,
           codegree_cap):
    warnings = []
    sampler = instance.sampler
    used = [i for indices in rounds for i in indices]
    n = instance.n_vertices
    sparsity_cap = n ** -0.6 if sparsity_cap is None else sparsity_cap
    if codegree_cap is None:
        codegree_cap = 1.0 / math.log(max(n, 3)) ** 2

    largest = 0.0
    for i in used:
        largest = max(largest, float(sampler.probabilities(i).max()))
    if largest > sparsity_cap:
        warnings.append("sparsity: max P(v in e) = %.3g above %.3g"
                        % (largest, sparsity_cap))
    for i in used:
        if hasattr(sampler, "edge_sizes") and sampler.edge_sizes(i) > \
                sampler.size_bound(i):
            warnings.append("edge %d exceeds its size bound" % i)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 1 << 30]))
    pairs = rng.integers(n, size=(AUDIT_PAIRS, 2)).tolist() if n > 1 else []
    codegree = 0.0
    for first, second in pairs:
        if first == second:
            continue
        if hasattr(sampler, "pair_total"):
            total = sampler.pair_total(used, first, second)
        else:
            total = sum(sampler.pair_probability(i, first, second)
                        for i in used)
        codegree = max(codegree, total)
    if codegree > codegree_cap:
        warnings.append("codegree: %.3g above %.3g" % (codegree, codegree_cap))

    floor = float(profile.P[1:].min()) if len(profile.P) > 1 else 1.0
    if floor < degree_floor:
        warnings.append("degree floor: min P_j(v) = %.3g below %.3g"
                        % (floor, degree_floor))
    return {"max_probability": largest, "sparsity_cap": sparsity_cap,
            "max_codegree": codegree, "codegree_cap": codegree_cap,
            "min_P": floor, "degree_floor": degree_floor}, warnings

def simulate_cover(instance, m=None, seed=0, replicates=20, mode="nibble",
                   workers=1, degree_floor=0.0, sparsity_cap=None,
                   codegree_cap=None, probe_samples=0):
    """Runs the first m rounds for every replicate and summarizes survivors."""
    if mode not in MODES:
        raise DomainError("unknown simulation mode '%s'" % mode)
    if replicates < 1:
        raise DomainError("replicates must be positive")
    rounds = instance.rounds if m is None else instance.rounds[:m]
    warnings = []
    if mode == "nibble" and not instance.sampler.supports_nibble:
        warnings.append("sampler has no nibble draw, edges drawn independently")
        mode = "independent"

    def job(index):
        return _replicate(instance, rounds, mode, seed, index)

    if workers > 1 and replicates > 1:
        with ThreadPool(workers) as pool:
            runs = pool.map(job, range(replicates))
    else:
        runs = [job(index) for index in range(replicates)]

    n = float(instance.n_vertices)
    final = [run[-1] if run else 1.0 for run in runs]
    round_means = [float(np.mean([run[j] for run in runs]))
                   for j in range(len(rounds))]
    profile = degree_profile(CoverInstance(instance.n_vertices, tuple(rounds),
                                           instance.sampler), probe_samples,
                             seed)
    sums = profile.d.sum(axis=0) if len(profile.d) else np.zeros(int(n))
    audits, found = _audit(instance, profile, rounds, seed, degree_floor,
                           sparsity_cap, codegree_cap)
    warnings.extend(found)
    for warning in warnings:
        UI.warn(warning)
    LOGGER.log("cover %s: %d rounds, %d replicates, mean residual %.6f"
               % (mode, len(rounds), replicates, float(np.mean(final))))
    return CoverStats(
        mode=mode,
        rounds=len(rounds),
        residual_fractions=final,
        round_means=round_means,
        mean=float(np.mean(final)),
        sd=float(np.std(final, ddof=1)) if replicates > 1 else 0.0,
        predicted_nibble=float(profile.P[-1].mean()),
        predicted_independent=float(np.exp(-sums).mean()),
        covering_sums={"mean": float(sums.mean()), "min": float(sums.min()),
                       "max": float(sums.max())},
        audits=audits,
        warnings=warnings)

####################
# Weighted sampler #
####################

def _in_sifted(values, a_part):
    keep = np.ones(len(values), dtype=bool)
    for s, (a, _) in a_part.items():
        keep &= values % s != a
    return keep

class WeightedEdgeSampler:
    """Edges {n_p + h_i p} cut down to the vertex set Q n S(a).

    One edge per prime p of the good set; n_p has density proportional to
    w(p, n) conditioned on every translate lying in S(a).
    """
    supports_nibble = False

    def __init__(self, vertices, shifts, seed=0):
        self.vertices = np.asarray(vertices, dtype=np.int64)
        self.n_vertices = len(self.vertices)
        self.shifts = tuple(shifts)
        self.seed = seed
        self.primes = []
        self.excluded = []
        self.report = {}
        self._support = []
        self._vectors = []

    def add(self, p, numbers, density):
        """Registers the density of n_p over numbers."""
        targets = numbers[:, None] + np.array(self.shifts, dtype=np.int64) * p
        where = np.searchsorted(self.vertices, targets)
        if self.n_vertices:
            clipped = np.minimum(where, self.n_vertices - 1)
            found = (where < self.n_vertices) & \
                (self.vertices[clipped] == targets)
        else:
            found = np.zeros(where.shape, dtype=bool)
        ids = [row[mask] for row, mask in zip(where, found)]
        vector = np.zeros(self.n_vertices)
        chances = np.broadcast_to(density[:, None], where.shape)
        np.add.at(vector, where[found], chances[found])
        self.primes.append(p)
        self._support.append((numbers, density, ids))
        self._vectors.append(vector)

    def density(self, index):
        """(n values, probabilities) of n_p for the index-th prime."""
        numbers, density, _ = self._support[index]
        return numbers, density

    def size_bound(self, index):
        return len(self.shifts)

    def edge_sizes(self, index):
        return max((len(ids) for ids in self._support[index][2]), default=0)

    def probabilities(self, index):
        return self._vectors[index]

    def pair_probability(self, index, first, second):
        if first == second:
            return float(self._vectors[index][first])
        p = self.primes[index]
        numbers, density, _ = self._support[index]
        q1, q2 = int(self.vertices[first]), int(self.vertices[second])
        total = 0.0
        for h_i in self.shifts:
            for h_l in self.shifts:
                if h_i == h_l or q1 - q2 != (h_i - h_l) * p:
                    continue
                n = q1 - h_i * p
                where = int(np.searchsorted(numbers, n))
                if where < len(numbers) and int(numbers[where]) == n:
                    total += float(density[where])
        return total

    def sample(self, index, rng=None):
        """Draws one edge of the index-th prime."""
        rng = rng or np.random.default_rng(self.seed)
        numbers, density, ids = self._support[index]
        return ids[int(rng.choice(len(numbers), p=density))]

    def draw_many(self, indices, rng, alive=None):
        edges = [self.sample(i, rng) for i in indices]
        return np.concatenate(edges) if edges else np.zeros(0, dtype=np.int64)

    def vertex_sums(self):
        total = np.zeros(self.n_vertices)
        for vector in self._vectors:
            total += vector
        return total

def weighted_edge_sampler(ctx, lattice, a_part, shifts, seed=0, params=None,
                          band=0.25, workers=1):
    """Builds the per-prime edge distributions over [x, y].

    X_p is the probability that every translate of n_p survives a; primes
    whose X_p / sigma^r leaves 1 +- band, or whose weight vanishes, get no
    edge and are listed in the report.
    """
    candidates = np.arange(ctx.x, ctx.y + 1, dtype=np.int64)
    Q = np.array(ctx.Q, dtype=np.int64)
    vertices = Q[_in_sifted(Q, a_part)]
    sampler = WeightedEdgeSampler(vertices, shifts, seed)
    sigma_r = sigma_value(params).sigma ** len(shifts) if params else None
    x_values = {}
    for p in ctx.P:
        table = lp_weights(lattice, shifts, p, ctx.x, ctx.y, workers)
        weights = w_final_array(p, ctx.k, table, params, shifts) if params \
            else table.w
        total = float(weights.sum())
        if total <= 0:
            sampler.excluded.append((p, "zero weight"))
            continue
        survive = np.ones(len(candidates), dtype=bool)
        for h in shifts:
            survive &= _in_sifted(candidates + h * p, a_part)
        X_p = float(weights[survive].sum()) / total
        x_values[p] = X_p
        if sigma_r and abs(X_p / sigma_r - 1.0) > band:
            sampler.excluded.append((p, "X_p off sigma^r"))
            continue
        kept = weights * survive
        mass = float(kept.sum())
        if mass <= 0:
            sampler.excluded.append((p, "no surviving translate"))
            continue
        support = np.flatnonzero(kept)
        sampler.add(p, candidates[support], kept[support] / mass)
    if sampler.excluded:
        UI.warn("%d primes without an edge" % len(sampler.excluded))
    cap = ctx.x ** (-0.5 - 0.1)
    largest = max((float(sampler.probabilities(i).max())
                   for i in range(len(sampler.primes))), default=0.0)
    sampler.report = {"X_p": dict((str(p), value) for p, value
                                  in sorted(x_values.items())),
                      "sigma_r": sigma_r,
                      "kept": len(sampler.primes),
                      "excluded": [[p, why] for p, why in sampler.excluded],
                      "max_probability": largest,
                      "sparsity_cap": cap}
    return sampler

def weighted_instance(sampler, m):
    """Splits the kept primes into m consecutive rounds."""
    count = len(sampler.primes)
    m = max(1, min(m, count)) if count else 1
    bounds = np.linspace(0, count, m + 1).astype(int).tolist()
    rounds = tuple(tuple(range(bounds[j], bounds[j + 1])) for j in range(m))
    return CoverInstance(sampler.n_vertices, rounds, sampler)

def _vertex_sums(source):
    if hasattr(source, "vertex_sums"):
        return source.vertex_sums()
    total = np.zeros(source.n_vertices)
    for indices in source.rounds:
        for i in indices:
            total += source.sampler.probabilities(i)
    return total

def uniform_covering_report(source, ctx=None, a_part=None, band=0.25, bins=20):
    """Concentration of sum_p P(q in e_p) over the vertices.

    source is a sampler with vertex_sums() or a CoverInstance.
    """
    sums = _vertex_sums(source)
    if len(sums) == 0:
        return {"vertices": 0, "C_hat": 0.0, "outside_band": 0.0,
                "histogram": {"counts": [], "edges": []}}
    mean = float(sums.mean())
    if mean > 0:
        outside = float(np.mean(np.abs(sums / mean - 1.0) > band))
    else:
        outside = 0.0
    counts, edges = np.histogram(sums, bins=bins)
    report = {"vertices": int(len(sums)),
              "C_hat": mean,
              "min": float(sums.min()),
              "max": float(sums.max()),
              "band": band,
              "outside_band": outside,
              "histogram": {"counts": counts.tolist(),
                            "edges": edges.tolist()}}
    if ctx is not None and ctx.x > 15:
        log_x = math.log(ctx.x)
        report["exception_scale"] = ctx.x / (log_x * math.log(log_x))
        report["outside_count"] = int(round(outside * len(sums)))
    if a_part is not None:
        report["sieving_primes"] = len(a_part)
    return report

def codegree_audit(sampler, pairs):
    """Primes whose edges can contain both q1 and q2, with a divisibility check.

    Every such p must divide q1 - q2 and at most one p may appear.
    """
    findings = []
    for first, second in pairs:
        q1, q2 = int(sampler.vertices[first]), int(sampler.vertices[second])
        hits = [sampler.primes[i] for i in range(len(sampler.primes))
                if sampler.pair_probability(i, first, second) > 0]
        findings.append({"q1": q1, "q2": q2, "primes": hits,
                         "divides": all((q1 - q2) % p == 0 for p in hits),
                         "unique": len(hits) <= 1})
    return findings

def audit_pairs(sampler, seed=0, count=AUDIT_PAIRS):
    """Random vertex pairs plus pairs sharing a drawn edge."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    n = sampler.n_vertices
    pairs = []
    if n > 1:
        pairs.extend(tuple(pair) for pair in
                     rng.integers(n, size=(count // 2, 2)).tolist()
                     if pair[0] != pair[1])
    for index in range(len(sampler.primes)):
        edge = sampler.sample(index, rng)
        if len(edge) > 1:
            pairs.append((int(edge[0]), int(edge[1])))
        if len(pairs) >= count:
            break
    return pairs
