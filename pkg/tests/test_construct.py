# -*- coding: utf-8 -*-

import math
from types import MappingProxyType

import pytest
import sympy

from gapforge_arith import primorial
from gapforge_construct import (PairingResult, assemble_m0, build_context,
                                certify_gap, choose_vectors, construct,
                                cover_map, g1, g1_of_log, g2, g2_of_log,
                                pair_exceptions, residue_assignment, scan_rows,
                                sift, window_ratios)
from gapforge_errors import (AssemblyError, ContextError, DomainError,
                             ScanError)
from gapforge_residues import admissible_classes, qr_good, shift_solvable
from gapforge_verify import verify_certificate


def _pipeline(ctx, strategy="greedy", seed=0):
    system = choose_vectors(ctx, strategy, seed, start=1)
    sifted = sift(ctx, system, start=1)
    pairing = pair_exceptions(ctx, sifted)
    return system, sifted, pairing

###############
# Window math #
###############

def test_growth_functions():
    x = 1e30
    log_x = math.log(x)
    assert g1(x) == pytest.approx(g1_of_log(log_x))
    assert g2(x) == pytest.approx(g2_of_log(log_x))
    l3 = math.log(math.log(log_x))
    assert g2(x) / g1(x) == pytest.approx(l3)
    # log_4 is negative at x = 10^6
    with pytest.raises(DomainError):
        g2(1e6)
    # far beyond float range
    assert g2_of_log(1e6) > 1e6


def test_window_ratios():
    ratios = window_ratios(math.log(1e12), 1.0)
    log_x = math.log(1e12)
    l2 = math.log(log_x)
    l3 = math.log(l2)
    assert ratios["y_over_x"] == pytest.approx(log_x * l3 / l2)
    assert ratios["log_z"] == pytest.approx(log_x * l3 / (4 * l2))
    assert ratios["log_s_floor"] == pytest.approx(20 * l2)

###########
# Context #
###########

def test_toy_context_prime_sets(toy_context):
    ctx = toy_context
    assert ctx.S == (3, 5, 7)
    assert ctx.P == (11, 13, 17, 19)
    assert ctx.zero_primes == (2,)
    assert ctx.Q == (23, 29, 31, 37, 41, 43, 47)
    assert ctx.Ptilde == (23, 31, 43, 47)
    assert ctx.limit == 50


def test_context_refusals():
    with pytest.raises(DomainError):
        build_context(20, 1, 1.0, 2.5, {"y": 50, "z": 7, "s_floor": 2})
    with pytest.raises(DomainError):
        build_context(20, 2, 1.0, 2.5, {"y": 50})
    with pytest.raises(ContextError) as info:
        build_context(1000, 2, 1.0, 2.5)
    assert any("S is empty" in failure for failure in info.value.failures)
    with pytest.raises(ContextError) as info:
        build_context(20, 2, 1.0, 2.5, {"y": 21, "z": 11, "s_floor": 2})
    assert len(info.value.failures) == 2


def test_context_through_a_prime_table(cache_dir, toy_context):
    from gapforge_arith import prime_table
    table = prime_table(100, cache_dir)
    ctx = build_context(20, 2, 1.0, 2.5, {"y": 50, "z": 7, "s_floor": 2},
                        table.between)
    assert ctx.S == toy_context.S and ctx.Q == toy_context.Q

##########
# Vectors #
##########

@pytest.mark.parametrize("strategy", ["greedy", "random"])
def test_vectors_use_admissible_classes(toy_context, strategy):
    system = choose_vectors(toy_context, strategy, seed=5, start=1)
    assert sorted(system.a) == list(toy_context.S)
    assert sorted(system.b) == list(toy_context.P)
    for prime, residue, witness in system.classes():
        family = admissible_classes(prime, toy_context.k)
        assert residue in family.classes
        assert (1 - pow(witness + 1, toy_context.k, prime)) % prime == residue
    again = choose_vectors(toy_context, strategy, seed=5, start=1)
    assert dict(again.a) == dict(system.a) and dict(again.b) == dict(system.b)


def test_unknown_strategy(toy_context):
    with pytest.raises(DomainError):
        choose_vectors(toy_context, "clever")


def test_sift_matches_brute_force(toy_context):
    system, sifted, _ = _pipeline(toy_context)
    struck = set()
    for prime, residue, _ in system.classes():
        struck.update(n for n in range(2, 51) if n % prime == residue)
    struck.update(n for n in range(2, 51) if n % 2 == 0)
    assert list(sifted.members) == [n for n in range(2, 51) if n not in struck]
    assert len(sifted.provenance) == len(sifted)
    upper = sift(toy_context, system)
    assert all(n > 20 for n in upper.members)


@pytest.mark.parametrize("strategy", ["greedy", "random"])
def test_survivors_are_smooth_or_prime(toy_context, strategy):
    system = choose_vectors(toy_context, strategy, seed=3)
    sifted = sift(toy_context, system)
    tags = list(sifted.provenance)
    assert tags.count("other") == 0
    for n, tag in zip(sifted.members, tags):
        if tag == "Q-survivor":
            assert sympy.isprime(n)
        else:
            assert tag == "smooth" and max(sympy.primefactors(n)) <= 7


def test_pairing_is_valid(toy_context):
    _, sifted, pairing = _pipeline(toy_context)
    used = [p for p, _ in pairing.pairs.values()]
    assert len(used) == len(set(used))
    for u, (p, e) in pairing.pairs.items():
        assert p in toy_context.Ptilde
        assert shift_solvable(u % p, p, toy_context.k)
        assert (pow(e + 1, toy_context.k, p) + u - 1) % p == 0
    assert sorted(list(pairing.pairs) + list(pairing.exceptional)) == \
        list(sifted.members)


def test_pairing_honours_the_residue_threshold(toy_context):
    _, sifted, _ = _pipeline(toy_context)
    delta = 0.5
    threshold = delta * toy_context.x / math.log(toy_context.x)
    pairing = pair_exceptions(toy_context, sifted, delta)
    for u in sifted.members:
        if not qr_good(u, toy_context.Ptilde, threshold):
            assert u in pairing.exceptional
    for u in pairing.pairs:
        assert qr_good(u, toy_context.Ptilde, threshold)

    everything = pair_exceptions(toy_context, sifted, delta=10.0 ** 6)
    assert not everything.pairs
    assert everything.exceptional == sifted.members

############
# Assembly #
############

def test_assembly_and_cover_map(toy_context):
    ctx = toy_context
    system, _, pairing = _pipeline(ctx)
    assigned = residue_assignment(ctx, system, pairing)
    m0, modulus = assemble_m0(ctx, system, pairing)
    assert modulus == primorial(51)
    assert 0 < m0 <= modulus
    assert sorted(assigned) == list(sympy.primerange(2, 51))
    for prime, value in assigned.items():
        assert m0 % prime == value

    cover = cover_map(ctx, assigned)
    assert set(cover.exposed) <= set(pairing.exceptional)
    for r in (1, 2, 3):
        top = (m0 + 1 + r * modulus) ** ctx.k
        for u in range(2, ctx.y + 1):
            prime = int(cover.covering[u])
            if prime:
                assert (top + u - 1) % prime == 0
            else:
                assert u in cover.exposed


def test_double_assignment_is_refused(toy_context):
    system, _, _ = _pipeline(toy_context)
    pairing = PairingResult(MappingProxyType({30: (11, 0)}), ())
    with pytest.raises(AssemblyError) as info:
        residue_assignment(toy_context, system, pairing)
    assert info.value.prime == 11

############
# Scanning #
############

def test_scan_rows_against_brute_force(tiny_context):
    ctx = tiny_context
    system, _, pairing = _pipeline(ctx)
    m0, modulus = assemble_m0(ctx, system, pairing)
    assert (m0, modulus) == (210, 210)
    cover = cover_map(ctx, residue_assignment(ctx, system, pairing))
    assert cover.exposed == (11,)

    scan = scan_rows(ctx, cover, m0, modulus, 300)
    expected = []
    for r in range(1, 301):
        q0 = m0 + 1 + r * modulus
        if sympy.isprime(q0):
            expected.append((r, q0, not sympy.isprime(q0 ** 2 + 10)))
    assert [(row.r, row.q0, row.clean) for row in scan.rows] == expected
    assert scan.scanned == 300

    threaded = scan_rows(ctx, cover, m0, modulus, 300, workers=4)
    assert threaded.rows == scan.rows

    first = scan_rows(ctx, cover, m0, modulus, 300, stop_after=1)
    assert len(first.clean_rows) == 1
    assert first.clean_rows[0] == scan.clean_rows[0]

    with pytest.raises(DomainError):
        scan_rows(ctx, cover, m0, modulus, 0)

################
# Certificates #
################

def test_certify_small_gap():
    cert = certify_gap(5, 2)
    assert (cert.left_prime, cert.right_prime) == (23, 29)
    assert cert.gap_length == 6
    assert cert.window == (25, 28)
    assert [int(entry["n"]) for entry in cert.transcript] == [24, 25, 26, 27, 28]
    assert cert.ratio is None
    assert verify_certificate(cert.to_dict()).ok

    with pytest.raises(ScanError):
        certify_gap(5, 2, y_window=10)
    with pytest.raises(DomainError):
        certify_gap(4, 2)


def test_construct_toy_gap(toy_context):
    result = construct(toy_context, r_max=10 ** 5, certificates=1, certify=True)
    assert len(result.certificates) == 1
    cert = result.certificates[0]
    assert cert.gap_length > toy_context.y
    assert cert.left_prime < cert.q0 ** 2 < cert.right_prime
    assert cert.q0 == cert.m0 + 1 + cert.r * cert.P_x
    assert verify_certificate(cert.to_dict()).ok

    metrics = result.metrics
    assert metrics["rows_clean"] >= 1
    assert metrics["smooth_count"] > 0
    assert 0 < metrics["rows_q0_prime_density"] <= 1

    again = construct(toy_context, r_max=10 ** 5, certificates=1)
    assert again.certificates[0].q0 == cert.q0
