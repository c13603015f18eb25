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
Independent re-verification of gap certificates.

Only the arithmetic primitives are used here: nothing computed while the
certificate was produced is trusted.
"""

import json
import math

import gmpy2

from gapforge_arith import (check_prime_certificate, is_prime,
                            iterated_log_of_log)
from gapforge_errors import ConfigError, DomainError
from gapforge_log import LOGGER, _

RATIO_TOLERANCE = 1e-9

class Verification:
    """Outcome of a check: truthy when no diagnostic was recorded."""
    def __init__(self):
        self.diagnostics = []

    def fail(self, msg):
        self.diagnostics.append(msg)

    @property
    def ok(self):
        return not self.diagnostics

    def __bool__(self):
        return self.ok

def load_certificate(path):
    """Reads a certificate file: one certificate or a list of them."""
    try:
        with open(path, "r") as _file:
            return json.load(_file)
    except (IOError, OSError) as error:
        raise ConfigError(_("Cannot read %s: %s") % (path, error))
    except ValueError as error:
        raise ConfigError(_("Malformed certificate %s: %s") % (path, error))

def _number(data, key):
    try:
        return gmpy2.mpz(str(data[key]))
    except (KeyError, ValueError, TypeError):
        raise ConfigError(_("Certificate field '%s' missing or not an integer")
                          % key)

def _g2(log_x):
    l2 = iterated_log_of_log(log_x, 2)
    l3 = iterated_log_of_log(log_x, 3)
    l4 = iterated_log_of_log(log_x, 4)
    if l4 <= 0:
        raise DomainError("log_4 not positive")
    return log_x * l2 * l4 / l3

def _check_witness(n, witness, result):
    if "divisor" in witness:
        divisor = gmpy2.mpz(str(witness["divisor"]))
        if not 1 < divisor < n:
            result.fail("%s: divisor %s is trivial" % (n, divisor))
        elif n % divisor:
            result.fail("%s: %s does not divide it" % (n, divisor))
    elif "prp_rounds" in witness:
        if is_prime(n, max(int(witness["prp_rounds"]), 1)):
            result.fail("%s: claimed composite but tests prime" % n)
    else:
        result.fail("%s: unknown witness %r" % (n, witness))

def _close(claimed, expected):
    return abs(expected - float(claimed)) <= RATIO_TOLERANCE * abs(expected)

def _check_ratio(data, left, right, result):
    """g2 and the merit are recomputed from the left prime and compared."""
    g2_value, ratio = data.get("g2_value"), data.get("ratio")
    try:
        g2 = _g2(math.log(int(left)))
    except DomainError:
        if g2_value is not None or ratio is not None:
            result.fail("g2 or ratio given where g2 is undefined")
        return
    if ratio is None:
        result.fail("ratio missing although g2 = %r is defined" % g2)
    elif not _close(ratio, int(right - left) / g2):
        result.fail("ratio %r != %r" % (ratio, int(right - left) / g2))
    if g2_value is not None and not _close(g2_value, g2):
        result.fail("g2_value %r != %r" % (g2_value, g2))

def _check_one(data, result):
    q0 = _number(data, "q0")
    k = int(data.get("k", 0))
    left = _number(data, "left_prime")
    right = _number(data, "right_prime")
    window = data.get("window") or {}
    lo = _number(window, "lo")
    hi = _number(window, "hi")
    transcript = data.get("transcript")
    if k < 1 or not isinstance(transcript, list):
        raise ConfigError(_("Certificate needs k >= 1 and a transcript list"))

    if not is_prime(q0):
        result.fail("q0 = %s is not prime" % q0)
    if lo != q0 ** k:
        result.fail("window starts at %s, not q0^%d" % (lo, k))
    if not left < lo <= hi < right:
        result.fail("window [%s, %s] not strictly inside (%s, %s)"
                    % (lo, hi, left, right))
    for name, p in (("left", left), ("right", right)):
        if not is_prime(p):
            result.fail("%s end %s is not prime" % (name, p))
    if int(data.get("gap_length", -1)) != right - left:
        result.fail("gap_length %s != %s" % (data.get("gap_length"),
                                              right - left))

    seen = set()
    for entry in transcript:
        try:
            n = gmpy2.mpz(str(entry["n"]))
            witness = entry["witness"]
        except (KeyError, ValueError, TypeError):
            raise ConfigError(_("Malformed transcript entry %r") % (entry,))
        if not left < n < right:
            result.fail("%s listed outside the gap" % n)
            continue
        if n in seen:
            result.fail("%s listed twice" % n)
        seen.add(n)
        _check_witness(n, witness, result)
    missing = int(right - left - 1) - len(seen)
    if missing > 0:
        result.fail("%d interior integers missing from the transcript" % missing)

    for key in ("m0", "P_x", "r"):
        if data.get(key) is None:
            break
    else:
        m0, modulus = _number(data, "m0"), _number(data, "P_x")
        if q0 != m0 + 1 + int(data["r"]) * modulus:
            result.fail("q0 != m0 + 1 + r * P_x")

    _check_ratio(data, left, right, result)

    certificate = data.get("q0_certificate")
    if certificate is not None:
        if gmpy2.mpz(certificate.get("n", 0)) != q0:
            result.fail("primality certificate is for another number")
        elif not check_prime_certificate(certificate):
            result.fail("primality certificate of q0 does not check")

def verify_certificate(source):
    """Re-checks a certificate given as a path, a dict or a list of dicts."""
    data = load_certificate(source) if isinstance(source, str) else source
    result = Verification()
    if isinstance(data, list) and not data:
        raise ConfigError(_("Certificate list is empty"))
    for item in data if isinstance(data, list) else [data]:
        if not isinstance(item, dict):
            raise ConfigError(_("Certificate is not a JSON object"))
        _check_one(item, result)
    LOGGER.log("verified certificate: %s"
               % ("ok" if result.ok else "; ".join(result.diagnostics)))
    return result
