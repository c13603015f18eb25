#!/usr/bin/python3
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
Command line front end: construct, verify, weights, cover-sim,
concentration and rho. Every command prints a short summary, or with
--json a machine readable report.
"""

import sys
import json
import math
import time
from optparse import OptionParser

import numpy as np

from gapforge_arith import dickman_rho, prime_range, prime_table, \
    smooth_count_exact
from gapforge_concentration import exact_membership, good_fraction, \
    good_integers, good_set_params, mc_membership, params_from_context, \
    sample_a, sigma
from gapforge_config import Config
from gapforge_construct import build_context, construct
from gapforge_cover import audit_pairs, codegree_audit, default_rounds, \
    simulate_cover, synthetic_instance, uniform_covering_report, \
    weighted_edge_sampler, weighted_instance
from gapforge_errors import ConfigError, GapforgeError, VerificationError
from gapforge_log import LOGGER, UI, _
from gapforge_verify import verify_certificate
from gapforge_weights import PSI_VARIANT, build_lattice, \
    character_restricted_sum_check, concentration_moment_check, default_R, \
    find_admissible_tuple, gate_check, is_admissible, lp_weights, \
    theorem77_check, theorem78_check, tuple_system, weight_table

VERSION = "1.0.0"

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_ERROR = 3

############
# Options  #
############

# key: (flag, help)
OPTIONS = {
    "x"                 : ("--x", _("sieve scale x")),
    "k"                 : ("--k", _("exponent of q0^k")),
    "c"                 : ("--c", _("window constant c")),
    "C0"                : ("--C0", _("CRT window constant")),
    "y"                 : ("--y", _("override the window end y")),
    "z"                 : ("--z", _("override the smoothness bound z")),
    "s_floor"           : ("--s-floor", _("override the lower end of S")),
    "strategy"          : ("--strategy", _("greedy or random vectors")),
    "seed"              : ("--seed", _("random seed")),
    "rmax"              : ("--rmax", _("largest row to scan")),
    "certificates"      : ("--certificates", _("clean rows to certify")),
    "delta"             : ("--delta", _("quadratic residue threshold")),
    "out"               : ("--out", _("write certificates to this file")),
    "block_size"        : ("--block-size", _("sieve segment size")),
    "sieve_limit"       : ("--sieve-limit", _("largest sieved integer")),
    "prp_rounds"        : ("--prp-rounds", _("probable prime rounds")),
    "certify"           : ("--certify", _("attach a primality certificate")),
    "trial_bound"       : ("--trial-bound", _("trial division bound")),
    "tolerance"         : ("--tolerance", _("absolute good set tolerance")),
    "tolerance_exponent": ("--tolerance-exponent",
                           _("tolerance is (log x)^-exponent")),
    "lenient"           : ("--lenient", _("ignore translates off the window")),
    "trials"            : ("--trials", _("Monte-Carlo trials")),
    "t"                 : ("--t", _("number of good integers")),
    "g"                 : ("--g", _("number of linear forms")),
    "r_tuple"           : ("--r-tuple", _("shifts h1,h2,... or auto")),
    "R"                 : ("--R", _("sieve level R, 0 for x^(theta/4)")),
    "theta"             : ("--theta", _("level of distribution")),
    "range"             : ("--range", _("integer window lo:hi")),
    "p"                 : ("--p", _("prime p of the restricted sums")),
    "B"                 : ("--B", _("excluded modulus B")),
    "check"             : ("--check", _("77, 78, 711, 713, 720 or moments")),
    "u_class"           : ("--u-class", _("unit u mod k of the moments")),
    "pair"              : ("--pair", _("translate pair i,l")),
    "mode"              : ("--mode", _("synthetic or weighted")),
    "m"                 : ("--m", _("number of covering rounds")),
    "replicates"        : ("--replicates", _("independent replicates")),
    "vertices"          : ("--vertices", _("synthetic vertex count")),
    "edge_size"         : ("--edge-size", _("synthetic edge size")),
    "coverage"          : ("--coverage", _("total normalized degree")),
    "probe_samples"     : ("--probe-samples", _("draws per probed edge")),
    "band"              : ("--band", _("allowed relative deviation")),
    "degree_floor"      : ("--degree-floor", _("smallest acceptable P_j")),
    "simulation"        : ("--simulation", _("nibble or independent")),
    "u"                 : ("--u", _("argument of rho")),
    "workers"           : ("--workers", _("worker threads")),
    "cache_dir"         : ("--cache-dir", _("prime table cache directory")),
    "log_file"          : ("--log-file", _("append the run log here")),
    "debug"             : ("--debug", _("log debug messages")),
    "json"              : ("--json", _("print the JSON report")),
}

FLAGS = ("certify", "lenient", "debug", "json")

COMMON = ("workers", "cache_dir", "log_file", "debug", "json", "seed")
CONTEXT = ("x", "k", "c", "C0", "y", "z", "s_floor")
GOOD_SET = ("tolerance", "tolerance_exponent", "lenient")
TUPLE = ("g", "r_tuple", "R", "theta", "B")

COMMANDS = {
    "construct"    : CONTEXT + ("strategy", "rmax", "certificates", "delta",
                                "out", "block_size", "sieve_limit",
                                "prp_rounds", "certify", "trial_bound"),
    "verify"       : (),
    "weights"      : TUPLE + GOOD_SET + ("k", "range", "p", "check", "u_class",
                                         "pair", "s_floor", "z"),
    "cover-sim"    : CONTEXT + GOOD_SET + TUPLE + (
        "mode", "m", "replicates", "vertices", "edge_size", "coverage",
        "probe_samples", "band", "degree_floor", "simulation"),
    "concentration": CONTEXT + GOOD_SET + ("trials", "t"),
    "rho"          : ("u", "y", "z"),
}

def usage():
    print(_("""usage: gapforge <command> [<options>]
where command is:
 construct      Build a prime gap around q0^k and write its certificate
 verify         Re-check a certificate file
 weights        Compare sieve weight sums with their main terms
 cover-sim      Simulate the random hypergraph covering
 concentration  Survival of good integers under random sieving
 rho            Dickman rho and smooth number counts
and option is:
 --config FILE  Read key=value settings from FILE
 --json         Print the full JSON report
 -h, --help     Show the options of a command"""))

class _Parser(OptionParser):
    """Parse errors become ConfigError instead of exiting."""
    def error(self, msg):
        self.print_usage(sys.stderr)
        raise ConfigError(msg)

def _parser(command):
    parser = _Parser(usage=_("gapforge %s [options]%s")
                     % (command, " <certificate>" if command == "verify" else ""))
    parser.add_option("--config", dest="config", type="string",
                      help=_("read settings from this file"))
    for key in COMMANDS[command] + COMMON:
        flag, text = OPTIONS[key]
        if key in FLAGS:
            parser.add_option(flag, dest=key, action="store_true",
                              default=None, help=text)
        else:
            parser.add_option(flag, dest=key, type="string", help=text)
    return parser

##########
# Report #
##########

class Timer:
    """Wall clock per named phase."""
    def __init__(self):
        self.timings = {}

    def phase(self, name):
        timer = self

        class _Phase:
            def __enter__(self):
                self.start = time.time()

            def __exit__(self, *exc):
                timer.timings[name] = time.time() - self.start
        return _Phase()

def _clean(value):
    """Makes a report JSON safe: NaN and infinities become null."""
    if isinstance(value, dict):
        return dict((str(key), _clean(item)) for key, item in value.items())
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value

def _emit(command, config, timer, result):
    report = _clean({"version": VERSION,
                     "psi_variant": PSI_VARIANT,
                     "command": command,
                     "config": config.echo(),
                     "timings": timer.timings,
                     "result": result})
    if config.get("json"):
        print(json.dumps(report, sort_keys=True, indent=2))
        return
    for key, value in sorted(report["result"].items()):
        if isinstance(value, (dict, list)):
            continue
        print("%-24s %s" % (key, value))

#################
# Small parsers #
#################

def _ints(text, what):
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(_("%s must be comma separated integers: %r")
                          % (what, text))

def _window(text):
    try:
        lo, hi = [int(float(item)) for item in text.split(":")]
    except ValueError:
        raise ConfigError(_("range must look like lo:hi, not %r") % text)
    if lo > hi:
        raise ConfigError(_("empty range %s") % text)
    return lo, hi

def _shifts(config):
    if config.get("r_tuple") == "auto":
        return find_admissible_tuple(config.get("g"))
    shifts = tuple(_ints(config.get("r_tuple"), "r_tuple"))
    if not is_admissible(shifts):
        raise ConfigError(_("tuple %r is not admissible") % (shifts,))
    return shifts

def _overrides(config):
    return {"y": config.get("y"), "z": config.get("z"),
            "s_floor": config.get("s_floor")}

def _context(config, primes=None):
    return build_context(config.get("x"), config.get("k"), config.get("c"),
                         config.get("C0"), _overrides(config), primes)

def _context_summary(ctx):
    return {"x": ctx.x, "k": ctx.k, "y": ctx.y, "z": ctx.z,
            "s_floor": ctx.s_floor, "S": len(ctx.S), "P": len(ctx.P),
            "Q": len(ctx.Q), "Ptilde": len(ctx.Ptilde)}

def _good_params(config, ctx):
    return params_from_context(ctx, config.get("tolerance"),
                               config.get("tolerance_exponent"),
                               config.get("lenient"))

############
# Commands #
############

def cmd_construct(config, args, timer):
    cache_dir = config.get("cache_dir")

    def primes(lo, hi):
        table = prime_table(hi, cache_dir, config.get("workers"),
                            config.get("block_size"), config.get("sieve_limit"))
        return table.between(lo, hi)

    with timer.phase("context"):
        ctx = _context(config, primes)
    with timer.phase("construct"):
        result = construct(ctx, config.get("strategy"), config.get("seed"),
                           config.get("rmax"), config.get("certificates"),
                           config.get("delta"), config.get("workers"),
                           config.get("prp_rounds"), config.get("trial_bound"),
                           config.get("certify"))
    certificates = [cert.to_dict() for cert in result.certificates]
    report = {"context": _context_summary(ctx),
              "metrics": result.metrics,
              "certificates": len(certificates)}
    if not certificates:
        _emit("construct", config, timer, report)
        UI.error(_("No clean row up to r = %d") % config.get("rmax"))
        return EXIT_ERROR

    with timer.phase("verify"):
        check = verify_certificate(certificates)
    first = certificates[0]
    report.update({"q0": first["q0"], "gap_length": first["gap_length"],
                   "ratio": first["ratio"], "r": first["r"],
                   "verified": check.ok})
    out = config.get("out")
    if out:
        try:
            with open(out, "w") as _file:
                json.dump(certificates[0] if len(certificates) == 1
                          else certificates, _file, sort_keys=True, indent=1)
        except (IOError, OSError) as error:
            raise ConfigError(_("Cannot write %s: %s") % (out, error))
        UI.info(_("Certificate written to %s") % out)
    else:
        report["certificate_list"] = certificates
    _emit("construct", config, timer, report)
    if not check:
        raise VerificationError(check.diagnostics)
    return EXIT_OK

def cmd_verify(config, args, timer):
    if len(args) != 1:
        raise ConfigError(_("verify needs exactly one certificate file"))
    with timer.phase("verify"):
        check = verify_certificate(args[0])
    for diagnostic in check.diagnostics:
        UI.error(diagnostic)
    _emit("verify", config, timer, {"path": args[0], "ok": check.ok,
                                    "diagnostics": check.diagnostics})
    return EXIT_OK if check else EXIT_VERIFY

def _weights_params(config, window):
    lo, hi = window
    floor = config.get("s_floor") or 7
    top = config.get("z") or 300
    return good_set_params(prime_range(floor, top), config.get("k"),
                           max(lo, 2), hi, config.get("tolerance"),
                           config.get("tolerance_exponent"),
                           config.get("lenient"))

def _required_p(config, check):
    p = config.get("p")
    if not p:
        raise ConfigError(_("check %s needs --p") % check)
    return p

def cmd_weights(config, args, timer):
    shifts = _shifts(config)
    window = _window(config.get("range"))
    R = config.get("R") or default_R(window[1], config.get("theta"))
    system = tuple_system(shifts, config.get("B"), config.get("theta"), R)
    check = config.get("check")
    workers = config.get("workers")
    k = config.get("k")

    with timer.phase("weights"):
        if check in ("77", "78"):
            table = weight_table(system, window, R, workers)
            found = theorem77_check(table) if check == "77" \
                else theorem78_check(table)
        elif check in ("711", "713"):
            p = _required_p(config, check)
            table = weight_table(system, window, R, workers)
            found = character_restricted_sum_check(table, p, k)
        elif check in ("720", "moments"):
            p = _required_p(config, check)
            table = lp_weights(build_lattice(system, R), shifts, p,
                               window[0], window[1], workers)
            params = _weights_params(config, window)
            if check == "720":
                found = gate_check(table, p, k, params, shifts)
            else:
                i, l = (_ints(config.get("pair"), "pair") + [0, 1])[:2]
                found = concentration_moment_check(
                    table, p, config.get("u_class"), params, shifts, i, l)
        else:
            raise ConfigError(_("unknown check '%s'") % check)
    report = dict(found)
    report.update({"check": check, "shifts": list(shifts), "R": R,
                   "range": list(window)})
    _emit("weights", config, timer, report)
    return EXIT_OK

def _residual_table(stats, synthetic):
    rows = []
    for j, mean in enumerate(stats.round_means, 1):
        row = {"round": j, "mean": mean}
        if synthetic:
            row["target"] = 5.0 ** -j
        rows.append(row)
    return rows

def cmd_cover_sim(config, args, timer):
    mode = config.get("mode")
    seed = config.get("seed")
    workers = config.get("workers")
    m = config.get("m")
    if mode == "synthetic":
        with timer.phase("simulate"):
            instance = synthetic_instance(config.get("vertices"),
                                          m or default_rounds(config.get("x")),
                                          config.get("edge_size"),
                                          config.get("coverage"))
            stats = simulate_cover(instance, None, seed,
                                   config.get("replicates"),
                                   config.get("simulation"), workers,
                                   config.get("degree_floor"),
                                   probe_samples=config.get("probe_samples"))
        report = {"mean": stats.mean, "sd": stats.sd,
                  "predicted_nibble": stats.predicted_nibble,
                  "predicted_independent": stats.predicted_independent,
                  "stats": stats.to_dict(),
                  "residual_table": _residual_table(stats, True)}
    elif mode == "weighted":
        with timer.phase("context"):
            ctx = _context(config)
            params = _good_params(config, ctx)
            a_part = sample_a(params, seed)
        with timer.phase("edges"):
            shifts = _shifts(config)
            R = config.get("R") or default_R(ctx.y, config.get("theta"))
            system = tuple_system(shifts, config.get("B"), config.get("theta"), R)
            lattice = build_lattice(system)
            sampler = weighted_edge_sampler(ctx, lattice, a_part, shifts, seed,
                                            params, config.get("band"),
                                            workers)
        with timer.phase("simulate"):
            instance = weighted_instance(sampler, m or default_rounds(ctx.x))
            stats = simulate_cover(instance, None, seed,
                                   config.get("replicates"),
                                   config.get("simulation"), workers,
                                   config.get("degree_floor"))
            covering = uniform_covering_report(sampler, ctx, a_part,
                                               config.get("band"))
            findings = codegree_audit(sampler, audit_pairs(sampler, seed))
        report = {"mean": stats.mean, "sd": stats.sd,
                  "vertices": sampler.n_vertices,
                  "edges": len(sampler.primes),
                  "sampler": sampler.report,
                  "stats": stats.to_dict(),
                  "residual_table": _residual_table(stats, False),
                  "covering": covering,
                  "codegree": {
                      "pairs": len(findings),
                      "violations": sum(1 for item in findings
                                        if not (item["divides"]
                                                and item["unique"]))}}
    else:
        raise ConfigError(_("unknown cover-sim mode '%s'") % mode)
    _emit("cover-sim", config, timer, report)
    return EXIT_OK

def cmd_concentration(config, args, timer):
    with timer.phase("context"):
        ctx = _context(config)
        params = _good_params(config, ctx)
    t = config.get("t")
    with timer.phase("sample"):
        n_list = good_integers(params, t)
        estimate, stderr = mc_membership(n_list, params, config.get("trials"),
                                         config.get("seed"),
                                         config.get("workers"))
    value = sigma(params).sigma
    report = {"context": _context_summary(ctx),
              "n_list": n_list,
              "estimate": estimate,
              "stderr": stderr,
              "sigma": value,
              "sigma_t": value ** t,
              "exact": exact_membership(n_list, params),
              "good_fraction": good_fraction(ctx.x, min(ctx.y, ctx.x + 10 ** 5),
                                             params)}
    _emit("concentration", config, timer, report)
    return EXIT_OK

def cmd_rho(config, args, timer):
    u = config.get("u")
    report = {"u": u, "rho": dickman_rho(u)}
    y, z = config.get("y"), config.get("z")
    if y and z:
        with timer.phase("count"):
            count = smooth_count_exact(y, z)
        estimate = y * dickman_rho(math.log(y) / math.log(z))
        report.update({"y": y, "z": z, "smooth_count": count,
                       "estimate": estimate,
                       "ratio": count / estimate if estimate else None})
    _emit("rho", config, timer, report)
    return EXIT_OK

HANDLERS = {
    "construct"    : cmd_construct,
    "verify"       : cmd_verify,
    "weights"      : cmd_weights,
    "cover-sim"    : cmd_cover_sim,
    "concentration": cmd_concentration,
    "rho"          : cmd_rho,
}

########
# Main #
########

def run(argv):
    """Runs one command and returns its exit code."""
    if not argv or argv[0] in ("help", "-h", "--help"):
        usage()
        return EXIT_OK if argv else EXIT_CONFIG
    command = argv[0]
    if command not in HANDLERS:
        UI.error(_("Unknown command: %s") % command)
        usage()
        return EXIT_CONFIG

    try:
        try:
            options, args = _parser(command).parse_args(argv[1:])
        except SystemExit as exit:
            return exit.code or EXIT_OK
        values = dict(vars(options))
        config = Config(values.pop("config"))
        config.update(values)
        LOGGER.configure(config.get("log_file"), config.get("debug"))
        LOGGER.log("gapforge %s %s" % (command, " ".join(argv[1:])))
        if command != "verify" and args:
            raise ConfigError(_("unexpected arguments: %s") % " ".join(args))
        return HANDLERS[command](config, args, Timer())
    except ConfigError as error:
        UI.error(str(error))
        return EXIT_CONFIG
    except VerificationError as error:
        for diagnostic in error.diagnostics:
            UI.error(diagnostic)
        return EXIT_VERIFY
    except GapforgeError as error:
        UI.error("%s: %s" % (error.__class__.__name__, error))
        return EXIT_ERROR
    finally:
        LOGGER.flush()

def main():
    sys.exit(run(sys.argv[1:]))

if __name__ == "__main__":
    main()
