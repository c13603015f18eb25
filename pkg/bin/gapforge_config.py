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
Run configuration: defaults, the flat key=value config file, flags.
"""

import os
import math

from gapforge_errors import ConfigError

DEFAULT_CONFIG_PATH = "/etc/gapforge.conf"

def load_config(path):
    """Reads key=value formatted config files and returns a dictionary."""
    data = {}
    try:
        with open(path, "r") as _file:
            lines = _file.readlines()
    except (IOError, OSError) as error:
        raise ConfigError("cannot read %s: %s" % (path, error))
    for number, line in enumerate(lines, 1):
        line = line.strip()
        # Ignore comments and empty lines
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key=value" % (path, number))
        key, value = line.split("=", 1)
        data[key.strip()] = value.strip().strip("'").strip('"')
    return data

def _bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "yes", "true", "on"):
        return True
    if text in ("0", "no", "false", "off", ""):
        return False
    raise ValueError("not a boolean: %r" % value)

def _int(value):
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    text = str(value).strip()
    if "e" in text.lower() or "." in text:
        number = float(text)
        if number != int(number):
            raise ValueError("not an integer: %r" % value)
        return int(number)
    return int(text)

def _optional(convert):
    def wrapped(value):
        if value is None or str(value).strip().lower() in ("", "none", "auto"):
            return None
        return convert(value)
    return wrapped

def _text(value):
    return str(value)

# key: (converter, default)
DEFAULTS = {
    # gap construction
    "x"                 : (_int, 20),
    "k"                 : (_int, 2),
    "c"                 : (float, 1.0),
    "C0"                : (float, 2.5),
    "y"                 : (_optional(_int), None),
    "z"                 : (_optional(_int), None),
    "s_floor"           : (_optional(_int), None),
    "strategy"          : (_text, "greedy"),
    "seed"              : (_int, 0),
    "rmax"              : (_int, 100000),
    "certificates"      : (_int, 1),
    "delta"             : (float, 0.0),
    "out"               : (_optional(_text), None),
    # arithmetic
    "workers"           : (_int, 1),
    "block_size"        : (_int, 1 << 20),
    "sieve_limit"       : (_int, 4 * 10 ** 9),
    "prp_rounds"        : (_int, 7),
    "certify"           : (_bool, False),
    "trial_bound"       : (_int, 10000),
    # concentration
    "tolerance"         : (_optional(float), None),
    "tolerance_exponent": (float, 1.0 / 40),
    "lenient"           : (_bool, False),
    "trials"            : (_int, 100000),
    "t"                 : (_int, 2),
    # weights
    "g"                 : (_int, 1),
    "r_tuple"           : (_text, "auto"),
    "R"                 : (_int, 1000),
    "theta"             : (float, 0.25),
    "range"             : (_text, "1:1000000"),
    "p"                 : (_optional(_int), None),
    "B"                 : (_int, 1),
    "check"             : (_text, "77"),
    "u_class"           : (_int, 1),
    "pair"              : (_text, "0,1"),
    # covering simulation
    "mode"              : (_text, "synthetic"),
    "m"                 : (_optional(_int), None),
    "replicates"        : (_int, 20),
    "vertices"          : (_int, 10000),
    "edge_size"         : (_int, 2),
    "coverage"          : (float, 1.25 * math.log(5)),
    "probe_samples"     : (_int, 0),
    "band"              : (float, 0.25),
    "degree_floor"      : (float, 0.0),
    "simulation"        : (_text, "nibble"),
    # dickman
    "u"                 : (float, 3.0),
    # plumbing
    "cache_dir"         : (_optional(_text), None),
    "log_file"          : (_optional(_text), None),
    "debug"             : (_bool, False),
    "json"              : (_bool, False),
}

################
# Config class #
################

class Config:
    """Effective run configuration: defaults < config file < flags."""
    def __init__(self, path=None, environ=None):
        environ = os.environ if environ is None else environ
        self.options = dict((key, default) for key, (_, default)
                            in DEFAULTS.items())
        self.options["cache_dir"] = os.path.join(
            os.path.expanduser("~"), ".cache", "gapforge")
        self.path = None

        if path is None:
            path = environ.get("GAPFORGE_CONF")
            if path is None and os.path.exists(DEFAULT_CONFIG_PATH):
                path = DEFAULT_CONFIG_PATH
        if path is not None:
            self.path = path
            self.update(load_config(path))

        # Environment beats the file for the cache location
        if environ.get("GAPFORGE_CACHE"):
            self.options["cache_dir"] = environ["GAPFORGE_CACHE"]

    def update(self, values):
        """Converts and stores the given raw values."""
        for key, value in values.items():
            if value is None:
                continue
            if key not in DEFAULTS:
                raise ConfigError("unknown option '%s'" % key)
            convert = DEFAULTS[key][0]
            try:
                self.options[key] = convert(value)
            except (TypeError, ValueError):
                raise ConfigError("bad value %r for option '%s'" % (value, key))

    def get(self, key):
        """Custom dictionary getter method."""
        try:
            return self.options[key]
        except KeyError:
            raise ConfigError("unknown option '%s' requested" % key)

    def echo(self):
        """Returns a JSON friendly copy of every option."""
        return dict(sorted(self.options.items()))
