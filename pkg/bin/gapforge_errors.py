# -*- coding: utf-8 -*-
#
# gapforge - certified prime gaps around prime powers
#
# This program is free software; you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by the
# Free Software Foundation; either version 2 of the License, or (at your
# option) any later version. Please read the COPYING file.
#

"""Exception hierarchy shared by every gapforge module."""


class GapforgeError(Exception):
    """Base class of all gapforge errors."""


class CapacityError(GapforgeError):
    """Raised when a request exceeds a configured memory or scale budget."""

    def __init__(self, message, estimate=None):
        GapforgeError.__init__(self, message)
        self.estimate = estimate


class DomainError(GapforgeError, ValueError):
    """Raised when an argument lies outside the mathematical domain."""


class CoprimeError(GapforgeError, ValueError):
    """Raised by CRT assembly when two moduli share a factor."""

    def __init__(self, first, second):
        GapforgeError.__init__(self,
                               "moduli %d and %d are not coprime" % (first, second))
        self.pair = (first, second)


class ContextError(GapforgeError):
    """Raised when default window formulas degenerate without overrides."""

    def __init__(self, failures):
        GapforgeError.__init__(self, "degenerate defaults: %s" % "; ".join(failures))
        self.failures = list(failures)


class AssemblyError(GapforgeError):
    """Raised when a prime receives two congruence assignments."""

    def __init__(self, prime):
        GapforgeError.__init__(self, "prime %d assigned twice" % prime)
        self.prime = prime


class ScanError(GapforgeError):
    """Raised when a sieved matrix entry is not divisible by its prime."""


class VerificationError(GapforgeError):
    def __init__(self, diagnostics):
        GapforgeError.__init__(self, "; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


class ConfigError(GapforgeError):
    """Raised for unknown configuration keys or unparsable values."""
