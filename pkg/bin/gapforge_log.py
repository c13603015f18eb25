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
Buffered run log and colored console messages.
"""

import re
import sys
import time
import gettext
import threading

########
# i18n #
########

__trans = gettext.translation('gapforge', fallback=True)
_ = __trans.gettext

_START = time.time()

################
# Logger class #
################

class Logger:
    """Logger class buffering lines until flushed into the run log."""
    def __init__(self):
        self.lines = []
        self.debug_enabled = False
        self.path = None
        self._lock = threading.Lock()

    def configure(self, path=None, debug=False):
        """Sets the log file and the debug switch."""
        self.path = path
        self.debug_enabled = bool(debug)

    def log(self, msg):
        """Logs the given message."""
        stamp = time.strftime("%b %d %H:%M:%S")
        # Strip color characters
        msg = re.sub("(\033.*?m)", "", msg)
        line = "[%.3f] %s %s\n" % (time.time() - _START, stamp, msg)
        with self._lock:
            self.lines.append(line)

    def debug(self, msg):
        """Log the message if debug is enabled."""
        if self.debug_enabled:
            self.log(msg)

    def flush(self):
        """Flushes the log buffer."""
        with self._lock:
            lines, self.lines = self.lines, []
        if not self.path or not lines:
            return
        try:
            with open(self.path, "a") as _file:
                _file.writelines(lines)
        except (IOError, OSError):
            UI.error(_("Cannot write %s") % self.path)

############
# Ui class #
############

class Ui:
    """Console messages on stderr, colored when it is a terminal."""

    def __init__(self, stream=None):
        self.stream = stream
        self.colors = {'red'        : '\x1b[31;01m', # BAD
                       'blue'       : '\x1b[34;01m',
                       'cyan'       : '\x1b[36;01m',
                       'green'      : '\x1b[32;01m', # GOOD
                       'yellow'     : '\x1b[33;01m', # WARN
                       'normal'     : '\x1b[0m'}     # NORMAL

    def _out(self):
        return self.stream if self.stream is not None else sys.stderr

    def _write(self, color, msg):
        out = self._out()
        if hasattr(out, "isatty") and out.isatty():
            out.write(" %s*%s %s\n" % (self.colors[color],
                                       self.colors['normal'], msg))
        else:
            out.write(" * %s\n" % msg)

    def info(self, msg):
        """Print the given message and log if debug enabled."""
        LOGGER.debug(msg)
        self._write('green', msg)

    def warn(self, msg):
        """Print the given message as a warning and log it."""
        LOGGER.log(msg)
        self._write('yellow', msg)

    def error(self, msg):
        """Print the given message as an error and log it."""
        LOGGER.log(msg)
        self._write('red', msg)


LOGGER = Logger()
UI = Ui()
