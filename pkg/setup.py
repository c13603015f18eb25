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

import sys
import os
import glob
import shutil
import tarfile

from setuptools import setup

version = "1.0.0"

distfiles = """
    setup.py
    setup.cfg
    requirements.txt
    README.md
    bin/*.py
    etc/gapforge.conf
    tests/*.py
"""

modules = ["gapforge", "gapforge_arith", "gapforge_concentration",
           "gapforge_config", "gapforge_construct", "gapforge_cover",
           "gapforge_errors", "gapforge_log", "gapforge_residues",
           "gapforge_verify", "gapforge_weights"]

i18n_source_list = ["bin/%s.py" % name for name in modules]

def requirements():
    with open("requirements.txt") as _file:
        return [line.strip() for line in _file
                if line.strip() and not line.startswith("#")]

def update_messages():
    if not os.path.exists("po"):
        os.mkdir("po")
    os.system("xgettext -o po/gapforge.pot %s" % " ".join(i18n_source_list))
    for item in os.listdir("po"):
        if item.endswith(".po"):
            os.system("msgmerge -q -o temp.po po/%s po/gapforge.pot" % item)
            os.system("cp temp.po po/%s" % item)
    if os.path.exists("temp.po"):
        os.unlink("temp.po")

def make_dist():
    distdir = "gapforge-%s" % version
    files = []
    for pattern in distfiles.split():
        files.extend(glob.glob(pattern))
    if os.path.exists(distdir):
        shutil.rmtree(distdir)
    for file_ in files:
        dest = os.path.join(distdir, file_)
        os.makedirs(os.path.dirname(dest), exist_ok=True)
        shutil.copy(file_, dest)
    with tarfile.open("%s.tar.bz2" % distdir, "w:bz2") as tar:
        tar.add(distdir)
    shutil.rmtree(distdir)

def do_setup(args):
    if args and args[0] == "update_messages":
        update_messages()

    elif args and args[0] == "dist":
        make_dist()

    else:
        setup(name="gapforge",
              version=version,
              description="Certified prime gaps containing prime powers",
              license="GPLv2+",
              package_dir={"": "bin"},
              py_modules=modules,
              install_requires=requirements(),
              data_files=[("etc", ["etc/gapforge.conf"])],
              entry_points={"console_scripts": ["gapforge=gapforge:main"]})

if __name__ == "__main__":
    do_setup(sys.argv[1:])
