# -*- coding: utf-8 -*-

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "bin"))

from gapforge_construct import build_context
from gapforge_log import LOGGER


@pytest.fixture(autouse=True)
def quiet_logger():
    LOGGER.configure(None, False)
    yield
    LOGGER.lines = []


@pytest.fixture
def toy_context():
    """x = 20 with every window pinned: S = {3, 5, 7}, P = {11, 13, 17, 19}."""
    return build_context(20, 2, 1.0, 2.5, {"y": 50, "z": 7, "s_floor": 2})


@pytest.fixture
def tiny_context():
    """x = 4: S = {2}, P = {3}, Ptilde = {7}, positions up to 12."""
    return build_context(4, 2, 1.0, 1.75, {"y": 12, "z": 2, "s_floor": 1})


@pytest.fixture
def cache_dir(tmp_path):
    path = tmp_path / "cache"
    path.mkdir()
    return str(path)
