"""
Shared fixtures for the ghlab test-suite
"""

import sys
from pathlib import Path

import numpy as np
import pytest

root = Path(__file__).parent.parent
sys.path.insert(0, str(root / "src"))
sys.path.insert(0, str(root))

from ghlab.config_loader import settings  # noqa: E402
from ghlab.core.metric_core import FiniteMetricSpace, length_metric  # noqa: E402
from ghlab.utils.generators import cycle_space, line_points  # noqa: E402


@pytest.fixture
def path_abc():
    return length_metric([("a", "b", 1.0), ("b", "c", 1.0)], id="abc")


@pytest.fixture
def four_cycle():
    return cycle_space(4)


@pytest.fixture
def line11():
    return line_points(11)


@pytest.fixture
def equilateral():
    return FiniteMetricSpace("equilateral", ("a", "b", "c"), 1 - np.eye(3))


@pytest.fixture
def coarse_mesh(monkeypatch):
    """Allow meshes coarser than the production limit so cover tests stay quick"""
    monkeypatch.setattr(settings, "max_mesh_h", 0.25)
    return settings
