from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from util import bottleneck_profile, bottleneck_system  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "frpsim" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def system118():
    from frpsim.network import load_system

    return load_system(DATA_DIR / "ieee118.json")


@pytest.fixture(scope="session")
def bottleneck():
    """The 5-bus deliverability case study system and its forecast day."""
    from frpsim.network import compute_ptdf

    system = bottleneck_system()
    return system, compute_ptdf(system), bottleneck_profile()


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)
