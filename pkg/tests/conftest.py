"""Shared fixtures and hypothesis profiles."""
import os

import pytest
from hypothesis import HealthCheck, settings

from l1workbench.spaces.coding import CodingRegistry
from l1workbench.spaces.profiles import PaperProfile, make_profile

settings.register_profile("fast", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def micro():
    """m_j = n_j = 2^j."""
    return make_profile("micro")


@pytest.fixture
def mini():
    """m_j = 2^j, n_j = 2^(j+1)."""
    return make_profile("mini")


@pytest.fixture
def paper():
    return PaperProfile()


@pytest.fixture
def registry():
    return CodingRegistry()


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """Run from an empty directory with no workbench environment overrides."""
    monkeypatch.delenv("WORKBENCH_PROFILE", raising=False)
    monkeypatch.delenv("WORKBENCH_OUTPUT_DIR", raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path
