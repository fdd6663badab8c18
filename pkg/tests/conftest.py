"""
Test configuration and fixtures
"""
import numpy as np
import pytest
from fastapi.testclient import TestClient

from dualchoice.main import app
from dualchoice.models.measure import from_samples

SEED = 0x5EED


@pytest.fixture
def client():
    """Create a test client for the HTTP service"""
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def mu3():
    """Reference measure uniform on {0.1, 0.5, 0.9}"""
    return from_samples([0.1, 0.5, 0.9])


@pytest.fixture
def x123():
    """Prospect uniform on {1, 2, 3}"""
    return from_samples([1.0, 2.0, 3.0])


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def write_csv(tmp_path):
    """Write CSV text to a file under tmp_path and return its path as a string"""
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
