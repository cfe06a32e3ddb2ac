import numpy as np
import pytest

from spectral_law import PopulationSpectrum


@pytest.fixture
def rng():
    """Fixed RNG for reproducible tests."""
    return np.random.default_rng(42)


@pytest.fixture
def identity100():
    return PopulationSpectrum.identity(100.0)


@pytest.fixture
def two_atom100():
    """0.5 delta_1 + 0.5 delta_15 at phi = 100."""
    return PopulationSpectrum.parse("0.5:1,0.5:15", 100.0)


@pytest.fixture
def ledger(tmp_path, monkeypatch):
    """Point the runs ledger at a throwaway sqlite file."""
    path = tmp_path / "runs.db"
    monkeypatch.setenv("COVTEST_DB_PATH", str(path))
    return path
