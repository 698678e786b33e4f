"""
Pytest configuration and shared fixtures for tests.
"""
import os
import sys
from pathlib import Path

import pytest

# Add backend to path for imports
ROOT = Path(__file__).resolve().parents[1]
BACKEND_PATH = ROOT / "backend"
if str(BACKEND_PATH) not in sys.path:
    sys.path.insert(0, str(BACKEND_PATH))

# Set test environment variables
os.environ.setdefault("DARKCOMB_THREADS", "1")
os.environ.setdefault("DARKCOMB_BATCH_SIZE", "256")
os.environ.setdefault("FLOQUET_MAX_HARMONICS", "32")
os.environ.setdefault("FLOQUET_TOL", "1e-10")
os.environ.setdefault("DOPPLER_MAX_ORDER", "512")
os.environ.setdefault("TESTING", "true")  # Mark as testing environment - must be set before any package imports


@pytest.fixture
def periodic_system():
    """Periodic 4-level model with a strong, round ground decoherence."""
    from darkcomb.services.model import AtomSystem, ModelKind

    return AtomSystem(kind=ModelKind.PERIODIC, gamma_transit=0.03, gamma_deph=0.02)


@pytest.fixture
def split_system():
    from darkcomb.services.model import AtomSystem, ModelKind

    return AtomSystem(kind=ModelKind.SPLIT, gamma_transit=0.03, gamma_deph=0.02)
