import sys
from pathlib import Path

import pytest

from settings import Settings

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def settings():
    return Settings()


@pytest.fixture
def host_command():
    """Command line for a model host run from the repository root"""
    def command(*args):
        return [sys.executable, "-m", "bridge.host", *args]
    return command


@pytest.fixture
def repo_root():
    return str(REPO_ROOT)
