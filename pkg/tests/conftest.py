import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
SCRIPTS = ROOT / "skills" / "gammaflow" / "scripts"
if str(SCRIPTS) not in sys.path:
    sys.path.insert(0, str(SCRIPTS))

from lib import env, spaces  # noqa: E402
from lib.numerics import PrecisionContext  # noqa: E402


@pytest.fixture
def pc():
    return PrecisionContext(50)


@pytest.fixture
def ctx(pc):
    return pc.mp


@pytest.fixture
def p1():
    return spaces.builtin_space("P1")


@pytest.fixture
def p2():
    return spaces.builtin_space("P2")


@pytest.fixture
def data_dir():
    return ROOT / "skills" / "gammaflow" / "data"


@pytest.fixture
def clean_config(monkeypatch, tmp_path):
    """No global or project config files, no GAMMAFLOW_* overrides from the caller's shell."""
    monkeypatch.setattr(env, "CONFIG_FILE", None)
    monkeypatch.chdir(tmp_path)
    for key in ("GAMMAFLOW_DIGITS", "GAMMAFLOW_MAX_DIGITS", "GAMMAFLOW_MATCH_DIGITS",
                "GAMMAFLOW_WORKERS", "GAMMAFLOW_OUTPUT_DIR"):
        monkeypatch.delenv(key, raising=False)
    return tmp_path
