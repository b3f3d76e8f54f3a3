from __future__ import annotations

import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from avfront.flux_model import cubic, greenshields  # noqa: E402
from avfront.mesh import build_grids  # noqa: E402

MODELS = {"greenshields": greenshields(), "cubic": cubic()}


@functools.lru_cache(maxsize=None)
def grids_for(family: str, nu: int):
    return build_grids(MODELS[family], nu)


@pytest.fixture(scope="session")
def gs():
    return MODELS["greenshields"]


@pytest.fixture(scope="session")
def cub():
    return MODELS["cubic"]


@pytest.fixture(scope="session")
def gs_grids():
    return functools.partial(grids_for, "greenshields")


# one line per acceptance criterion, echoed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
