from __future__ import annotations

from pathlib import Path

import pytest

from singleshot.codes import build_product_16_2, build_toric_18_2
from singleshot.decoder import build_tables
from singleshot.gf2 import BitMatrix

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> BitMatrix:
    return BitMatrix.load(FIXTURES / f"{name}.txt")


@pytest.fixture(scope="session")
def product():
    return build_product_16_2()


@pytest.fixture(scope="session")
def toric():
    return build_toric_18_2()


@pytest.fixture(scope="session", params=["product", "toric"])
def any_code(request):
    return request.getfixturevalue(request.param)


@pytest.fixture(scope="session")
def product_tables(product):
    return build_tables(product, seed=0)


@pytest.fixture(scope="session")
def toric_tables(toric):
    return build_tables(toric, seed=0)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
