import pathlib

import pytest

from spmvpart import load_matrix_market

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def demo15_path():
    return FIXTURES / "demo15.mtx"


@pytest.fixture(scope="session")
def demo15(demo15_path):
    return load_matrix_market(demo15_path)
