"""Shared fixtures: measured-device parameters and standard registers."""
import pytest

from drcz import ModeRegister, SystemParams


@pytest.fixture(scope="session")
def table_params():
    return SystemParams.table()


@pytest.fixture()
def register2():
    return ModeRegister.standard(2)
