import pytest

from acamsim.cell import calibrated_defaults
from acamsim.devices import TsDeviceParams


@pytest.fixture(scope="session")
def params():
    return calibrated_defaults()


@pytest.fixture(scope="session")
def ts_params():
    return TsDeviceParams()
