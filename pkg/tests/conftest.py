import pytest

from eprsim import OpoParams, epr_spectra

import refvals


@pytest.fixture(scope="session")
def calibrated_pair():
    """P-squeezed and X-squeezed OPOs hitting -3.74 / -3.30 dB at T=0.2 us."""
    opo1 = OpoParams(pump_param=refvals.X_374, hwhm=refvals.HWHM,
                     efficiency=refvals.ETA, squeeze_phase="P")
    opo2 = OpoParams(pump_param=refvals.X_330, hwhm=refvals.HWHM,
                     efficiency=refvals.ETA, squeeze_phase="X")
    return opo1, opo2


@pytest.fixture(scope="session")
def calibrated_spectra(calibrated_pair):
    return epr_spectra(*calibrated_pair)
