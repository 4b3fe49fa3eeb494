import numpy as np
import pytest

from bthom.model import HH_BT_ALPHA, HH_BT_STATE, builtin_model
from bthom.nfcoeffs import analyze_bt

# the smooth normal-form coefficient set used throughout the comparison tests
NF_COEFFS = (-1.0, 2.0, 0.3, -0.2, 0.5, 0.7)


def fit_slope(x, y):
    return float(np.polyfit(np.log(np.asarray(x, float)),
                            np.log(np.asarray(y, float)), 1)[0])


@pytest.fixture(scope="session")
def bt_nf_model():
    return builtin_model("bt_nf")


@pytest.fixture(scope="session")
def bt_nf_orbital(bt_nf_model):
    return analyze_bt(bt_nf_model, [0, 0], [0, 0], "orbital")


@pytest.fixture(scope="session")
def nf_model():
    a, b, a1, b1, d, e = NF_COEFFS
    return builtin_model("bt_nf", a=a, b=b, a1=a1, b1=b1, d=d, e=e)


@pytest.fixture(scope="session")
def nf_orbital(nf_model):
    return analyze_bt(nf_model, [0, 0], [0, 0], "orbital")


@pytest.fixture(scope="session")
def nf_smooth(nf_model):
    return analyze_bt(nf_model, [0, 0], [0, 0], "smooth")


@pytest.fixture(scope="session")
def nf_hyper(nf_model):
    return analyze_bt(nf_model, [0, 0], [0, 0], "hyper")


@pytest.fixture(scope="session")
def hh_model():
    return builtin_model("hh")


@pytest.fixture(scope="session")
def hh_orbital(hh_model):
    return analyze_bt(hh_model, HH_BT_STATE, HH_BT_ALPHA, "orbital")
