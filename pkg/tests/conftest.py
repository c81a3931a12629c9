import numpy as np
import pytest
from scipy.linalg import toeplitz

from lmar.ar1 import Ar1Model
from lmar.covariance import CovarianceModel
from lmar.moments import MomentContext


def brute_double_sum(model, theta, k=0, size=2000):
    """``sum_{i,j<=size} theta^(i+j) rho(k - i + j)`` as a quadratic form."""
    idx = np.arange(size + 1)
    w = theta ** idx.astype(float)
    col = model.acf(k - idx)  # A[i, 0] = rho(k - i)
    row = model.acf(k + idx)  # A[0, j] = rho(k + j)
    return float(w @ toeplitz(col, row) @ w)


@pytest.fixture(scope="session")
def fgn7():
    return CovarianceModel.fgn(0.7)


@pytest.fixture(scope="session")
def white():
    return CovarianceModel.white_noise()


@pytest.fixture(scope="session")
def ctx_white():
    return MomentContext(Ar1Model(0.5, CovarianceModel.white_noise()))


@pytest.fixture(scope="session")
def ctx_fgn7():
    return MomentContext(Ar1Model(0.5, CovarianceModel.fgn(0.7)))


@pytest.fixture(scope="session")
def ctx_fgn6():
    return MomentContext(Ar1Model(0.5, CovarianceModel.fgn(0.6)))
