import numpy as np
import pytest

from seqquant.dp import DPConfig, solve_stationary
from seqquant.models import DeterministicQuantizer, HypothesisPair, induce

F0 = [0.8, 0.1999, 0.0001]
F1 = [1 / 3, 1 / 3, 1 / 3]
PRIOR1 = 0.08
MAPS = {"A": (0, 1, 1), "B": (0, 0, 1), "C": (0, 1, 0)}


@pytest.fixture(scope="session")
def hp():
    return HypothesisPair(F0, F1, PRIOR1)


@pytest.fixture(scope="session")
def quantizers():
    return {k: DeterministicQuantizer(v) for k, v in MAPS.items()}


@pytest.fixture(scope="session")
def channels(hp, quantizers):
    return {k: induce(q, hp, name=k) for k, q in quantizers.items()}


@pytest.fixture(scope="session")
def dp_cfg():
    return DPConfig(c=0.01)


@pytest.fixture(scope="session")
def tables(channels, dp_cfg):
    """Stationary value functions of the three designs at c = 0.01."""
    return {k: solve_stationary(ch, dp_cfg) for k, ch in channels.items()}


def kl_oracle(p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    m = p > 0
    return float(np.sum(p[m] * np.log(p[m] / q[m])))
