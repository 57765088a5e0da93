import math

import pytest

from hybridpulse.compiler import GateSpec, SequenceOrder
from hybridpulse.model import HybridParams, find_anticrossings
from hybridpulse.pulses import schedule_rotation
from hybridpulse.twoqubit import TwoQubitParams, conditional_phase_schedule


@pytest.fixture(scope="session")
def params10():
    return HybridParams.with_valley_ratio(200.0, 10.0)


@pytest.fixture(scope="session")
def ac10(params10):
    return find_anticrossings(params10)


@pytest.fixture(scope="session")
def xpi_standard(params10, ac10):
    return schedule_rotation(params10, GateSpec.x_rotation(math.pi),
                             SequenceOrder.STANDARD, ac=ac10)


@pytest.fixture(scope="session")
def xpi_alternative(params10, ac10):
    return schedule_rotation(params10, GateSpec.x_rotation(math.pi),
                             SequenceOrder.ALTERNATIVE, ac=ac10)


@pytest.fixture(scope="session")
def pair10(params10):
    return TwoQubitParams(control=params10, target=params10, delta_eps=100.0)


@pytest.fixture(scope="session")
def cphase_pi_schedule(pair10):
    return conditional_phase_schedule(pair10, math.pi)
