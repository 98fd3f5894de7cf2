import json
import random
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from b5groam.cdr import UsageRecord, tee_commit
from b5groam.circuit import RateSchedule, synthesize_witness
from b5groam.groth16 import prove
from b5groam.harness import agreement_keys

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"
RATES = RateSchedule(1, 2, 5)


def load_fixture(name):
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture(scope="session")
def rates():
    return RATES


@pytest.fixture(scope="session")
def keys():
    """(pp, pk, vk) for the (1, 2, 5) schedule, shared by the whole run."""
    return agreement_keys("tests", 1, RATES)


@pytest.fixture(scope="session")
def honest():
    """An honest (record, commitment, public, witness, proof) for usage (10, 500, 30)."""
    _, pk, _ = agreement_keys("tests", 1, RATES)
    rec = UsageRecord(10, 500, 30)
    com = tee_commit(rec)
    w, pub = synthesize_witness(rec, RATES, com)
    return rec, com, pub, w, prove(pk, pub, w, random.Random(1))
