import pytest

from fs2fa import device as device_mod, server as server_mod
from fs2fa.codec import parse_enrol_response
from fs2fa.crypto import SeededRng
from fs2fa.device import Pin
from fs2fa.policy import Policy, format_transaction

DEFAULT_PIN = "1234"
DEFAULT_POLICY = Policy(max_amount=10_000, allowed_payees=frozenset({"acme-corp"}))
DEFAULT_TRANSACTION = format_transaction(250, "acme-corp")


def provision(seed="fixture", lockout_threshold=5):
    """Provisioned (device, record, rng) triple with a seeded rng."""
    rng = SeededRng(f"provision:{seed}")
    record, bundle = server_mod.server_setup(rng)
    record.lockout_threshold = lockout_threshold
    k, st0, client_id = bundle.open()
    device = device_mod.device_setup(k, st0, client_id, rng)
    return device, record, rng


def enrol(device, record, rng, pin=DEFAULT_PIN, truncation=None):
    challenge = server_mod.handle_hello_enrolment(record, rng)
    msg, device = device_mod.handle_enrol_challenge(
        device, challenge, Pin(pin), Pin(pin), truncation=truncation
    )
    server_mod.handle_enrol_response(record, parse_enrol_response(msg))
    return device


def authenticate(device, record, rng, pin=DEFAULT_PIN, transaction=DEFAULT_TRANSACTION,
                 policy=DEFAULT_POLICY, truncation=None, clock=None):
    """One full authentication; returns (device, outcome, server_session_key)."""
    inner, counter_ct = server_mod.handle_hello_auth(record, transaction, rng)
    msg, outcome, device = device_mod.handle_auth_challenge(
        device, inner, counter_ct, Pin(pin), policy, truncation=truncation
    )
    kwargs = {} if clock is None else {"clock": clock}
    sk = server_mod.verify_auth_response(record, outcome.response, **kwargs)
    return device, outcome, sk


@pytest.fixture
def provisioned():
    return provision()


@pytest.fixture
def enrolled():
    device, record, rng = provision()
    device = enrol(device, record, rng)
    return device, record, rng
