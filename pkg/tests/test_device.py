"""Token state-machine tests: provisioning, verifier derivation, the
enrolment and authentication handlers with their abort ordering, counter
lockstep, catch-up, and persistence."""

import random

import pytest

from conftest import DEFAULT_POLICY, DEFAULT_TRANSACTION, authenticate, enrol, provision

from fs2fa import device as device_mod, server as server_mod
from fs2fa.codec import Nonce, encode_auth_counter_plain, encode_enrol_challenge_plain
from fs2fa.crypto import (
    AeCiphertext,
    MAX_UPDATE_STEPS,
    SeededRng,
    ae_encrypt,
    prf,
    prf_keygen,
)
from fs2fa.device import (
    Pin,
    check_pin_match,
    compute_verifier,
    deserialize_device_state,
    device_setup,
    handle_auth_challenge,
    handle_enrol_challenge,
    load_device_state,
    save_device_state,
    serialize_device_state,
)
from fs2fa.errors import (
    DesyncTooLarge,
    PinEntryMismatch,
    PolicyRejected,
    SecretConsumed,
    StaleChallenge,
    TamperedMessage,
)
from fs2fa.instrumentation import measuring


def _flip(pair: AeCiphertext, bit: int) -> AeCiphertext:
    raw = bytearray(pair.to_bytes())
    raw[bit // 8] ^= 1 << (bit % 8)
    return AeCiphertext.from_bytes(bytes(raw))


class TestSetup:
    def test_counter_starts_at_zero(self, provisioned):
        device, _, _ = provisioned
        assert device.ct == 0

    def test_sa_differs_across_setups(self):
        rng = SeededRng("sa-diff")
        record, bundle = server_mod.server_setup(rng)
        k, st0, cid = bundle.open()
        a = device_setup(k, st0, cid, rng)
        from fs2fa.crypto import AeKey, FsprgState

        b = device_setup(AeKey(k.bytes), FsprgState(st0.bytes, 0), cid, rng)
        assert a.sa != b.sa

    def test_client_id_preserved(self, provisioned):
        device, record, _ = provisioned
        assert device.client_id == record.client_id

    def test_requires_genesis_state(self):
        rng = SeededRng("genesis")
        record, bundle = server_mod.server_setup(rng)
        k, st0, cid = bundle.open()
        from fs2fa.crypto import FsprgState

        with pytest.raises(ValueError):
            device_setup(k, FsprgState(st0.bytes, 3), cid, rng)


class TestPin:
    def test_match(self):
        assert check_pin_match(Pin("1234"), Pin("1234"))

    def test_transposition(self):
        assert not check_pin_match(Pin("1234"), Pin("1243"))

    def test_length_mismatch(self):
        assert not check_pin_match(Pin("1234"), Pin("12345"))

    def test_validation(self):
        with pytest.raises(ValueError):
            Pin("123")
        with pytest.raises(ValueError):
            Pin("12a4")

    def test_zeroize(self):
        pin = Pin("1234")
        pin.zeroize()
        with pytest.raises(SecretConsumed):
            _ = pin.bytes

    def test_repr_masked(self):
        assert "1234" not in repr(Pin("1234"))


class TestVerifier:
    def test_deterministic(self):
        sa = prf_keygen(SeededRng("v-det"))
        assert compute_verifier(sa, Pin("0007")) == compute_verifier(sa, Pin("0007"))

    def test_matches_prf(self):
        sa = prf_keygen(SeededRng("v-prf"))
        assert compute_verifier(sa, Pin("4242")).bytes == prf(sa, b"4242")

    def test_full_universe_distinct_untruncated(self):
        sa = prf_keygen(SeededRng("v-universe"))
        seen = {compute_verifier(sa, Pin(str(i).zfill(4))).bytes for i in range(10_000)}
        assert len(seen) == 10_000

    def test_truncation_to_two_bytes_collides(self):
        # pigeonhole: 10,000 pins into at most 2^16 values of which far
        # fewer are hit; collisions must exist
        sa = prf_keygen(SeededRng("v-trunc"))
        values = [prf(sa, str(i).zfill(4).encode())[:2] for i in range(10_000)]
        assert len(set(values)) < 10_000

    def test_truncation_length(self):
        sa = prf_keygen(SeededRng("v-trunc-len"))
        assert len(compute_verifier(sa, Pin("1234"), truncation=8).bytes) == 8

    def test_truncation_bounds(self):
        sa = prf_keygen(SeededRng("v-bounds"))
        with pytest.raises(ValueError):
            compute_verifier(sa, Pin("1234"), truncation=2)


class TestEnrolment:
    def test_honest_flow_stores_matching_verifier(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        msg, device = device_mod.handle_enrol_challenge(
            device, challenge, Pin("1234"), Pin("1234")
        )
        from fs2fa.codec import parse_enrol_response

        server_mod.handle_enrol_response(record, parse_enrol_response(msg))
        assert record.verifier is not None
        assert record.verifier.bytes == prf(device.sa, b"1234")
        assert device.ct == record.ct == 1

    def test_stale_counter_rejected(self, provisioned):
        device, record, rng = provisioned
        nonce = Nonce(rng.random_bytes(16))
        stale = ae_encrypt(record.k, encode_enrol_challenge_plain(nonce, device.ct))
        with pytest.raises(StaleChallenge):
            handle_enrol_challenge(device, stale, Pin("1234"), Pin("1234"))

    def test_any_bit_flip_aborts(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        raw_bits = len(challenge.to_bytes()) * 8
        sample = random.Random("enrol-flips").sample(range(raw_bits), 64)
        for bit in sample:
            with pytest.raises(TamperedMessage):
                handle_enrol_challenge(
                    device, _flip(challenge, bit), Pin("1234"), Pin("1234")
                )

    def test_pin_mismatch(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        with pytest.raises(PinEntryMismatch):
            handle_enrol_challenge(device, challenge, Pin("1234"), Pin("1243"))

    def test_desync_cap(self, provisioned):
        device, record, rng = provisioned
        nonce = Nonce(rng.random_bytes(16))
        huge = ae_encrypt(
            record.k,
            encode_enrol_challenge_plain(nonce, device.ct + MAX_UPDATE_STEPS + 1),
        )
        with pytest.raises(DesyncTooLarge):
            handle_enrol_challenge(device, huge, Pin("1234"), Pin("1234"))

    def test_no_pin_prompt_on_tampered_challenge(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        prompts = []

        def provider():
            prompts.append(1)
            return Pin("1234")

        with pytest.raises(TamperedMessage):
            handle_enrol_challenge(device, _flip(challenge, 3), provider, provider)
        assert prompts == []

    def test_abort_leaves_state_usable(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        with pytest.raises(TamperedMessage):
            handle_enrol_challenge(device, _flip(challenge, 9), Pin("1"*4), Pin("1"*4))
        # same state object still completes the untampered exchange
        msg, device = handle_enrol_challenge(device, challenge, Pin("1234"), Pin("1234"))
        assert device.ct == 1

    def test_input_state_consumed_on_success(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        _, new_device = handle_enrol_challenge(device, challenge, Pin("1234"), Pin("1234"))
        with pytest.raises(SecretConsumed):
            _ = device.st.bytes
        assert new_device.st.epoch == 1

    def test_discard_list(self, provisioned):
        device, record, rng = provisioned
        challenge = server_mod.handle_hello_enrolment(record, rng)
        with measuring() as counts:
            handle_enrol_challenge(device, challenge, Pin("1234"), Pin("1234"))
        assert counts.discards == ["PIN", "v", "kt1", "N"]


class TestAuthentication:
    def test_honest_flow_keys_agree(self, enrolled):
        device, record, rng = enrolled
        device, outcome, sk = authenticate(device, record, rng)
        assert sk is not None and sk == outcome.session_key
        assert outcome.response != outcome.session_key

    def test_counter_arithmetic(self, enrolled):
        device, record, rng = enrolled
        before = record.ct
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        assert record.ct == before + 2
        _, outcome, device = handle_auth_challenge(
            device, inner, counter_ct, Pin("1234"), DEFAULT_POLICY
        )
        assert device.ct == record.ct == device.st.epoch == record.st.epoch

    def test_wrong_pin_still_emits_response(self, enrolled):
        device, record, rng = enrolled
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        msg, outcome, device = handle_auth_challenge(
            device, inner, counter_ct, Pin("9999"), DEFAULT_POLICY
        )
        assert len(outcome.response) == 32
        assert server_mod.verify_auth_response(record, outcome.response) is None

    def test_tampered_inner_aborts_before_pin(self, enrolled):
        device, record, rng = enrolled
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        prompts = []

        def provider():
            prompts.append(1)
            return Pin("1234")

        for bit in random.Random("auth-flips").sample(range(len(inner.to_bytes()) * 8), 64):
            with pytest.raises(TamperedMessage):
                handle_auth_challenge(
                    device, _flip(inner, bit), counter_ct, provider, DEFAULT_POLICY
                )
        assert prompts == []

    def test_tampered_counter_ciphertext_aborts(self, enrolled):
        device, record, rng = enrolled
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        for bit in random.Random("ct-flips").sample(range(len(counter_ct.to_bytes()) * 8), 64):
            with pytest.raises(TamperedMessage):
                handle_auth_challenge(
                    device, inner, _flip(counter_ct, bit), Pin("1234"), DEFAULT_POLICY
                )

    def test_stale_counter(self, enrolled):
        device, record, rng = enrolled
        stale = ae_encrypt(record.k, encode_auth_counter_plain(device.ct))
        inner, _ = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        with pytest.raises(StaleChallenge):
            handle_auth_challenge(device, inner, stale, Pin("1234"), DEFAULT_POLICY)

    def test_policy_rejects_before_pin(self, enrolled):
        device, record, rng = enrolled
        from fs2fa.policy import Policy

        strict = Policy(max_amount=1, allowed_payees=frozenset({"acme-corp"}))
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        prompts = []

        def provider():
            prompts.append(1)
            return Pin("1234")

        with pytest.raises(PolicyRejected):
            handle_auth_challenge(device, inner, counter_ct, provider, strict)
        assert prompts == []

    def test_abort_leaves_state_usable(self, enrolled):
        device, record, rng = enrolled
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        with pytest.raises(TamperedMessage):
            handle_auth_challenge(device, _flip(inner, 77), counter_ct, Pin("1234"),
                                  DEFAULT_POLICY)
        assert device.ct == 1  # untouched
        _, outcome, device = handle_auth_challenge(
            device, inner, counter_ct, Pin("1234"), DEFAULT_POLICY
        )
        assert server_mod.verify_auth_response(record, outcome.response) is not None

    def test_discard_list(self, enrolled):
        device, record, rng = enrolled
        inner, counter_ct = server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
        with measuring() as counts:
            handle_auth_challenge(device, inner, counter_ct, Pin("1234"), DEFAULT_POLICY)
        assert counts.discards == ["PIN", "v", "kt2", "kt3", "N", "t"]

    def test_catch_up_completeness(self):
        # a device that missed d-1 challenges completes the next exchange
        for d in range(1, 65):
            device, record, rng = provision(seed=f"catchup:{d}")
            device = enrol(device, record, rng)
            for _ in range(d - 1):
                server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)  # dropped
            device, outcome, sk = authenticate(device, record, rng)
            assert sk == outcome.session_key is not None
            assert device.ct == record.ct

    def test_lockstep_random_exchanges(self):
        rnd = random.Random("lockstep")
        device, record, rng = provision(seed="lockstep")
        device = enrol(device, record, rng)
        for _ in range(40):
            action = rnd.random()
            if action < 0.3:  # dropped challenge
                server_mod.handle_hello_auth(record, DEFAULT_TRANSACTION, rng)
            elif action < 0.45:  # re-enrolment
                device = enrol(device, record, rng, pin="2468")
            else:
                device, outcome, sk = authenticate(device, record, rng, pin="2468")
                if sk is not None:
                    assert sk == outcome.session_key
            assert device.ct == device.st.epoch
            assert record.ct == record.st.epoch
            assert record.ct >= device.ct


class TestNoPinAtRest:
    def test_serialized_state_identical_for_any_pin(self):
        blobs = []
        for pin in ("1111", "9999"):
            device, record, rng = provision(seed="no-pin-at-rest")
            device = enrol(device, record, rng, pin=pin)
            device, _, _ = authenticate(device, record, rng, pin=pin)
            blobs.append(serialize_device_state(device))
        assert blobs[0] == blobs[1]


class TestPersistence:
    def test_round_trip(self, enrolled, tmp_path):
        device, _, _ = enrolled
        path = tmp_path / "device.state"
        save_device_state(device, path)
        loaded = load_device_state(path)
        assert serialize_device_state(loaded) == serialize_device_state(device)

    def test_survives_power_cycle_mid_protocol(self, tmp_path):
        device, record, rng = provision(seed="power-cycle")
        device = enrol(device, record, rng)
        path = tmp_path / "device.state"
        save_device_state(device, path)
        device = load_device_state(path)  # the token rebooted
        device, outcome, sk = authenticate(device, record, rng)
        assert sk == outcome.session_key is not None

    def test_fixed_length_and_version(self, enrolled):
        device, _, _ = enrolled
        raw = serialize_device_state(device)
        assert len(raw) == 129 and raw[0] == 0x01

    def test_bad_version_rejected(self, enrolled):
        device, _, _ = enrolled
        raw = bytearray(serialize_device_state(device))
        raw[0] = 0x02
        with pytest.raises(ValueError):
            deserialize_device_state(bytes(raw))
