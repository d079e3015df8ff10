"""Primitive-layer tests: PRF vectors, deterministic AE, the
forward-secure generator and its multi-step wrapper, zeroization."""

import hmac
import hashlib
import json
import os
import random

import pytest

from fs2fa.crypto import (
    AeCiphertext,
    AeKey,
    FsprgOutput,
    FsprgState,
    MAX_UPDATE_STEPS,
    PrfKey,
    SeededRng,
    SystemRng,
    ae_decrypt,
    ae_encrypt,
    ae_keygen,
    fsprg_keygen,
    fsprg_next,
    prf,
    prf_keygen,
    update,
    zeroize,
)
from fs2fa.errors import DesyncTooLarge, SecretConsumed

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures", "crypto_vectors.json")


def _vectors():
    with open(FIXTURES) as fh:
        return json.load(fh)


class TestPrf:
    def test_rfc4231_vectors(self):
        # pins the choice of PRF to standardized HMAC-SHA256
        for tc in _vectors()["rfc4231_hmac_sha256"]:
            got = hmac.new(
                bytes.fromhex(tc["key"]), bytes.fromhex(tc["data"]), hashlib.sha256
            ).hexdigest()
            assert got == tc["mac"], tc["name"]

    def test_frozen_prf_vectors(self):
        for tc in _vectors()["prf"]:
            out = prf(PrfKey(bytes.fromhex(tc["key"])), bytes.fromhex(tc["data"]))
            assert out.hex() == tc["out"]

    def test_prf_is_hmac_sha256(self):
        key = bytes(range(32))
        data = b"who goes there"
        assert prf(PrfKey(key), data) == hmac.new(key, data, hashlib.sha256).digest()

    def test_deterministic(self):
        k = PrfKey(b"\x07" * 32)
        assert prf(k, b"x") == prf(k, b"x")

    def test_extension_changes_output(self):
        k = PrfKey(b"\x07" * 32)
        assert prf(k, b"payload") != prf(k, b"payload\x00")

    def test_output_length_over_random_inputs(self):
        rng = SeededRng("prf-len")
        for _ in range(10_000):
            k = PrfKey(rng.random_bytes(32))
            x = rng.random_bytes(rng.random_bytes(1)[0] % 64)
            assert len(prf(k, x)) == 32

    def test_input_cap(self):
        with pytest.raises(ValueError):
            prf(PrfKey(bytes(32)), bytes((1 << 16) + 1))

    def test_key_length_enforced(self):
        with pytest.raises(ValueError):
            PrfKey(bytes(31))


class TestKeygen:
    def test_keys_differ(self):
        rng = SystemRng()
        assert ae_keygen(rng) != ae_keygen(rng)

    def test_key_length(self):
        assert len(ae_keygen(SystemRng()).bytes) == 32

    def test_byte_positions_spread(self):
        # loose sanity bound: 1000 keys, every position shows many values
        rng = SeededRng("keygen-spread")
        keys = [ae_keygen(rng).bytes for _ in range(1000)]
        for pos in range(32):
            distinct = len({k[pos] for k in keys})
            assert distinct >= 200, f"position {pos} shows only {distinct} values"


class TestAe:
    def test_round_trip(self):
        k = ae_keygen(SeededRng("ae-rt"))
        pt = b"the magic words are squeamish ossifrage"
        out, ok = ae_decrypt(k, ae_encrypt(k, pt))
        assert ok and out == pt

    def test_deterministic(self):
        k = AeKey(b"\x21" * 32)
        assert ae_encrypt(k, b"m") == ae_encrypt(k, b"m")

    def test_frozen_vectors(self):
        for tc in _vectors()["ae"]:
            ct = ae_encrypt(AeKey(bytes.fromhex(tc["key"])), bytes.fromhex(tc["plaintext"]))
            assert ct.body.hex() == tc["body"]
            assert ct.tag.hex() == tc["tag"]

    def test_different_keys_different_ciphertexts(self):
        rng = SeededRng("ae-keys")
        m = b"same plaintext"
        a = ae_encrypt(AeKey(rng.random_bytes(32)), m)
        b = ae_encrypt(AeKey(rng.random_bytes(32)), m)
        assert a.body != b.body and a.tag != b.tag

    def test_wrong_key_rejects(self):
        rng = SeededRng("ae-wrong")
        ct = ae_encrypt(AeKey(rng.random_bytes(32)), b"hello")
        out, ok = ae_decrypt(AeKey(rng.random_bytes(32)), ct)
        assert not ok and out == b""

    def test_every_single_bit_flip_rejects(self):
        # exhaustive over one 16-byte plaintext's ciphertext
        k = AeKey(SeededRng("ae-flip").random_bytes(32))
        ct = ae_encrypt(k, bytes(range(16)))
        raw = ct.to_bytes()
        for bit in range(len(raw) * 8):
            tampered = bytearray(raw)
            tampered[bit // 8] ^= 1 << (bit % 8)
            out, ok = ae_decrypt(k, AeCiphertext.from_bytes(bytes(tampered)))
            assert not ok and out == b""

    def test_integrity_sampled_positions(self):
        # 1000 random (key, plaintext); 64 sampled bit positions each
        rng = SeededRng("ae-integrity")
        positions = random.Random("ae-integrity")
        for _ in range(1000):
            k = AeKey(rng.random_bytes(32))
            pt = rng.random_bytes(1 + positions.randrange(40))
            raw = ae_encrypt(k, pt).to_bytes()
            for bit in positions.sample(range(len(raw) * 8), 64):
                tampered = bytearray(raw)
                tampered[bit // 8] ^= 1 << (bit % 8)
                _, ok = ae_decrypt(k, AeCiphertext.from_bytes(bytes(tampered)))
                assert not ok

    def test_empty_plaintext_rejected(self):
        with pytest.raises(ValueError):
            ae_encrypt(AeKey(bytes(32)), b"")

    def test_body_length_matches_plaintext(self):
        k = AeKey(bytes(32))
        for n in (1, 31, 32, 33, 100):
            assert len(ae_encrypt(k, bytes(n)).body) == n


class TestFsprg:
    def test_fresh_state(self):
        st = fsprg_keygen(SystemRng())
        assert st.epoch == 0
        assert len(st.bytes) == 32

    def test_keygen_states_differ(self):
        rng = SystemRng()
        assert fsprg_keygen(rng) != fsprg_keygen(rng)

    def test_deterministic(self):
        raw = SeededRng("fs-det").random_bytes(32)
        a = fsprg_next(FsprgState(raw, 0))
        b = fsprg_next(FsprgState(raw, 0))
        assert a[0] == b[0] and a[1] == b[1]

    def test_output_distinct_from_state(self):
        rng = SeededRng("fs-distinct")
        for _ in range(1000):
            out, nxt = fsprg_next(FsprgState(rng.random_bytes(32), 0))
            assert out.bytes != nxt.bytes

    def test_replay_produces_same_sequence(self):
        raw = SeededRng("fs-replay").random_bytes(32)

        def run(n):
            st, outs = FsprgState(raw, 0), []
            for _ in range(n):
                out, st = fsprg_next(st)
                outs.append(out.bytes)
            return outs

        assert run(10) == run(10)

    def test_epoch_increments(self):
        st = FsprgState(bytes(32), 5)
        _, nxt = fsprg_next(st)
        assert nxt.epoch == 6

    def test_forward_progress_api(self):
        st = fsprg_keygen(SeededRng("fs-fwd"))
        _, st1 = fsprg_next(st)
        assert st1.epoch > st.epoch
        _, st2 = update(FsprgState(st1.bytes, st1.epoch), 7)
        assert st2.epoch > st1.epoch


class TestUpdate:
    def test_single_step_equals_next(self):
        raw = SeededRng("up-1").random_bytes(32)
        assert update(FsprgState(raw, 0), 1) == fsprg_next(FsprgState(raw, 0))

    def test_chain_equivalence(self):
        # d-fold composition of fsprg_next is the oracle
        raw = SeededRng("up-chain").random_bytes(32)
        for d in range(1, 65):
            out, st = update(FsprgState(raw, 3), d)
            o_st, o_out = FsprgState(raw, 3), None
            for _ in range(d):
                o_out, o_st = fsprg_next(o_st)
            assert out == o_out and st == o_st

    @pytest.mark.parametrize("d", [1, 2, 17])
    def test_epoch_advances_by_d(self, d):
        st = FsprgState(bytes(32), 11)
        _, nxt = update(st, d)
        assert nxt.epoch == 11 + d

    def test_zero_steps_rejected(self):
        with pytest.raises(ValueError):
            update(FsprgState(bytes(32), 0), 0)

    def test_cap_enforced(self):
        with pytest.raises(DesyncTooLarge):
            update(FsprgState(bytes(32), 0), MAX_UPDATE_STEPS + 1)

    def test_input_state_left_intact(self):
        st = FsprgState(bytes(32), 0)
        update(st, 3)
        assert st.bytes == bytes(32)  # caller decides when to discard


class TestZeroize:
    def test_read_after_zeroize_fails(self):
        k = PrfKey(b"\x42" * 32)
        k.zeroize()
        with pytest.raises(SecretConsumed):
            _ = k.bytes

    def test_zeroize_helper_tolerates_none_and_consumed(self):
        k = prf_keygen(SystemRng())
        zeroize(None, k)
        zeroize(k)  # second wipe is a no-op

    def test_repr_never_shows_bytes(self):
        k = PrfKey(b"\xaa" * 32)
        assert "aa" not in repr(k)
        st = FsprgState(b"\xbb" * 32, 4)
        assert "bb" not in repr(st) and "epoch=4" in repr(st)

    def test_fsprg_output_conversions(self):
        out = FsprgOutput(b"\x01" * 32)
        assert out.as_prf_key().bytes == b"\x01" * 32
        assert out.as_ae_key().bytes == b"\x01" * 32
        out.zeroize()
        with pytest.raises(SecretConsumed):
            out.as_prf_key()


class TestRng:
    def test_seeded_deterministic(self):
        assert SeededRng(7).random_bytes(64) == SeededRng(7).random_bytes(64)

    def test_seeded_seeds_differ(self):
        assert SeededRng(7).random_bytes(32) != SeededRng(8).random_bytes(32)

    def test_system_rng_lengths(self):
        assert len(SystemRng().random_bytes(17)) == 17
