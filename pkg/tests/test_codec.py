"""Wire-format tests: fixed layouts, round-trip bijections, version and
length rejection, and the base-64 QR transfer."""

import pytest

from fs2fa.codec import (
    ClientId,
    MsgType,
    Nonce,
    Phase,
    WireMessage,
    build_auth_challenge,
    build_auth_response,
    build_enrol_challenge,
    build_enrol_response,
    build_hello,
    encode_auth_counter_plain,
    encode_auth_inner_plain,
    encode_enrol_challenge_plain,
    encode_enrol_response_plain,
    encode_envelope,
    encode_response_base,
    parse_auth_challenge,
    parse_auth_counter_plain,
    parse_auth_inner_plain,
    parse_enrol_challenge_plain,
    parse_enrol_response_plain,
    parse_envelope,
    qr_decode,
    qr_encode,
)
from fs2fa.crypto import AeCiphertext, SeededRng
from fs2fa.errors import CodecError

CID = ClientId(bytes(range(16)))


def _pair(body_len, rng):
    return AeCiphertext(body=rng.random_bytes(body_len), tag=rng.random_bytes(32))


class TestHello:
    def test_layout(self):
        msg = build_hello(CID, Phase.ENROLMENT)
        assert msg.msg_type is MsgType.HELLO_ENROL
        assert msg.payload == b""
        assert len(encode_envelope(msg)) == 18  # 1 + 1 + 16

    def test_round_trip(self):
        for phase in Phase:
            msg = build_hello(CID, phase)
            assert parse_envelope(encode_envelope(msg)) == msg

    def test_auth_phase_type(self):
        assert build_hello(CID, Phase.AUTHENTICATION).msg_type is MsgType.HELLO_AUTH


class TestEnrolChallengePlain:
    def test_zero_case(self):
        assert encode_enrol_challenge_plain(Nonce(bytes(16)), 0) == bytes(24)

    def test_big_endian(self):
        p = encode_enrol_challenge_plain(Nonce(bytes(16)), 1)
        assert p == bytes(23) + b"\x01"

    def test_parse_zero(self):
        nonce, ct = parse_enrol_challenge_plain(bytes(24))
        assert nonce == Nonce(bytes(16)) and ct == 0

    def test_wrong_length(self):
        with pytest.raises(CodecError):
            parse_enrol_challenge_plain(bytes(23))

    def test_round_trip_random(self):
        rng = SeededRng("ecp")
        for _ in range(10_000):
            nonce = Nonce(rng.random_bytes(16))
            ct = int.from_bytes(rng.random_bytes(8), "big")
            assert parse_enrol_challenge_plain(
                encode_enrol_challenge_plain(nonce, ct)
            ) == (nonce, ct)


class TestEnrolResponsePlain:
    def test_untruncated_length(self):
        p = encode_enrol_response_plain(Nonce(bytes(16)), bytes(32))
        assert len(p) == 48

    def test_truncated_length(self):
        p = encode_enrol_response_plain(Nonce(bytes(16)), bytes(8))
        assert len(p) == 24

    def test_round_trip_random(self):
        rng = SeededRng("erp")
        for _ in range(10_000):
            nonce = Nonce(rng.random_bytes(16))
            v = rng.random_bytes(4 + rng.random_bytes(1)[0] % 29)
            assert parse_enrol_response_plain(
                encode_enrol_response_plain(nonce, v)
            ) == (nonce, v)

    def test_bad_verifier_length(self):
        with pytest.raises(CodecError):
            encode_enrol_response_plain(Nonce(bytes(16)), bytes(3))


class TestAuthInnerPlain:
    def test_one_byte_transaction(self):
        assert len(encode_auth_inner_plain(Nonce(bytes(16)), b"A")) == 19  # 16+2+1

    def test_empty_rejected(self):
        with pytest.raises(CodecError):
            encode_auth_inner_plain(Nonce(bytes(16)), b"")

    def test_round_trip_random(self):
        rng = SeededRng("aip")
        for _ in range(10_000):
            nonce = Nonce(rng.random_bytes(16))
            t = rng.random_bytes(1 + rng.random_bytes(2)[0] % 200)
            assert parse_auth_inner_plain(encode_auth_inner_plain(nonce, t)) == (nonce, t)

    def test_length_prefix_checked(self):
        p = encode_auth_inner_plain(Nonce(bytes(16)), b"abc")
        with pytest.raises(CodecError):
            parse_auth_inner_plain(p + b"x")  # trailing byte not covered


class TestAuthCounterPlain:
    def test_zero(self):
        assert encode_auth_counter_plain(0) == bytes(8)

    def test_2_to_32(self):
        assert encode_auth_counter_plain(2**32) == bytes.fromhex("0000000100000000")

    def test_round_trip(self):
        for ct in (0, 1, 255, 2**40, 2**64 - 1):
            assert parse_auth_counter_plain(encode_auth_counter_plain(ct)) == ct

    def test_range(self):
        with pytest.raises(CodecError):
            encode_auth_counter_plain(2**64)


class TestEnvelope:
    def test_version_rejected_first(self):
        raw = bytearray(encode_envelope(build_hello(CID, Phase.ENROLMENT)))
        raw[0] = 0x02
        with pytest.raises(CodecError, match="version"):
            parse_envelope(bytes(raw))

    def test_unknown_type(self):
        raw = bytearray(encode_envelope(build_hello(CID, Phase.ENROLMENT)))
        raw[1] = 0x7F
        with pytest.raises(CodecError, match="type"):
            parse_envelope(bytes(raw))

    def test_truncated(self):
        with pytest.raises(CodecError):
            parse_envelope(b"\x01\x01")

    def test_payload_bounds(self):
        raw = encode_envelope(build_hello(CID, Phase.ENROLMENT)) + b"garbage"
        with pytest.raises(CodecError):
            parse_envelope(raw)

    def test_round_trip_all_types(self):
        rng = SeededRng("env")
        msgs = [
            build_hello(CID, Phase.ENROLMENT),
            build_hello(CID, Phase.AUTHENTICATION),
            build_enrol_challenge(CID, _pair(24, rng)),
            build_enrol_response(CID, _pair(48, rng)),
            build_auth_challenge(CID, _pair(30, rng), _pair(8, rng)),
            build_auth_response(CID, rng.random_bytes(32)),
        ]
        for msg in msgs:
            assert parse_envelope(encode_envelope(msg)) == msg

    def test_round_trip_random_envelopes(self):
        rng = SeededRng("env-rand")
        for _ in range(10_000):
            t_len = 1 + rng.random_bytes(1)[0] % 100
            msg = build_auth_challenge(
                ClientId(rng.random_bytes(16)),
                _pair(16 + 2 + t_len, rng),
                _pair(8, rng),
            )
            assert parse_envelope(encode_envelope(msg)) == msg


class TestAuthChallengeFraming:
    def test_split(self):
        rng = SeededRng("acf")
        inner, counter_ct = _pair(40, rng), _pair(8, rng)
        msg = build_auth_challenge(CID, inner, counter_ct)
        got_inner, got_counter = parse_auth_challenge(msg)
        assert got_inner == inner and got_counter == counter_ct

    def test_framing_inconsistency(self):
        rng = SeededRng("acf2")
        msg = build_auth_challenge(CID, _pair(40, rng), _pair(8, rng))
        bad = WireMessage(msg.msg_type, msg.client_id, msg.payload[:-1] )
        with pytest.raises(CodecError):
            parse_auth_challenge(bad)


class TestResponseBase:
    def test_layout(self):
        base = encode_response_base(Nonce(bytes(16)), b"tx", b"\xee" * 32)
        assert base == bytes(16) + b"\x00\x02" + b"tx" + b"\xee" * 32


class TestQr:
    def test_round_trip_all_types(self):
        rng = SeededRng("qr")
        msgs = [
            build_hello(CID, Phase.ENROLMENT),
            build_enrol_challenge(CID, _pair(24, rng)),
            build_enrol_response(CID, _pair(48, rng)),
            build_auth_challenge(CID, _pair(19, rng), _pair(8, rng)),
            build_auth_response(CID, rng.random_bytes(32)),
            build_hello(CID, Phase.AUTHENTICATION),
        ]
        for msg in msgs:
            assert qr_decode(qr_encode(msg)) == msg

    def test_non_base64(self):
        with pytest.raises(CodecError):
            qr_decode("!!! not base 64 !!!")

    def test_truncated_text(self):
        text = qr_encode(build_hello(CID, Phase.ENROLMENT))
        with pytest.raises(CodecError):
            qr_decode(text[:-3])

    def test_round_trip_random(self):
        rng = SeededRng("qr-rand")
        for _ in range(10_000):
            msg = build_enrol_response(CID, _pair(16 + 4 + rng.random_bytes(1)[0] % 29, rng))
            assert qr_decode(qr_encode(msg)) == msg
