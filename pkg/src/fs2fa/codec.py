"""Bit-exact construction and parsing of protocol plaintexts and wire
envelopes, plus the base-64 "QR" transfer encoding.

The normative byte formats are documented in docs/wire.md.  All integers
are big-endian; all layouts are fixed-offset except the transaction field,
which carries a 2-byte length prefix.  Parsers check the envelope version
before anything else, so no cryptography ever runs on an unknown format.
"""

from __future__ import annotations

import base64
import binascii
import enum
from dataclasses import dataclass

from .crypto import AeCiphertext, TAG_LEN
from .errors import CodecError

WIRE_VERSION = 0x01

ID_LEN = 16
NONCE_LEN = 16
COUNTER_LEN = 8
TRANSACTION_MAX = 1024
VERIFIER_MIN = 4
VERIFIER_MAX = 32
HEADER_LEN = 1 + 1 + ID_LEN  # version, msg_type, client_id

# Trailing domain bytes for the response / session-key PRF derivations.
RESPONSE_DOMAIN = b"\x01"
SESSION_KEY_DOMAIN = b"\x02"


class MsgType(enum.IntEnum):
    HELLO_ENROL = 0x01
    HELLO_AUTH = 0x02
    ENROL_CHALLENGE = 0x03
    ENROL_RESPONSE = 0x04
    AUTH_CHALLENGE = 0x05
    AUTH_RESPONSE = 0x06


class Phase(enum.Enum):
    ENROLMENT = "enrolment"
    AUTHENTICATION = "authentication"


@dataclass(frozen=True)
class ClientId:
    bytes: bytes

    def __post_init__(self):
        if len(self.bytes) != ID_LEN:
            raise ValueError(f"client id must be {ID_LEN} bytes")

    def hex(self) -> str:
        return self.bytes.hex()


@dataclass(frozen=True)
class Nonce:
    bytes: bytes

    def __post_init__(self):
        if len(self.bytes) != NONCE_LEN:
            raise ValueError(f"nonce must be {NONCE_LEN} bytes")


@dataclass(frozen=True)
class WireMessage:
    msg_type: MsgType
    client_id: ClientId
    payload: bytes
    version: int = WIRE_VERSION


# Payload length bounds per message type: (min, max), inclusive.
_CT_OVERHEAD = TAG_LEN
_PAYLOAD_BOUNDS = {
    MsgType.HELLO_ENROL: (0, 0),
    MsgType.HELLO_AUTH: (0, 0),
    MsgType.ENROL_CHALLENGE: (
        NONCE_LEN + COUNTER_LEN + _CT_OVERHEAD,
        NONCE_LEN + COUNTER_LEN + _CT_OVERHEAD,
    ),
    MsgType.ENROL_RESPONSE: (
        NONCE_LEN + VERIFIER_MIN + _CT_OVERHEAD,
        NONCE_LEN + VERIFIER_MAX + _CT_OVERHEAD,
    ),
    MsgType.AUTH_CHALLENGE: (
        2 + (NONCE_LEN + 2 + 1 + _CT_OVERHEAD) + (COUNTER_LEN + _CT_OVERHEAD),
        2 + (NONCE_LEN + 2 + TRANSACTION_MAX + _CT_OVERHEAD) + (COUNTER_LEN + _CT_OVERHEAD),
    ),
    MsgType.AUTH_RESPONSE: (32, 32),
}


def _check_payload(msg_type: MsgType, payload: bytes) -> None:
    lo, hi = _PAYLOAD_BOUNDS[msg_type]
    if not lo <= len(payload) <= hi:
        raise CodecError(
            f"{msg_type.name} payload length {len(payload)} outside [{lo}, {hi}]"
        )


def encode_envelope(msg: WireMessage) -> bytes:
    if msg.version != WIRE_VERSION:
        raise CodecError(f"cannot encode envelope version {msg.version}")
    _check_payload(msg.msg_type, msg.payload)
    return bytes([msg.version, msg.msg_type]) + msg.client_id.bytes + msg.payload


def parse_envelope(raw: bytes) -> WireMessage:
    if len(raw) < HEADER_LEN:
        raise CodecError(f"envelope truncated at {len(raw)} bytes")
    if raw[0] != WIRE_VERSION:
        raise CodecError(f"unsupported envelope version {raw[0]:#04x}")
    try:
        msg_type = MsgType(raw[1])
    except ValueError:
        raise CodecError(f"unknown message type {raw[1]:#04x}") from None
    client_id = ClientId(raw[2:HEADER_LEN])
    payload = raw[HEADER_LEN:]
    _check_payload(msg_type, payload)
    return WireMessage(msg_type=msg_type, client_id=client_id, payload=payload)


def build_hello(client_id: ClientId, phase: Phase) -> WireMessage:
    msg_type = MsgType.HELLO_ENROL if phase is Phase.ENROLMENT else MsgType.HELLO_AUTH
    return WireMessage(msg_type=msg_type, client_id=client_id, payload=b"")


def _check_counter(value: int) -> None:
    if not 0 <= value < 2**64:
        raise CodecError("counter out of 64-bit range")


def encode_enrol_challenge_plain(nonce: Nonce, ct: int) -> bytes:
    """p = N || ct: 16 nonce bytes then the counter, 24 bytes total."""
    _check_counter(ct)
    return nonce.bytes + ct.to_bytes(COUNTER_LEN, "big")


def parse_enrol_challenge_plain(p: bytes) -> tuple[Nonce, int]:
    if len(p) != NONCE_LEN + COUNTER_LEN:
        raise CodecError(f"enrolment challenge plaintext must be 24 bytes, got {len(p)}")
    return Nonce(p[:NONCE_LEN]), int.from_bytes(p[NONCE_LEN:], "big")


def encode_enrol_response_plain(nonce: Nonce, verifier: bytes) -> bytes:
    """p' = N || v."""
    if not VERIFIER_MIN <= len(verifier) <= VERIFIER_MAX:
        raise CodecError("verifier length outside configured range")
    return nonce.bytes + verifier


def parse_enrol_response_plain(p: bytes) -> tuple[Nonce, bytes]:
    if not NONCE_LEN + VERIFIER_MIN <= len(p) <= NONCE_LEN + VERIFIER_MAX:
        raise CodecError(f"enrolment response plaintext has bad length {len(p)}")
    return Nonce(p[:NONCE_LEN]), p[NONCE_LEN:]


def encode_auth_inner_plain(nonce: Nonce, t: bytes) -> bytes:
    """p = N || t, with t carried behind a 2-byte length prefix."""
    if not 1 <= len(t) <= TRANSACTION_MAX:
        raise CodecError("transaction description must be 1..1024 bytes")
    return nonce.bytes + len(t).to_bytes(2, "big") + t


def parse_auth_inner_plain(p: bytes) -> tuple[Nonce, bytes]:
    if len(p) < NONCE_LEN + 2 + 1:
        raise CodecError("authentication challenge plaintext too short")
    tlen = int.from_bytes(p[NONCE_LEN:NONCE_LEN + 2], "big")
    body = p[NONCE_LEN + 2:]
    if tlen == 0 or tlen > TRANSACTION_MAX or len(body) != tlen:
        raise CodecError("transaction length prefix inconsistent with payload")
    return Nonce(p[:NONCE_LEN]), body


def encode_auth_counter_plain(tmp_ct: int) -> bytes:
    _check_counter(tmp_ct)
    return tmp_ct.to_bytes(COUNTER_LEN, "big")


def parse_auth_counter_plain(p: bytes) -> int:
    if len(p) != COUNTER_LEN:
        raise CodecError(f"counter plaintext must be 8 bytes, got {len(p)}")
    return int.from_bytes(p, "big")


def encode_response_base(nonce: Nonce, t: bytes, verifier: bytes) -> bytes:
    """p'' = N || len(t) || t || v, the base of the response and session-key
    derivations (a trailing domain byte picks which one)."""
    return encode_auth_inner_plain(nonce, t) + verifier


def build_enrol_challenge(client_id: ClientId, ct_pair: AeCiphertext) -> WireMessage:
    return WireMessage(MsgType.ENROL_CHALLENGE, client_id, ct_pair.to_bytes())


def parse_enrol_challenge(msg: WireMessage) -> AeCiphertext:
    _expect_type(msg, MsgType.ENROL_CHALLENGE)
    return AeCiphertext.from_bytes(msg.payload)


def build_enrol_response(client_id: ClientId, ct_pair: AeCiphertext) -> WireMessage:
    return WireMessage(MsgType.ENROL_RESPONSE, client_id, ct_pair.to_bytes())


def parse_enrol_response(msg: WireMessage) -> AeCiphertext:
    _expect_type(msg, MsgType.ENROL_RESPONSE)
    return AeCiphertext.from_bytes(msg.payload)


def build_auth_challenge(
    client_id: ClientId, inner: AeCiphertext, counter_ct: AeCiphertext
) -> WireMessage:
    """Both challenge ciphertext pairs travel in one envelope: the
    transaction pair length-prefixed, then the fixed-size counter pair."""
    inner_raw = inner.to_bytes()
    payload = len(inner_raw).to_bytes(2, "big") + inner_raw + counter_ct.to_bytes()
    return WireMessage(MsgType.AUTH_CHALLENGE, client_id, payload)


def parse_auth_challenge(msg: WireMessage) -> tuple[AeCiphertext, AeCiphertext]:
    _expect_type(msg, MsgType.AUTH_CHALLENGE)
    p = msg.payload
    inner_len = int.from_bytes(p[:2], "big")
    rest = p[2:]
    if len(rest) != inner_len + COUNTER_LEN + TAG_LEN:
        raise CodecError("authentication challenge framing inconsistent")
    if inner_len < NONCE_LEN + 2 + 1 + TAG_LEN:
        raise CodecError("inner ciphertext too short")
    inner = AeCiphertext.from_bytes(rest[:inner_len])
    counter_ct = AeCiphertext.from_bytes(rest[inner_len:])
    return inner, counter_ct


def build_auth_response(client_id: ClientId, response: bytes) -> WireMessage:
    if len(response) != 32:
        raise CodecError("authentication response must be 32 bytes")
    return WireMessage(MsgType.AUTH_RESPONSE, client_id, response)


def parse_auth_response(msg: WireMessage) -> bytes:
    _expect_type(msg, MsgType.AUTH_RESPONSE)
    return msg.payload


def _expect_type(msg: WireMessage, msg_type: MsgType) -> None:
    if msg.msg_type != msg_type:
        raise CodecError(f"expected {msg_type.name}, got {msg.msg_type.name}")


def qr_encode(msg: WireMessage) -> str:
    """The QR transfer is modeled as base-64 text of the envelope bytes."""
    return base64.b64encode(encode_envelope(msg)).decode("ascii")


def qr_decode(text: str) -> WireMessage:
    try:
        raw = base64.b64decode(text.strip().encode("ascii"), validate=True)
    except (binascii.Error, UnicodeEncodeError) as exc:
        raise CodecError(f"not a valid QR payload: {exc}") from None
    return parse_envelope(raw)
