"""Security-game harness: client/server instances driven through the
oracle interface (execute, send, reveal, test, corrupt).

An instance is one run of one party.  It accepts at most once, holding a
session key, a session id (hash of its ordered message log - an artifact
convention, the protocol itself never names one), and the partner's id.
``send`` models active attacks: the instance consumes the message per its
state machine and answers with its protocol reply; a malformed or
unverifiable message halts the instance cleanly and is recorded.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from . import device as device_mod
from . import server as server_mod
from .codec import (
    ClientId,
    MsgType,
    Phase,
    WireMessage,
    build_auth_challenge,
    build_enrol_challenge,
    build_hello,
    encode_envelope,
    parse_auth_challenge,
    parse_auth_response,
    parse_enrol_challenge,
    parse_enrol_response,
)
from .device import DeviceState, Pin, serialize_device_state
from .errors import OracleError, ProtocolError
from .policy import Policy
from .server import ServerRecord, record_to_bytes

C2S = "client->server"
S2C = "server->client"


class InstanceStatus(Enum):
    RUNNING = "running"
    ACCEPTED = "accepted"
    TERMINATED = "terminated"


@dataclass
class Accepted:
    sk: bytes
    sid: bytes
    pid: bytes


@dataclass
class TranscriptEntry:
    direction: str
    message: WireMessage


@dataclass
class Transcript:
    """Append-only ordered log of the wire messages of one session."""

    entries: list[TranscriptEntry] = field(default_factory=list)
    completed: bool = False
    failure: str | None = None

    def append(self, direction: str, message: WireMessage) -> None:
        self.entries.append(TranscriptEntry(direction, message))

    def messages(self) -> list[WireMessage]:
        return [e.message for e in self.entries]

    def oracle_entries(self) -> list[tuple[str, str, bytes]]:
        """The transcript at oracle granularity: the authentication
        challenge counts as its two ciphertext pairs, so a full honest run
        lists seven flows."""
        label = {
            MsgType.HELLO_ENROL: "hello-enrolment",
            MsgType.HELLO_AUTH: "hello-authentication",
            MsgType.ENROL_CHALLENGE: "enrolment-challenge",
            MsgType.ENROL_RESPONSE: "enrolment-response",
            MsgType.AUTH_RESPONSE: "auth-response",
        }
        out = []
        for entry in self.entries:
            msg = entry.message
            if msg.msg_type is MsgType.AUTH_CHALLENGE:
                inner, counter_ct = parse_auth_challenge(msg)
                out.append((entry.direction, "auth-challenge-transaction", inner.to_bytes()))
                out.append((entry.direction, "auth-challenge-counter", counter_ct.to_bytes()))
            else:
                out.append((entry.direction, label[msg.msg_type], encode_envelope(msg)))
        return out

    def to_bytes(self) -> bytes:
        chunks = []
        for entry in self.entries:
            raw = encode_envelope(entry.message)
            chunks.append(
                (b"\x00" if entry.direction == C2S else b"\x01")
                + len(raw).to_bytes(4, "big")
                + raw
            )
        return b"".join(chunks)

    def sid(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()

    def wire_bytes(self) -> dict[str, int]:
        totals = {C2S: 0, S2C: 0}
        for entry in self.entries:
            totals[entry.direction] += len(encode_envelope(entry.message))
        return totals


def _log_sid(log: list[tuple[str, WireMessage]]) -> bytes:
    h = hashlib.sha256()
    for direction, msg in log:
        raw = encode_envelope(msg)
        h.update(b"\x00" if direction == C2S else b"\x01")
        h.update(len(raw).to_bytes(4, "big"))
        h.update(raw)
    return h.digest()


class ClientInstance:
    """One client run: wraps the device state plus the knowledge factor."""

    def __init__(
        self,
        index: int,
        device: DeviceState,
        pin: str,
        policy: Policy,
        *,
        truncation: int | None = None,
        server_id: bytes = b"server-0",
    ):
        self.index = index
        self.device = device
        self.pin_digits = pin
        self.policy = policy
        self.truncation = truncation
        self.server_id = server_id
        self.status = InstanceStatus.RUNNING
        self.accepted: Accepted | None = None
        self.revealed = False
        self.tested = False
        self.test_coin: int | None = None
        self.partner = None
        self.log: list[tuple[str, WireMessage]] = []
        self.halted_reason: str | None = None
        self.prompt_count = 0  # how many times the PIN was requested
        self._expecting: Phase | None = None

    @property
    def fresh(self) -> bool:
        return self.status is InstanceStatus.RUNNING and not self.log

    def _pin_source(self) -> Pin:
        self.prompt_count += 1
        return Pin(self.pin_digits)

    def _halt(self, reason: str) -> None:
        self.status = InstanceStatus.TERMINATED
        self.halted_reason = reason


class ServerInstance:
    """One server run over a single client's record."""

    def __init__(
        self,
        index: int,
        record: ServerRecord,
        transaction: bytes,
        rng,
        *,
        server_id: bytes = b"server-0",
    ):
        self.index = index
        self.record = record
        self.transaction = transaction
        self.rng = rng
        self.server_id = server_id
        self.status = InstanceStatus.RUNNING
        self.accepted: Accepted | None = None
        self.revealed = False
        self.tested = False
        self.test_coin: int | None = None
        self.partner = None
        self.log: list[tuple[str, WireMessage]] = []
        self.halted_reason: str | None = None

    @property
    def fresh(self) -> bool:
        return self.status is InstanceStatus.RUNNING and not self.log

    def _halt(self, reason: str) -> None:
        self.status = InstanceStatus.TERMINATED
        self.halted_reason = reason


def send(instance, message):
    """Deliver a message (or a ("start", phase) control for a client) to an
    instance; returns its protocol reply, or None when the protocol sends
    nothing back or the instance halted on the message."""
    if instance.status is not InstanceStatus.RUNNING:
        raise OracleError("instance has terminated")
    if isinstance(instance, ClientInstance):
        return _send_client(instance, message)
    if isinstance(instance, ServerInstance):
        return _send_server(instance, message)
    raise OracleError(f"not an instance: {instance!r}")


def _send_client(ci: ClientInstance, message):
    if isinstance(message, tuple) and len(message) == 2 and message[0] == "start":
        if ci._expecting is not None:
            ci._halt("start while expecting a challenge")
            return None
        phase = message[1] if isinstance(message[1], Phase) else Phase(message[1])
        hello = build_hello(ci.device.client_id, phase)
        ci.log.append((C2S, hello))
        ci._expecting = phase
        return hello
    if not isinstance(message, WireMessage):
        ci._halt(f"unintelligible message {type(message).__name__}")
        return None
    try:
        if message.msg_type is MsgType.ENROL_CHALLENGE and ci._expecting is Phase.ENROLMENT:
            ct_pair = parse_enrol_challenge(message)
            reply, new_state = device_mod.handle_enrol_challenge(
                ci.device,
                ct_pair,
                ci._pin_source,
                ci._pin_source,
                truncation=ci.truncation,
            )
            ci.device = new_state
            ci.log.append((S2C, message))
            ci.log.append((C2S, reply))
            ci._expecting = None
            return reply
        if message.msg_type is MsgType.AUTH_CHALLENGE and ci._expecting is Phase.AUTHENTICATION:
            inner, counter_ct = parse_auth_challenge(message)
            reply, outcome, new_state = device_mod.handle_auth_challenge(
                ci.device,
                inner,
                counter_ct,
                ci._pin_source,
                ci.policy,
                truncation=ci.truncation,
            )
            ci.device = new_state
            ci.log.append((S2C, message))
            ci.log.append((C2S, reply))
            ci._expecting = None
            ci.status = InstanceStatus.ACCEPTED
            ci.accepted = Accepted(
                sk=outcome.session_key, sid=_log_sid(ci.log), pid=ci.server_id
            )
            return reply
        ci._halt(f"unexpected {message.msg_type.name}")
        return None
    except ProtocolError as exc:
        ci._halt(f"{type(exc).__name__}: {exc}")
        return None


def _send_server(sj: ServerInstance, message):
    if not isinstance(message, WireMessage):
        sj._halt(f"unintelligible message {type(message).__name__}")
        return None
    if message.client_id != sj.record.client_id:
        sj._halt("message for a different client id")
        return None
    try:
        if message.msg_type is MsgType.HELLO_ENROL:
            challenge = server_mod.handle_hello_enrolment(sj.record, sj.rng)
            reply = build_enrol_challenge(sj.record.client_id, challenge)
            sj.log.append((C2S, message))
            sj.log.append((S2C, reply))
            return reply
        if message.msg_type is MsgType.ENROL_RESPONSE:
            ct_pair = parse_enrol_response(message)
            server_mod.handle_enrol_response(sj.record, ct_pair)
            sj.log.append((C2S, message))
            return None
        if message.msg_type is MsgType.HELLO_AUTH:
            inner, counter_ct = server_mod.handle_hello_auth(
                sj.record, sj.transaction, sj.rng
            )
            reply = build_auth_challenge(sj.record.client_id, inner, counter_ct)
            sj.log.append((C2S, message))
            sj.log.append((S2C, reply))
            return reply
        if message.msg_type is MsgType.AUTH_RESPONSE:
            response = parse_auth_response(message)
            sj.log.append((C2S, message))
            sk = server_mod.verify_auth_response(sj.record, response)
            if sk is None:
                sj._halt("response rejected")
                return None
            sj.status = InstanceStatus.ACCEPTED
            sj.accepted = Accepted(
                sk=sk, sid=_log_sid(sj.log), pid=sj.record.client_id.bytes
            )
            return None
        sj._halt(f"unexpected {message.msg_type.name}")
        return None
    except ProtocolError as exc:
        sj._halt(f"{type(exc).__name__}: {exc}")
        return None


def execute(ci: ClientInstance, sj: ServerInstance) -> Transcript:
    """Run the honest enrolment + authentication flow between two fresh
    instances, returning the eavesdropper's transcript (seven flows at
    oracle granularity)."""
    if not (ci.fresh and sj.fresh):
        raise OracleError("execute requires fresh instances")
    transcript = Transcript()

    def step(sender, receiver_msg, direction):
        reply = send(sender, receiver_msg)
        if reply is not None:
            transcript.append(direction, reply)
        return reply

    m1 = step(ci, ("start", Phase.ENROLMENT), C2S)
    m2 = step(sj, m1, S2C) if m1 is not None else None
    m3 = step(ci, m2, C2S) if m2 is not None else None
    if m3 is not None:
        send(sj, m3)
    m4 = step(ci, ("start", Phase.AUTHENTICATION), C2S) if m3 is not None else None
    m5 = step(sj, m4, S2C) if m4 is not None else None
    m6 = step(ci, m5, C2S) if m5 is not None else None
    if m6 is not None:
        send(sj, m6)
    ok = (
        ci.status is InstanceStatus.ACCEPTED
        and sj.status is InstanceStatus.ACCEPTED
    )
    transcript.completed = ok
    if not ok:
        transcript.failure = ci.halted_reason or sj.halted_reason or "incomplete"
    ci.partner, sj.partner = sj, ci
    return transcript


def reveal(instance) -> bytes:
    """The session key of an accepted instance, verbatim."""
    if instance.accepted is None:
        raise OracleError("instance has not accepted a session key")
    instance.revealed = True
    return instance.accepted.sk


def test(instance, rng, force_coin: int | None = None) -> bytes:
    """Flip a coin; return the session key or uniform bytes.  Only allowed
    once, and only while the instance (and its partner session) is fresh:
    accepted and never revealed."""
    if instance.tested:
        raise OracleError("test may be asked at most once per instance")
    if instance.accepted is None:
        raise OracleError("instance is not fresh: it has not accepted")
    if instance.revealed:
        raise OracleError("instance is not fresh: it was revealed")
    partner = instance.partner
    if (
        partner is not None
        and partner.accepted is not None
        and partner.accepted.sid == instance.accepted.sid
        and partner.revealed
    ):
        raise OracleError("instance is not fresh: its partner was revealed")
    if force_coin is None:
        coin = rng.random_bytes(1)[0] & 1
    else:
        coin = int(force_coin) & 1
    instance.tested = True
    instance.test_coin = coin
    return instance.accepted.sk if coin == 1 else rng.random_bytes(32)


@dataclass
class CorruptDump:
    """What a corruption query hands the adversary."""

    kind: str
    fields: dict
    raw: bytes


def corrupt(instance, a: int | None = None) -> CorruptDump:
    """Corrupt a party: (client, 1) yields the PIN, (client, 2) the full
    device memory; a server dump is the whole record (no sa, no PIN)."""
    if isinstance(instance, ClientInstance):
        if a == 1:
            digits = instance.pin_digits.encode("ascii")
            return CorruptDump(kind="client-pin", fields={"pin": instance.pin_digits}, raw=digits)
        if a == 2:
            dev = instance.device
            return CorruptDump(
                kind="client-device",
                fields={
                    "client_id": dev.client_id.bytes,
                    "k": dev.k.bytes,
                    "st": dev.st.bytes,
                    "epoch": dev.st.epoch,
                    "ct": dev.ct,
                    "sa": dev.sa.bytes,
                },
                raw=serialize_device_state(dev),
            )
        raise OracleError("client corruption factor must be 1 (PIN) or 2 (device)")
    if isinstance(instance, ServerInstance):
        rec = instance.record
        return CorruptDump(
            kind="server-record",
            fields={
                "client_id": rec.client_id.bytes,
                "k": rec.k.bytes,
                "st": rec.st.bytes,
                "epoch": rec.st.epoch,
                "ct": rec.ct,
                "verifier": rec.verifier.bytes if rec.verifier is not None else None,
            },
            raw=record_to_bytes(rec),
        )
    raise OracleError(f"not an instance: {instance!r}")
