"""Adversarial channel simulation: drops, bit tampering, replays, and
reordering over randomized enrolment/authentication exchanges.

Every run is fully deterministic in its seed.  The property under test is
the synchronisation guarantee: the server counter never falls behind the
device counter, every disturbed exchange aborts cleanly (a typed protocol
error, never a crash or a hang), and once the channel is quiet the next
honest exchange always succeeds because the device catches up to the
counter carried in the challenge.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import device as device_mod
from . import server as server_mod
from .codec import Phase, parse_enrol_response
from .crypto import AeCiphertext, SeededRng
from .device import DeviceState, Pin
from .errors import ProtocolError
from .policy import Policy, format_transaction


@dataclass
class ChannelConfig:
    """Simulation knobs; a run is a pure function of these plus the seed."""

    drop_prob: float = 0.0
    replay_injections: int = 0
    tamper_injections: int = 0
    reorder: bool = False
    seed: int = 0


@dataclass
class SimReport:
    seed: int
    exchanges: int = 0
    successes: int = 0
    aborts: dict = field(default_factory=dict)
    drops: int = 0
    replays: int = 0
    tampers: int = 0
    reorders: int = 0
    events: list = field(default_factory=list)
    invariant_violations: list = field(default_factory=list)
    final_exchange_ok: bool = False
    device_ct: int = 0
    server_ct: int = 0

    @property
    def ok(self) -> bool:
        return not self.invariant_violations and self.final_exchange_ok

    def note_abort(self, reason: str) -> None:
        self.aborts[reason] = self.aborts.get(reason, 0) + 1


def _flip_bit(raw: bytes, rng: random.Random) -> bytes:
    pos = rng.randrange(len(raw) * 8)
    out = bytearray(raw)
    out[pos // 8] ^= 1 << (pos % 8)
    return bytes(out)


class _Channel:
    """Per-message drop/tamper/replay/reorder decisions with a capture log."""

    def __init__(self, config: ChannelConfig, rng: random.Random, report: SimReport,
                 n_messages: int):
        self.config = config
        self.rng = rng
        self.report = report
        self.history: list[tuple[str, object]] = []
        self.stash: tuple[str, object] | None = None
        positions = list(range(max(n_messages, 1)))
        rng.shuffle(positions)
        self.tamper_at = set(positions[: config.tamper_injections])
        self.replay_at = set(
            positions[config.tamper_injections:
                      config.tamper_injections + config.replay_injections]
        )
        self.counter = -1

    def deliver(self, kind: str, payload):
        """Returns a list of (kind, payload, mutated) to hand the receiver;
        empty when the message was dropped."""
        self.counter += 1
        self.history.append((kind, payload))
        if self.rng.random() < self.config.drop_prob:
            self.report.drops += 1
            self.report.events.append({"event": "drop", "kind": kind})
            return []
        if self.counter in self.tamper_at:
            self.report.tampers += 1
            self.report.events.append({"event": "tamper", "kind": kind})
            return [(kind, payload, True)]
        if self.counter in self.replay_at and len(self.history) > 1:
            old_kind, old_payload = self.rng.choice(self.history[:-1])
            self.report.replays += 1
            self.report.events.append({"event": "replay", "kind": old_kind})
            return [(old_kind, old_payload, False)]
        if self.config.reorder and self.rng.random() < 0.15:
            self.report.reorders += 1
            self.report.events.append({"event": "reorder", "kind": kind})
            if self.stash is None:
                self.stash = (kind, payload)
                return []
            held, self.stash = self.stash, (kind, payload)
            return [(held[0], held[1], False)]
        out = [(kind, payload, False)]
        if self.stash is not None and self.rng.random() < 0.5:
            held, self.stash = self.stash, None
            out.append((held[0], held[1], False))
        return out


def run_sync_simulation(
    config: ChannelConfig,
    n_exchanges: int = 12,
    pin: str = "1234",
) -> SimReport:
    """Drive seeded exchanges over a lossy channel and check the
    synchronisation invariant at every quiescent point."""
    report = SimReport(seed=config.seed)
    # str seeds keep random.Random deterministic across processes
    decisions = random.Random(f"fs2fa-sim:{config.seed}")
    rng = SeededRng(f"sim:{config.seed}")
    record, bundle = server_mod.server_setup(rng)
    k, st0, client_id = bundle.open()
    dev = device_mod.device_setup(k, st0, client_id, rng)
    policy = Policy(max_amount=10_000, allowed_payees=frozenset({"acme"}))
    transaction = format_transaction(250, "acme")
    channel = _Channel(config, decisions, report, n_messages=2 * (n_exchanges + 2))

    def check_invariant():
        if record.ct < dev.ct:
            report.invariant_violations.append(
                f"server ct {record.ct} fell behind device ct {dev.ct}"
            )

    def device_consume(kind, payload, mutated, devstate: DeviceState):
        """Feed one (possibly mutated) challenge to the device; returns the
        (reply kind, reply payload, new device state) or None on abort."""
        try:
            if kind == "enrol-challenge":
                ct_pair = payload
                if mutated:
                    ct_pair = _mutate_pair(ct_pair, decisions)
                reply, new_state = device_mod.handle_enrol_challenge(
                    devstate, ct_pair, Pin(pin), Pin(pin)
                )
                return "enrol-response", reply, new_state
            inner, counter_ct = payload
            if mutated:
                if decisions.random() < 0.5:
                    inner = _mutate_pair(inner, decisions)
                else:
                    counter_ct = _mutate_pair(counter_ct, decisions)
            reply, outcome, new_state = device_mod.handle_auth_challenge(
                devstate, inner, counter_ct, Pin(pin), policy
            )
            return "auth-response", (reply, outcome), new_state
        except ProtocolError as exc:
            report.note_abort(type(exc).__name__)
            report.events.append(
                {"event": "abort", "party": "device", "reason": type(exc).__name__}
            )
            return None

    def server_consume(kind, payload, mutated):
        try:
            if kind == "enrol-response":
                pair = parse_enrol_response(payload)
                if mutated:
                    pair = _mutate_pair(pair, decisions)
                server_mod.handle_enrol_response(record, pair)
                report.events.append({"event": "accept", "party": "server",
                                      "kind": "verifier-stored"})
                return True
            msg, outcome = payload
            response = outcome.response
            if mutated:
                response = _flip_bit(response, decisions)
            sk = server_mod.verify_auth_response(record, response)
            if sk is None:
                report.note_abort("ResponseRejected")
                report.events.append({"event": "abort", "party": "server",
                                      "reason": "ResponseRejected"})
                return False
            if sk != outcome.session_key and not mutated:
                report.invariant_violations.append("session keys diverged on accept")
            report.events.append({"event": "accept", "party": "server",
                                  "kind": "session-key"})
            return True
        except ProtocolError as exc:
            report.note_abort(type(exc).__name__)
            report.events.append(
                {"event": "abort", "party": "server", "reason": type(exc).__name__}
            )
            return False

    def one_exchange(phase: Phase, honest: bool = False) -> bool:
        nonlocal dev
        report.exchanges += 1
        succeeded = False

        def dispatch(kind, payload, mutated, depth=0):
            """Deliver one in-flight message to whichever party consumes
            that kind; device replies travel back through the channel."""
            nonlocal dev, succeeded
            if depth > 8:  # replay chains stay short; never loop forever
                return
            if kind in ("enrol-response", "auth-response"):
                if server_consume(kind, payload, mutated):
                    succeeded = True
                check_invariant()
                return
            result = device_consume(kind, payload, mutated, dev)
            check_invariant()
            if result is None:
                return
            reply_kind, reply_payload, new_state = result
            dev = new_state
            if honest:
                dispatch(reply_kind, reply_payload, False, depth + 1)
            else:
                for dk, dp, dm in channel.deliver(reply_kind, reply_payload):
                    dispatch(dk, dp, dm, depth + 1)

        try:
            if phase is Phase.ENROLMENT:
                challenge = server_mod.handle_hello_enrolment(record, rng)
                kind, payload = "enrol-challenge", challenge
            else:
                inner, counter_ct = server_mod.handle_hello_auth(record, transaction, rng)
                kind, payload = "auth-challenge", (inner, counter_ct)
        except ProtocolError as exc:
            report.note_abort(type(exc).__name__)
            return False
        if honest:
            dispatch(kind, payload, False)
        else:
            for dk, dp, dm in channel.deliver(kind, payload):
                dispatch(dk, dp, dm)
        check_invariant()
        if succeeded:
            report.successes += 1
        return succeeded

    # the first enrolment must land before authentications make sense
    while not one_exchange(Phase.ENROLMENT, honest=True):
        pass
    for _ in range(n_exchanges):
        phase = Phase.ENROLMENT if decisions.random() < 0.2 else Phase.AUTHENTICATION
        one_exchange(phase)
    report.final_exchange_ok = one_exchange(Phase.AUTHENTICATION, honest=True)
    check_invariant()
    report.device_ct = dev.ct
    report.server_ct = record.ct
    return report


def _mutate_pair(pair: AeCiphertext, rng: random.Random) -> AeCiphertext:
    return AeCiphertext.from_bytes(_flip_bit(pair.to_bytes(), rng))
