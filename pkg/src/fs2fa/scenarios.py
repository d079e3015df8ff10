"""Executable threat scenarios: scripted adversaries exercising the
protocol under each considered combination of capabilities (knows the PIN,
holds the device memory, breached the server, taps the channel) and the
corresponding protection goal.  Each run returns a structured report the
CLI renders as one line-delimited record per event.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import attacks, device as device_mod, harness, server as server_mod
from .codec import WireMessage
from .crypto import SeededRng
from .policy import Policy, format_transaction

SCENARIO_NAMES = {
    "1": "impersonation with stolen PIN and recorded traffic",
    "2": "impersonation with stolen device and recorded traffic",
    "3": "PIN recovery from stolen device and recorded traffic",
    "4": "PIN recovery from breached server and recorded traffic",
    "5": "transaction tampering on the channel",
}


@dataclass
class ScenarioReport:
    name: str
    title: str
    adversary_succeeded: bool
    events: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def render_lines(self) -> list[str]:
        lines = [
            f"scenario={self.name} title={self.title!r} "
            f"adversary_succeeded={self.adversary_succeeded}"
        ]
        for event in self.events:
            lines.append(" ".join(f"{k}={v}" for k, v in event.items()))
        for key, value in self.details.items():
            lines.append(f"detail {key}={value}")
        return lines


def setup_session(seed, pin="4831", payee="acme-corp", amount=250):
    rng = SeededRng(f"scenario:{seed}")
    record, bundle = server_mod.server_setup(rng)
    k, st0, client_id = bundle.open()
    dev = device_mod.device_setup(k, st0, client_id, rng)
    policy = Policy(max_amount=10_000, allowed_payees=frozenset({payee}))
    transaction = format_transaction(amount, payee)
    ci = harness.ClientInstance(0, dev, pin, policy)
    sj = harness.ServerInstance(0, record, transaction, rng)
    return rng, ci, sj, transaction


def run_scenario(name, seed: int = 0) -> ScenarioReport:
    name = str(name)
    runners = {
        "1": _scenario_pin_and_traffic,
        "2": _scenario_device_and_traffic_online,
        "3": _scenario_device_and_traffic_pin,
        "4": _scenario_server_and_traffic_pin,
        "5": _scenario_tampered_transaction,
    }
    if name not in runners:
        raise ValueError(f"unknown scenario {name!r}; choose one of 1..5")
    return runners[name](seed)


def _scenario_pin_and_traffic(seed) -> ScenarioReport:
    """Adversary knows the PIN and the traffic but has no device: it cannot
    produce the response, which needs an evolved key only the token holds."""
    rng, ci, sj, transaction = setup_session(seed)
    events = []
    transcript = harness.execute(ci, sj)
    events.append({"event": "eavesdrop", "messages": len(transcript.oracle_entries())})
    pin = harness.corrupt(ci, 1).fields["pin"]
    events.append({"event": "corrupt", "target": "client", "factor": "pin"})

    record = sj.record
    # fresh exchange to attack; the adversary can only replay or guess
    old_response = transcript.messages()[-1].payload
    server_mod.handle_hello_auth(record, transaction, rng)
    events.append({"event": "message", "kind": "hello-authentication", "by": "adversary"})
    replay_ok = server_mod.verify_auth_response(record, old_response) is not None
    events.append({"event": "attempt", "kind": "replayed-response",
                   "result": "accept" if replay_ok else "reject"})
    server_mod.handle_hello_auth(record, transaction, rng)
    guess = SeededRng(f"adv:{seed}").random_bytes(32)
    guess_ok = server_mod.verify_auth_response(record, guess) is not None
    events.append({"event": "attempt", "kind": "guessed-response",
                   "result": "accept" if guess_ok else "reject"})
    succeeded = replay_ok or guess_ok
    return ScenarioReport(
        name="1",
        title=SCENARIO_NAMES["1"],
        adversary_succeeded=succeeded,
        events=events,
        details={"knows_pin": pin is not None, "has_device": False},
    )


def _scenario_device_and_traffic_online(seed) -> ScenarioReport:
    """Adversary holds the device memory and the traffic but not the PIN:
    offline search cannot tell candidates apart, and online guessing runs
    into the lockout threshold."""
    rng, ci, sj, transaction = setup_session(seed)
    events = []
    transcript = harness.execute(ci, sj)
    events.append({"event": "eavesdrop", "messages": len(transcript.oracle_entries())})
    dump = harness.corrupt(ci, 2)
    events.append({"event": "corrupt", "target": "client", "factor": "device"})

    offline = attacks.main_offline_attack(dump.raw, transcript)
    events.append(
        {"event": "offline-bruteforce", "tried": offline.tried,
         "candidates_left": len(offline.candidates)}
    )
    online = attacks.online_pin_guessing(
        sj.record, dump.raw, transaction, rng, attacks.pin_universe(4)
    )
    events.append(
        {"event": "online-guessing", "attempts": online.attempts,
         "locked_out": online.locked_out}
    )
    if online.locked_out:
        events.append({"event": "abort", "party": "server", "reason": "LockedOut"})
    succeeded = online.succeeded or offline.unique is not None
    return ScenarioReport(
        name="2",
        title=SCENARIO_NAMES["2"],
        adversary_succeeded=succeeded,
        events=events,
        details={
            "offline_candidates": len(offline.candidates),
            "online_attempts": online.attempts,
            "locked_out": online.locked_out,
        },
    )


def _scenario_device_and_traffic_pin(seed) -> ScenarioReport:
    """Same corruption as scenario 2, goal is the PIN itself: the offline
    brute force keeps the entire universe."""
    rng, ci, sj, _ = setup_session(seed)
    events = []
    transcript = harness.execute(ci, sj)
    events.append({"event": "eavesdrop", "messages": len(transcript.oracle_entries())})
    dump = harness.corrupt(ci, 2)
    events.append({"event": "corrupt", "target": "client", "factor": "device"})
    report = attacks.main_offline_attack(dump.raw, transcript)
    events.append(
        {"event": "offline-bruteforce", "tried": report.tried,
         "candidates_left": len(report.candidates)}
    )
    return ScenarioReport(
        name="3",
        title=SCENARIO_NAMES["3"],
        adversary_succeeded=report.unique is not None,
        events=events,
        details={"candidates": len(report.candidates), "notes": "; ".join(report.notes)},
    )


def _scenario_server_and_traffic_pin(seed) -> ScenarioReport:
    """Server breach: the dump holds the verifier but not sa, so no PIN
    guess can be checked; the whole universe remains."""
    rng, ci, sj, _ = setup_session(seed)
    events = []
    transcript = harness.execute(ci, sj)
    events.append({"event": "eavesdrop", "messages": len(transcript.oracle_entries())})
    dump = harness.corrupt(sj)
    events.append({"event": "corrupt", "target": "server"})
    assert "sa" not in dump.fields

    def eliminates(pin_str: str) -> bool:
        # v = PRF(sa, PIN) is the only PIN-dependent value the server ever
        # saw, and sa is not in the dump: no recomputation is possible.
        return False

    report = attacks.offline_pin_bruteforce(attacks.pin_universe(4), eliminates)
    events.append(
        {"event": "offline-bruteforce", "tried": report.tried,
         "candidates_left": len(report.candidates)}
    )
    return ScenarioReport(
        name="4",
        title=SCENARIO_NAMES["4"],
        adversary_succeeded=len(report.candidates) == 1,
        events=events,
        details={
            "candidates": len(report.candidates),
            "verifier_in_dump": dump.fields["verifier"] is not None,
        },
    )


def _scenario_tampered_transaction(seed) -> ScenarioReport:
    """Man-in-the-middle flips bits in the transaction ciphertext: the
    device aborts on the failed tag before any PIN is requested."""
    rng, ci, sj, transaction = setup_session(seed)
    events = []
    # honest enrolment so authentication can start
    m1 = harness.send(ci, ("start", "enrolment"))
    m2 = harness.send(sj, m1)
    m3 = harness.send(ci, m2)
    harness.send(sj, m3)
    events.append({"event": "message", "kind": "enrolment", "result": "completed"})

    m4 = harness.send(ci, ("start", "authentication"))
    m5 = harness.send(sj, m4)
    prompts_before = ci.prompt_count
    tampered_payload = bytearray(m5.payload)
    tampered_payload[10] ^= 0x01  # inside the transaction ciphertext body
    tampered = WireMessage(m5.msg_type, m5.client_id, bytes(tampered_payload))
    events.append({"event": "tamper", "kind": "auth-challenge-transaction"})
    reply = harness.send(ci, tampered)
    aborted = reply is None and ci.halted_reason is not None
    events.append(
        {"event": "abort", "party": "device", "reason": ci.halted_reason}
    )
    return ScenarioReport(
        name="5",
        title=SCENARIO_NAMES["5"],
        adversary_succeeded=not aborted,
        events=events,
        details={
            "abort_reason": ci.halted_reason,
            "pin_prompts_during_attack": ci.prompt_count - prompts_before,
        },
    )
