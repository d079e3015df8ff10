"""Attack scripts: the offline PIN brute-force harness (which succeeds
against Strawman II and recovers nothing from the main protocol), online
guessing until lockout, replay, and the stolen-key forgery that breaks
Strawman I.

The offline harness is deliberately the same loop for both targets: walk
the PIN universe and keep every candidate the transcript cannot rule out.
Against Strawman II one recorded (challenge, response) pair plus the
device's (k, sa) pins down a unique PIN.  Against the main protocol the
dump opens only the long-term-key ciphertexts (a nonce and two counters,
all chosen before any PIN is involved); the response key and the verifier
ciphertext key predate the dump's generator state and cannot be rederived,
so no equation touches the PIN and the whole universe survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import baselines, device as device_mod, server as server_mod
from .codec import (
    MsgType,
    Nonce,
    parse_auth_challenge,
    parse_auth_response,
    parse_enrol_challenge,
    parse_enrol_response,
)
from .crypto import FsprgState, PrfKey, ae_decrypt, fsprg_next, prf
from .device import Pin, deserialize_device_state
from .errors import LockedOut, ProtocolError
from .policy import Policy


def pin_universe(length: int = 4) -> list[str]:
    return [str(i).zfill(length) for i in range(10 ** length)]


@dataclass
class BruteforceReport:
    tried: int
    candidates: list[str]
    notes: list[str] = field(default_factory=list)

    @property
    def unique(self) -> str | None:
        return self.candidates[0] if len(self.candidates) == 1 else None


def offline_pin_bruteforce(pins, eliminates) -> BruteforceReport:
    """The shared brute-force loop: keep every PIN that ``eliminates``
    cannot rule out against the transcript."""
    pins = list(pins)
    survivors = [pin for pin in pins if not eliminates(pin)]
    return BruteforceReport(tried=len(pins), candidates=survivors)


def strawman2_offline_attack(
    k: PrfKey, sa: PrfKey, nonce: Nonce, t: bytes, response: bytes,
    pin_length: int = 4,
) -> BruteforceReport:
    """Device theft plus one recorded exchange: recompute the response for
    every PIN and keep the ones that match (exactly one will)."""

    def eliminates(pin_str: str) -> bool:
        pin = Pin(pin_str)
        try:
            v = baselines.s2_enrol(sa, pin)
            return baselines.s2_respond(k, nonce, t, v) != response
        finally:
            pin.zeroize()

    report = offline_pin_bruteforce(pin_universe(pin_length), eliminates)
    report.notes.append("verifier and response recomputable from (k, sa, transcript)")
    return report


def main_offline_attack(
    device_dump_raw: bytes,
    transcript,
    pin_length: int = 4,
    future_epochs: int = 8,
) -> BruteforceReport:
    """The same loop pointed at the main protocol's device dump.

    Opens whatever the dump's keys can open, derives every key the dumped
    generator state can still reach, and then tries to rule PINs out.  The
    response was keyed at an epoch before the dump and the nonce and
    transaction sit inside a ciphertext under another burnt key, so no
    check involving the PIN can be formed; every candidate survives.
    """
    dump = deserialize_device_state(device_dump_raw)
    notes = []
    observed_response = None
    openable = []
    sealed = []
    for entry in transcript.entries:
        msg = entry.message
        if msg.msg_type is MsgType.ENROL_CHALLENGE:
            _, ok = ae_decrypt(dump.k, parse_enrol_challenge(msg))
            (openable if ok else sealed).append("enrolment challenge (nonce + counter)")
        elif msg.msg_type is MsgType.ENROL_RESPONSE:
            _, ok = ae_decrypt(dump.k, parse_enrol_response(msg))
            (openable if ok else sealed).append("enrolment response (carries the verifier)")
        elif msg.msg_type is MsgType.AUTH_CHALLENGE:
            inner, counter_ct = parse_auth_challenge(msg)
            _, ok = ae_decrypt(dump.k, counter_ct)
            (openable if ok else sealed).append("auth counter ciphertext")
            _, ok = ae_decrypt(dump.k, inner)
            (openable if ok else sealed).append("auth transaction ciphertext (nonce + t)")
        elif msg.msg_type is MsgType.AUTH_RESPONSE:
            observed_response = parse_auth_response(msg)
    notes.append(f"opened with long-term key: {', '.join(openable) or 'nothing'}")
    notes.append(f"sealed under discarded evolved keys: {', '.join(sealed) or 'nothing'}")

    # Every key this state can still produce postdates the transcript.
    future_keys = []
    cursor = FsprgState(dump.st.bytes, dump.st.epoch)
    for _ in range(future_epochs):
        out, cursor = fsprg_next(cursor)
        future_keys.append(out.as_prf_key())
    notes.append(
        f"derived {len(future_keys)} reachable evolved keys "
        f"(epochs {dump.st.epoch + 1}..{dump.st.epoch + future_epochs}); "
        "the transcript's response key is older and unreachable"
    )
    if observed_response is not None:
        notes.append("observed the 32-byte response; its key predates the dump")

    def eliminates(pin_str: str) -> bool:
        pin = Pin(pin_str)
        try:
            prf(dump.sa, pin.bytes)  # this candidate's verifier
            # Ruling the candidate out needs an equation linking its
            # verifier to the transcript.  The response's key and the
            # verifier ciphertext's key both predate the dumped state, and
            # the challenge nonce and transaction never left their
            # ciphertext, so no such equation can be formed.
            return False
        finally:
            pin.zeroize()

    report = offline_pin_bruteforce(pin_universe(pin_length), eliminates)
    report.notes = notes
    return report


@dataclass
class OnlineAttackReport:
    attempts: int
    locked_out: bool
    succeeded: bool
    recovered_pin: str | None = None


def online_pin_guessing(
    record,
    device_dump_raw: bytes,
    transaction: bytes,
    rng,
    candidates,
    clock=None,
) -> OnlineAttackReport:
    """Device theft, online: clone the token from the dump and try PINs
    against the live server until it locks the client out."""
    clone = deserialize_device_state(device_dump_raw)
    policy = _permissive_policy(transaction)
    now = [0.0]
    tick = clock if clock is not None else (lambda: now.__setitem__(0, now[0] + 1.0) or now[0])
    attempts = 0
    for pin_str in candidates:
        try:
            inner, counter_ct = server_mod.handle_hello_auth(record, transaction, rng)
        except LockedOut:
            return OnlineAttackReport(attempts=attempts, locked_out=True, succeeded=False)
        try:
            _, outcome, clone = device_mod.handle_auth_challenge(
                clone, inner, counter_ct, Pin(pin_str), policy
            )
        except ProtocolError:
            continue
        attempts += 1
        sk = server_mod.verify_auth_response(record, outcome.response, clock=tick)
        if sk is not None:
            return OnlineAttackReport(
                attempts=attempts, locked_out=False, succeeded=True,
                recovered_pin=pin_str,
            )
    return OnlineAttackReport(attempts=attempts, locked_out=False, succeeded=False)


def _permissive_policy(transaction: bytes) -> Policy:
    from .policy import parse_transaction

    try:
        amount, payee = parse_transaction(transaction)
    except ValueError:
        return Policy(max_amount=2**31, allowed_payees=frozenset())
    return Policy(max_amount=max(amount, 1), allowed_payees=frozenset({payee}))


def replay_auth_response(record, transaction: bytes, rng, captured_response: bytes) -> bool:
    """Replay a previously accepted response against a fresh exchange;
    returns True only if the server were to accept it (it must not)."""
    server_mod.handle_hello_auth(record, transaction, rng)
    return server_mod.verify_auth_response(record, captured_response) is not None


def strawman1_stolen_key_forgery(state: baselines.Strawman1State, rng) -> bool:
    """With the stolen MAC key, answer a fresh challenge: always verifies.
    This is the pre-play capability that breaks Strawman I outright."""
    nonce = baselines.s1_challenge(rng)
    forged = baselines.s1_respond(state.k, nonce)
    return baselines.s1_verify(state.k, nonce, forged)
