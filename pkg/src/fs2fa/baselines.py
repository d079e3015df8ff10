"""Strawman protocols I and II, kept as attackable references.

Strawman I is plain challenge-response under a shared MAC key: anyone who
steals the device can answer every future challenge.  Strawman II adds a
PIN-derived verifier to the MAC input, but the verifier is a deterministic
function of (sa, PIN) and both k and sa sit in the device, so one recorded
(challenge, response) pair lets a thief brute-force the PIN offline.  The
MAC is the module PRF (a PRF is a secure MAC).
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from .codec import Nonce
from .crypto import PrfKey, prf, prf_keygen
from .device import Pin


@dataclass
class Strawman1State:
    """One shared MAC key, held verbatim on both sides."""

    k: PrfKey


@dataclass
class Strawman2Client:
    k: PrfKey
    sa: PrfKey


@dataclass
class Strawman2Server:
    k: PrfKey
    v: bytes


@dataclass
class Strawman2State:
    """Client holds (k, sa); the server holds (k, v) and never sa."""

    client: Strawman2Client
    server: Strawman2Server


def s1_setup(rng) -> Strawman1State:
    return Strawman1State(k=prf_keygen(rng))


def s1_challenge(rng) -> Nonce:
    return Nonce(rng.random_bytes(16))


def s1_respond(k: PrfKey, n: Nonce) -> bytes:
    return prf(k, n.bytes)


def s1_verify(k: PrfKey, n: Nonce, response: bytes) -> bool:
    return hmac.compare_digest(s1_respond(k, n), response)


def s2_enrol(sa: PrfKey, pin: Pin) -> bytes:
    """v = PRF(sa, PIN), shared with the server over a secure channel."""
    return prf(sa, pin.bytes)


def _s2_input(n: Nonce, t: bytes, v: bytes) -> bytes:
    return n.bytes + len(t).to_bytes(2, "big") + t + v


def s2_setup(rng, pin: Pin) -> Strawman2State:
    k = prf_keygen(rng)
    sa = prf_keygen(rng)
    v = s2_enrol(sa, pin)
    return Strawman2State(
        client=Strawman2Client(k=k, sa=sa),
        server=Strawman2Server(k=PrfKey(k.bytes), v=v),
    )


def s2_respond(k: PrfKey, n: Nonce, t: bytes, v: bytes) -> bytes:
    return prf(k, _s2_input(n, t, v))


def s2_verify(k: PrfKey, n: Nonce, t: bytes, v: bytes, response: bytes) -> bool:
    return hmac.compare_digest(s2_respond(k, n, t, v), response)
