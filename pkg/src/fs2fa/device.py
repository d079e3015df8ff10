"""The authentication token: provisioning, enrolment and authentication
response generation, counter catch-up, and secret discard.

The device's whole secret memory is ``DeviceState``: the long-term AE key,
the generator state, the counter, and the PIN-obfuscation key ``sa``.  The
PIN itself is never stored; it is turned into a verifier with ``sa`` on
demand and wiped immediately afterwards, together with every evolved key
the exchange touched.

Operations are atomic: on success they consume the passed-in state (its
generator state is zeroized) and return the advanced successor; on any
abort the passed-in state is untouched and still usable, so a tampered or
stale challenge costs the device nothing.  After every successful
operation the counter equals the generator epoch.
"""

from __future__ import annotations

import hmac
import os
from dataclasses import dataclass

from .codec import (
    ClientId,
    RESPONSE_DOMAIN,
    SESSION_KEY_DOMAIN,
    WireMessage,
    build_auth_response,
    build_enrol_response,
    encode_enrol_response_plain,
    encode_response_base,
    parse_auth_counter_plain,
    parse_auth_inner_plain,
    parse_enrol_challenge_plain,
)
from .crypto import (
    AeCiphertext,
    AeKey,
    FsprgState,
    PrfKey,
    Secret,
    ae_decrypt,
    ae_encrypt,
    prf,
    prf_keygen,
    update,
    zeroize,
)
from .errors import (
    PinEntryMismatch,
    PolicyRejected,
    SecretConsumed,
    StaleChallenge,
    TamperedMessage,
)
from .instrumentation import counters
from .policy import phi

PIN_MIN_DIGITS = 4
PIN_MAX_DIGITS = 12

DEVICE_STATE_VERSION = 0x01
_DEVICE_STATE_LEN = 1 + 16 + 32 + 32 + 8 + 8 + 32


class Pin:
    """PIN digits in a wipeable buffer.  Never stored in DeviceState."""

    __slots__ = ("_buf", "_live")

    def __init__(self, digits):
        if isinstance(digits, str):
            digits = digits.encode("ascii", errors="strict")
        digits = bytes(digits)
        if not PIN_MIN_DIGITS <= len(digits) <= PIN_MAX_DIGITS:
            raise ValueError(
                f"PIN must be {PIN_MIN_DIGITS}..{PIN_MAX_DIGITS} digits"
            )
        if not digits.isdigit():
            raise ValueError("PIN must be ASCII digits")
        self._buf = bytearray(digits)
        self._live = True

    @property
    def bytes(self) -> bytes:
        if not self._live:
            raise SecretConsumed("Pin was zeroized")
        return bytes(self._buf)

    @property
    def consumed(self) -> bool:
        return not self._live

    def zeroize(self) -> None:
        self._buf[:] = bytes(len(self._buf))
        self._live = False

    def __eq__(self, other):
        if not isinstance(other, Pin):
            return NotImplemented
        if not (self._live and other._live):
            return False
        return hmac.compare_digest(bytes(self._buf), bytes(other._buf))

    def __repr__(self) -> str:
        return "Pin(<****>)"


class Verifier(Secret):
    """PRF of the PIN under sa; 32 bytes, or T bytes when truncated."""

    LENGTH = None

    def __init__(self, data):
        data = bytes(data)
        if not 4 <= len(data) <= 32:
            raise ValueError("verifier must be 4..32 bytes")
        super().__init__(data)


@dataclass
class DeviceState:
    """The token's entire secret memory."""

    client_id: ClientId
    k: AeKey
    st: FsprgState
    ct: int
    sa: PrfKey


@dataclass
class AuthOutcome:
    """What the device holds after answering an authentication challenge."""

    response: bytes
    session_key: bytes
    transaction: bytes


def device_setup(k: AeKey, st0: FsprgState, client_id: ClientId, rng) -> DeviceState:
    """Provision the token: store the shared key and genesis state, zero the
    counter, and generate the device-only PIN-obfuscation key."""
    if st0.epoch != 0:
        raise ValueError("provisioned generator state must be at epoch 0")
    sa = prf_keygen(rng)
    return DeviceState(client_id=client_id, k=k, st=st0, ct=0, sa=sa)


def check_pin_match(pin: Pin, confirm: Pin) -> bool:
    """Byte equality of the two entries (constant-time, length included)."""
    if pin.consumed or confirm.consumed:
        return False
    return hmac.compare_digest(pin.bytes, confirm.bytes)


def compute_verifier(sa: PrfKey, pin: Pin, truncation: int | None = None) -> Verifier:
    """v = PRF(sa, PIN), optionally truncated to the first T bytes."""
    if truncation is not None and not 4 <= truncation <= 32:
        raise ValueError("verifier truncation must be 4..32 bytes")
    counters.verifier_derivations += 1
    full = prf(sa, pin.bytes)
    return Verifier(full[:truncation] if truncation is not None else full)


def _resolve_pin(source) -> Pin:
    pin = source() if callable(source) else source
    if not isinstance(pin, Pin):
        raise TypeError("PIN source must yield a Pin")
    return pin


def handle_enrol_challenge(
    state: DeviceState,
    ct_pair: AeCiphertext,
    pin,
    pin_confirm,
    *,
    truncation: int | None = None,
) -> tuple[WireMessage, DeviceState]:
    """Answer an enrolment challenge.

    Order: authenticate/decrypt under the long-term key, parse the nonce
    and counter, reject non-advancing counters, double-check the PIN entry,
    derive the verifier, catch the generator up by d steps, and encrypt
    N || v under the evolved key.  PIN, verifier, evolved key, and nonce
    are all wiped before returning; ``pin``/``pin_confirm`` may be callables
    so the entry prompt happens only after the ciphertext authenticated.
    """
    plain, ok = ae_decrypt(state.k, ct_pair)
    if not ok:
        raise TamperedMessage("enrolment challenge failed authentication")
    nonce_m, ct_m = parse_enrol_challenge_plain(plain)
    if ct_m <= state.ct:
        raise StaleChallenge(
            f"challenge counter {ct_m} not ahead of device counter {state.ct}"
        )
    pin_v = confirm = v = kt1 = key1 = st_next = new_state = None
    try:
        pin_v = _resolve_pin(pin)
        confirm = _resolve_pin(pin_confirm)
        if not check_pin_match(pin_v, confirm):
            raise PinEntryMismatch("the two PIN entries differ")
        v = compute_verifier(state.sa, pin_v, truncation)
        d = ct_m - state.ct
        kt1, st_next = update(state.st, d)
        key1 = kt1.as_ae_key()
        response_ct = ae_encrypt(key1, encode_enrol_response_plain(nonce_m, v.bytes))
        msg = build_enrol_response(state.client_id, response_ct)
        new_state = DeviceState(
            client_id=state.client_id, k=state.k, st=st_next, ct=state.ct + d, sa=state.sa
        )
        return msg, new_state
    finally:
        zeroize(pin_v, confirm, v, kt1, key1)
        if new_state is None:
            zeroize(st_next)  # aborted: leave the input state untouched
        else:
            state.st.zeroize()  # committed: the old state is consumed
        counters.discards.extend(("PIN", "v", "kt1", "N"))


def handle_auth_challenge(
    state: DeviceState,
    inner: AeCiphertext,
    counter_ct: AeCiphertext,
    pin,
    policy,
    *,
    truncation: int | None = None,
) -> tuple[WireMessage, AuthOutcome, DeviceState]:
    """Answer an authentication challenge and derive the session key.

    The counter ciphertext is opened first (it is under the long-term key,
    so it survives any earlier message loss); only after the catch-up can
    the transaction ciphertext be opened under the evolved key.  The
    transaction is checked against the policy before any PIN is requested.
    The device's answer: response = PRF(kt3, N || t || v || 0x01) and
    sk = PRF(kt3, N || t || v || 0x02).
    """
    plain, ok = ae_decrypt(state.k, counter_ct)
    if not ok:
        raise TamperedMessage("counter ciphertext failed authentication")
    tmp_ct = parse_auth_counter_plain(plain)
    if tmp_ct <= state.ct:
        raise StaleChallenge(
            f"challenge counter {tmp_ct} not ahead of device counter {state.ct}"
        )
    d = tmp_ct - state.ct
    pin_v = v = kt2 = key2 = kt3 = key3 = None
    st_mid = st_next = new_state = None
    try:
        kt2, st_mid = update(state.st, d)
        key2 = kt2.as_ae_key()
        plain2, ok = ae_decrypt(key2, inner)
        if not ok:
            raise TamperedMessage("transaction ciphertext failed authentication")
        nonce_m, t_m = parse_auth_inner_plain(plain2)
        if phi(t_m, policy) != 1:
            raise PolicyRejected("transaction rejected by client policy")
        pin_v = _resolve_pin(pin)
        v = compute_verifier(state.sa, pin_v, truncation)
        kt3, st_next = update(st_mid, 1)
        key3 = kt3.as_prf_key()
        base = encode_response_base(nonce_m, t_m, v.bytes)
        response = prf(key3, base + RESPONSE_DOMAIN)
        session_key = prf(key3, base + SESSION_KEY_DOMAIN)
        msg = build_auth_response(state.client_id, response)
        outcome = AuthOutcome(response=response, session_key=session_key, transaction=t_m)
        new_state = DeviceState(
            client_id=state.client_id,
            k=state.k,
            st=st_next,
            ct=state.ct + d + 1,
            sa=state.sa,
        )
        return msg, outcome, new_state
    finally:
        zeroize(pin_v, v, kt2, key2, kt3, key3)
        if new_state is None:
            zeroize(st_mid, st_next)  # aborted: input state stays usable
        else:
            state.st.zeroize()
            st_mid.zeroize()
        counters.discards.extend(("PIN", "v", "kt2", "kt3", "N", "t"))


def serialize_device_state(state: DeviceState) -> bytes:
    """Fixed layout, versioned: see docs/wire.md.  Contains no transient
    secrets and nothing derived from the PIN."""
    return b"".join(
        (
            bytes([DEVICE_STATE_VERSION]),
            state.client_id.bytes,
            state.k.bytes,
            state.st.bytes,
            state.st.epoch.to_bytes(8, "big"),
            state.ct.to_bytes(8, "big"),
            state.sa.bytes,
        )
    )


def deserialize_device_state(raw: bytes) -> DeviceState:
    if len(raw) != _DEVICE_STATE_LEN:
        raise ValueError(f"device state must be {_DEVICE_STATE_LEN} bytes, got {len(raw)}")
    if raw[0] != DEVICE_STATE_VERSION:
        raise ValueError(f"unsupported device state version {raw[0]:#04x}")
    off = 1
    client_id = ClientId(raw[off:off + 16]); off += 16
    k = AeKey(raw[off:off + 32]); off += 32
    st_bytes = raw[off:off + 32]; off += 32
    epoch = int.from_bytes(raw[off:off + 8], "big"); off += 8
    ct = int.from_bytes(raw[off:off + 8], "big"); off += 8
    sa = PrfKey(raw[off:off + 32])
    return DeviceState(
        client_id=client_id, k=k, st=FsprgState(st_bytes, epoch), ct=ct, sa=sa
    )


def save_device_state(state: DeviceState, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(serialize_device_state(state))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_device_state(path) -> DeviceState:
    with open(path, "rb") as fh:
        return deserialize_device_state(fh.read())
