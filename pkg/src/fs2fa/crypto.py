"""Symmetric primitives: PRF, deterministic authenticated encryption, and
the forward-secure generator with its multi-step wrapper.

Everything is built from one keyed primitive, HMAC-SHA256 (RFC 2104 /
FIPS 198-1), so there is a single construction to audit:

* ``prf(key, data)`` is HMAC-SHA256 with a 32-byte key and 32-byte output.
  Reference vectors from RFC 4231 are pinned in the test fixtures.
* ``ae_encrypt`` / ``ae_decrypt`` form a deterministic SIV-style scheme:
  the tag is a PRF over the domain-tagged plaintext, and the keystream is
  derived from the tag, so the ciphertext is a pure function of (key,
  plaintext) and any bit flip in body or tag is caught by the tag check.
* ``fsprg_next`` derives the output block and the successor state from the
  current state under two fixed one-byte labels.  The old state is the PRF
  key of that step, so it cannot be recovered from anything it produced;
  discarding it is what makes the generator forward secure.

Secrets live in ``Secret`` containers backed by mutable buffers so a
protocol step can zeroize them when its figure says "discard"; a zeroized
secret refuses every later read.
"""

from __future__ import annotations

import hmac
import secrets
from dataclasses import dataclass

from .errors import DesyncTooLarge, SecretConsumed
from .instrumentation import counters

KEY_LEN = 32
STATE_LEN = 32
OUT_LEN = 32
TAG_LEN = 32
PRF_MAX_INPUT = 1 << 16
MAX_UPDATE_STEPS = 1 << 20   # cap on a single catch-up distance
EPOCH_LIMIT = 1 << 63

# One-byte domain labels.  'O'/'S' split the generator step into output and
# successor state; 'T'/'K' split the AE into tag and keystream derivations.
_FSPRG_OUTPUT_LABEL = b"\x4f"
_FSPRG_STATE_LABEL = b"\x53"
_AE_TAG_LABEL = b"\x54"
_AE_STREAM_LABEL = b"\x4b"


def _prf_raw(key: bytes, data: bytes) -> bytes:
    counters.prf_total += 1
    return hmac.digest(key, data, "sha256")


class Secret:
    """Fixed-length secret bytes with an explicit, observable zeroize."""

    __slots__ = ("_buf", "_live")
    LENGTH: int | None = KEY_LEN

    def __init__(self, data):
        data = bytes(data)
        if self.LENGTH is not None and len(data) != self.LENGTH:
            raise ValueError(
                f"{type(self).__name__} must be {self.LENGTH} bytes, got {len(data)}"
            )
        self._buf = bytearray(data)
        self._live = True

    @property
    def bytes(self) -> bytes:
        if not self._live:
            raise SecretConsumed(f"{type(self).__name__} was zeroized")
        return bytes(self._buf)

    @property
    def consumed(self) -> bool:
        return not self._live

    def zeroize(self) -> None:
        self._buf[:] = bytes(len(self._buf))
        self._live = False

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if not (self._live and other._live):
            return False
        return hmac.compare_digest(bytes(self._buf), bytes(other._buf))

    def __len__(self) -> int:
        return len(self._buf)

    def __repr__(self) -> str:
        state = "consumed" if not self._live else f"{len(self._buf)} bytes"
        return f"{type(self).__name__}(<{state}>)"


class PrfKey(Secret):
    """32-byte PRF key; also holds sa and the evolved PRF keys."""

    LENGTH = KEY_LEN


class AeKey(Secret):
    """32-byte authenticated-encryption key."""

    LENGTH = KEY_LEN


class FsprgOutput(Secret):
    """One 32-byte generator output block, used once as a temporary key."""

    LENGTH = OUT_LEN

    def as_prf_key(self) -> PrfKey:
        return PrfKey(self.bytes)

    def as_ae_key(self) -> AeKey:
        return AeKey(self.bytes)


class FsprgState(Secret):
    """Opaque generator state plus the count of steps since genesis.

    The epoch mirrors the protocol counters so the counter/state lockstep
    can be asserted mechanically; it never drives the cryptography.
    """

    __slots__ = ("_epoch",)
    LENGTH = STATE_LEN

    def __init__(self, data, epoch: int = 0):
        super().__init__(data)
        if not 0 <= int(epoch) < 2**64:
            raise ValueError("epoch out of range")
        self._epoch = int(epoch)

    @property
    def epoch(self) -> int:
        return self._epoch

    def __eq__(self, other):
        same = super().__eq__(other)
        if same is NotImplemented:
            return same
        return same and self._epoch == other._epoch

    def __repr__(self) -> str:
        state = "consumed" if self.consumed else f"epoch={self._epoch}"
        return f"FsprgState(<{state}>)"


@dataclass(frozen=True)
class AeCiphertext:
    """Deterministic AE output: body of plaintext length plus a 32-byte tag."""

    body: bytes
    tag: bytes

    def __post_init__(self):
        if not isinstance(self.body, bytes):
            object.__setattr__(self, "body", bytes(self.body))
        if len(self.tag) != TAG_LEN:
            raise ValueError(f"tag must be {TAG_LEN} bytes, got {len(self.tag)}")

    def to_bytes(self) -> bytes:
        return self.body + self.tag

    @classmethod
    def from_bytes(cls, raw: bytes) -> "AeCiphertext":
        if len(raw) < TAG_LEN:
            raise ValueError("ciphertext shorter than its tag")
        return cls(body=raw[:-TAG_LEN], tag=raw[-TAG_LEN:])


class SystemRng:
    """Operating-system entropy; the production randomness source."""

    def random_bytes(self, n: int) -> bytes:
        return secrets.token_bytes(n)


class SeededRng:
    """Deterministic byte stream (PRF in counter mode) for tests and
    seeded simulations.  Not a substitute for SystemRng in production."""

    def __init__(self, seed):
        if isinstance(seed, int):
            seed = seed.to_bytes(max(1, (seed.bit_length() + 7) // 8), "big")
        elif isinstance(seed, str):
            seed = seed.encode("utf-8")
        self._key = hmac.digest(b"fs2fa.seeded-rng", bytes(seed), "sha256")
        self._counter = 0
        self._pool = b""

    def random_bytes(self, n: int) -> bytes:
        while len(self._pool) < n:
            block = hmac.digest(self._key, self._counter.to_bytes(8, "big"), "sha256")
            self._counter += 1
            self._pool += block
        out, self._pool = self._pool[:n], self._pool[n:]
        return out


def default_rng() -> SystemRng:
    return SystemRng()


def prf(key: PrfKey, data: bytes) -> bytes:
    """Pseudorandom function: 32-byte output, deterministic in (key, data)."""
    if len(data) > PRF_MAX_INPUT:
        raise ValueError("prf input exceeds 2^16 bytes")
    counters.prf_direct += 1
    return _prf_raw(key.bytes, data)


def prf_keygen(rng) -> PrfKey:
    return PrfKey(rng.random_bytes(KEY_LEN))


def ae_keygen(rng) -> AeKey:
    return AeKey(rng.random_bytes(KEY_LEN))


def _keystream(key: bytes, tag: bytes, length: int) -> bytes:
    blocks = []
    for i in range((length + OUT_LEN - 1) // OUT_LEN):
        blocks.append(_prf_raw(key, _AE_STREAM_LABEL + tag + i.to_bytes(8, "big")))
    return b"".join(blocks)[:length]


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def ae_encrypt(key: AeKey, plaintext: bytes) -> AeCiphertext:
    """Deterministic authenticated encryption (SIV arrangement).

    tag = PRF(key, 'T' || plaintext); body = plaintext XOR keystream where
    keystream block i = PRF(key, 'K' || tag || i).  No nonce: every evolved
    key is single-use and plaintexts under the long-term key carry a fresh
    counter or nonce, so determinism leaks nothing.
    """
    if not 1 <= len(plaintext) <= PRF_MAX_INPUT - 1:
        raise ValueError("plaintext must be 1..65535 bytes")
    counters.ae_encrypt += 1
    kb = key.bytes
    tag = _prf_raw(kb, _AE_TAG_LABEL + plaintext)
    body = _xor(plaintext, _keystream(kb, tag, len(plaintext)))
    return AeCiphertext(body=body, tag=tag)


def ae_decrypt(key: AeKey, ct: AeCiphertext) -> tuple[bytes, bool]:
    """Decrypt and authenticate; returns (plaintext, True) or (b"", False).

    A False flag means tampering or a wrong key: the caller must abort the
    protocol step.
    """
    counters.ae_decrypt += 1
    kb = key.bytes
    plaintext = _xor(ct.body, _keystream(kb, ct.tag, len(ct.body)))
    expected = _prf_raw(kb, _AE_TAG_LABEL + plaintext)
    if hmac.compare_digest(expected, ct.tag):
        return plaintext, True
    return b"", False


def fsprg_keygen(rng) -> FsprgState:
    """Fresh generator state at epoch 0."""
    return FsprgState(rng.random_bytes(STATE_LEN), epoch=0)


def fsprg_next(state: FsprgState) -> tuple[FsprgOutput, FsprgState]:
    """One generator step: (output block, successor state).

    Deterministic; the input state is left intact so the caller decides
    when to zeroize it (``update`` wipes the intermediates it creates).
    """
    sb = state.bytes
    if state.epoch >= EPOCH_LIMIT:
        raise OverflowError("generator epoch exhausted")
    counters.fsprg_next += 1
    out = FsprgOutput(_prf_raw(sb, _FSPRG_OUTPUT_LABEL))
    nxt = FsprgState(_prf_raw(sb, _FSPRG_STATE_LABEL), state.epoch + 1)
    return out, nxt


def update(state: FsprgState, d: int) -> tuple[FsprgOutput, FsprgState]:
    """Run ``fsprg_next`` d times and return the d-th (output, state) pair.

    Intermediate outputs and states are zeroized here; the input state is
    the caller's to discard once the surrounding operation commits.
    """
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValueError("step count must be a positive integer")
    if d > MAX_UPDATE_STEPS:
        raise DesyncTooLarge(f"catch-up distance {d} exceeds cap {MAX_UPDATE_STEPS}")
    counters.update += 1
    out, st = fsprg_next(state)
    for _ in range(d - 1):
        nxt_out, nxt_st = fsprg_next(st)
        out.zeroize()
        st.zeroize()
        out, st = nxt_out, nxt_st
    return out, st


def zeroize(*items) -> None:
    """Zeroize every non-None argument; already-consumed secrets are fine."""
    for item in items:
        if item is not None and not item.consumed:
            item.zeroize()
