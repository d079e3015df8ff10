"""The verifying party: provisioning, challenge generation with state
evolution, verifier storage, response verification, and lockout.

Operations mutate the passed ``ServerRecord`` under the caller's
record-level lock (one client's record is never operated on concurrently).
The counter and generator state are always committed as a pair, after
every fallible step, so a failure can never leave them split.  Evolved
keys live only inside the single pending exchange and are zeroized the
moment the exchange resolves, matching the protocol's discard lines.
"""

from __future__ import annotations

import hmac
import os
import struct
import threading
import time
from dataclasses import dataclass, field

from .codec import (
    ClientId,
    Nonce,
    RESPONSE_DOMAIN,
    SESSION_KEY_DOMAIN,
    encode_auth_counter_plain,
    encode_auth_inner_plain,
    encode_enrol_challenge_plain,
    encode_response_base,
    parse_enrol_response_plain,
)
from .crypto import (
    AeCiphertext,
    AeKey,
    FsprgState,
    PrfKey,
    ae_decrypt,
    ae_encrypt,
    ae_keygen,
    fsprg_keygen,
    prf,
    update,
    zeroize,
)
from .device import Verifier
from .errors import (
    LockedOut,
    NonceMismatch,
    NoPendingExchange,
    NotEnrolled,
    TamperedMessage,
    UnauthenticatedChannel,
)
from .instrumentation import counters
from .policy import Policy, phi  # noqa: F401  (phi is part of this module's surface)

DEFAULT_LOCKOUT_THRESHOLD = 5
DEFAULT_LOCKOUT_WINDOW = 900.0  # seconds

RECORD_VERSION = 0x01
_STORE_MAGIC = b"FS2A"
_STORE_VERSION = 0x01


@dataclass
class LockoutState:
    failures: int = 0
    window_start: float = 0.0
    locked: bool = False


@dataclass
class PendingEnrolment:
    nonce: Nonce
    kt1: AeKey


@dataclass
class PendingAuthentication:
    nonce: Nonce
    kt3: PrfKey
    transaction: bytes


@dataclass
class ServerRecord:
    """Per-client server memory.  ``pending`` is transient and never hits
    disk; a crash mid-exchange just forces the client to retry."""

    client_id: ClientId
    k: AeKey
    st: FsprgState
    ct: int
    verifier: Verifier | None = None
    pending: object | None = None
    lockout: LockoutState = field(default_factory=LockoutState)
    lockout_threshold: int | None = DEFAULT_LOCKOUT_THRESHOLD
    lockout_window: float = DEFAULT_LOCKOUT_WINDOW


@dataclass
class ProvisioningBundle:
    """The (k, st0, client id) triple handed to the device once over the
    secure setup channel."""

    k: AeKey
    st0: FsprgState
    client_id: ClientId
    _opened: bool = field(default=False, repr=False)

    def open(self) -> tuple[AeKey, FsprgState, ClientId]:
        if self._opened:
            raise RuntimeError("provisioning bundle was already delivered")
        self._opened = True
        return self.k, self.st0, self.client_id


def server_setup(rng) -> tuple[ServerRecord, ProvisioningBundle]:
    """Generate the shared key, genesis state, and client id; the bundle
    carries independent copies for the device side."""
    k = ae_keygen(rng)
    st0 = fsprg_keygen(rng)
    client_id = ClientId(rng.random_bytes(16))
    record = ServerRecord(client_id=client_id, k=k, st=st0, ct=0)
    bundle = ProvisioningBundle(
        k=AeKey(k.bytes), st0=FsprgState(st0.bytes, 0), client_id=client_id
    )
    return record, bundle


def _supersede_pending(record: ServerRecord) -> None:
    pending = record.pending
    if pending is None:
        return
    if isinstance(pending, PendingEnrolment):
        pending.kt1.zeroize()
        counters.discards.extend(("kt1", "N"))
    else:
        pending.kt3.zeroize()
        counters.discards.extend(("kt3", "N", "t"))
    record.pending = None


def _commit(record: ServerRecord, new_ct: int, new_st: FsprgState) -> None:
    # The counter/state pair changes together or not at all.
    old_st = record.st
    record.ct, record.st = new_ct, new_st
    old_st.zeroize()


def handle_hello_enrolment(
    record: ServerRecord, rng, *, channel_authenticated: bool = True
) -> AeCiphertext:
    """Start an enrolment: advance the counter and generator by one, hold
    the evolved key and a fresh nonce, and return Enc_k(N || ct).

    Enrolment only proceeds over a channel where the client already proved
    their identity; that assumption is modeled by the flag.  A repeated
    hello supersedes the pending exchange and advances again - the counter
    never moves backwards.
    """
    if record.lockout.locked:
        raise LockedOut("client is locked out; admin reset required")
    if not channel_authenticated:
        raise UnauthenticatedChannel("enrolment requires an authenticated channel")
    _supersede_pending(record)
    new_ct = record.ct + 1
    kt1, st_next = update(record.st, 1)
    nonce = Nonce(rng.random_bytes(16))
    challenge = ae_encrypt(record.k, encode_enrol_challenge_plain(nonce, new_ct))
    _commit(record, new_ct, st_next)
    record.pending = PendingEnrolment(nonce=nonce, kt1=kt1.as_ae_key())
    kt1.zeroize()
    return challenge


def handle_enrol_response(record: ServerRecord, ct_pair: AeCiphertext) -> None:
    """Open the response under the held evolved key and store the verifier.

    Raises on tampering or a nonce mismatch; in every case the evolved key
    and nonce are discarded and the pending exchange is cleared.
    """
    pending = record.pending
    if not isinstance(pending, PendingEnrolment):
        raise NoPendingExchange("no enrolment in progress")
    try:
        plain, ok = ae_decrypt(pending.kt1, ct_pair)
        if not ok:
            raise TamperedMessage("enrolment response failed authentication")
        nonce_m, v_bytes = parse_enrol_response_plain(plain)
        if nonce_m != pending.nonce:
            raise NonceMismatch("response does not answer the pending challenge")
        old = record.verifier
        record.verifier = Verifier(v_bytes)
        if old is not None:
            old.zeroize()
    finally:
        pending.kt1.zeroize()
        record.pending = None
        counters.discards.extend(("kt1", "N"))


def handle_hello_auth(
    record: ServerRecord, t: bytes, rng
) -> tuple[AeCiphertext, AeCiphertext]:
    """Start an authentication for transaction ``t``.

    Advances the counter and generator twice: kt2 seals (N || t), kt3 is
    held for the response check.  The step counter tmp_ct (the value at the
    kt2 step) travels under the long-term key so a device that missed any
    number of earlier challenges can still open it and catch up.  kt2 is
    not needed once the challenge is sealed and is zeroized here.
    """
    if record.lockout.locked:
        raise LockedOut("client is locked out; admin reset required")
    if record.verifier is None:
        raise NotEnrolled("no verifier enrolled for this client")
    _supersede_pending(record)
    kt2, st_mid = update(record.st, 1)
    tmp_ct = record.ct + 1
    kt3, st_next = update(st_mid, 1)
    nonce = Nonce(rng.random_bytes(16))
    key2 = kt2.as_ae_key()
    inner = ae_encrypt(key2, encode_auth_inner_plain(nonce, t))
    counter_ct = ae_encrypt(record.k, encode_auth_counter_plain(tmp_ct))
    _commit(record, record.ct + 2, st_next)
    st_mid.zeroize()
    record.pending = PendingAuthentication(
        nonce=nonce, kt3=kt3.as_prf_key(), transaction=bytes(t)
    )
    zeroize(kt2, key2, kt3)
    counters.discards.append("kt2")
    return inner, counter_ct


def verify_auth_response(
    record: ServerRecord, response: bytes, clock=time.time
):
    """Check the response against the held evolved key and stored verifier.

    Returns the 32-byte session key on a match, or None on reject (a
    mismatch cannot distinguish tampering from a wrong PIN).  Rejects are
    counted toward the lockout threshold within the rolling window; a
    match resets the failure count.  kt3, the nonce, and the transaction
    are discarded either way.
    """
    if record.lockout.locked:
        raise LockedOut("client is locked out; admin reset required")
    pending = record.pending
    if not isinstance(pending, PendingAuthentication):
        raise NoPendingExchange("no authentication in progress")
    try:
        base = encode_response_base(
            pending.nonce, pending.transaction, record.verifier.bytes
        )
        expected = prf(pending.kt3, base + RESPONSE_DOMAIN)
        if isinstance(response, bytes) and hmac.compare_digest(response, expected):
            session_key = prf(pending.kt3, base + SESSION_KEY_DOMAIN)
            record.lockout.failures = 0
            return session_key
        _note_failure(record, clock())
        return None
    finally:
        pending.kt3.zeroize()
        record.pending = None
        counters.discards.extend(("kt3", "N", "t"))


def _note_failure(record: ServerRecord, now: float) -> None:
    lk = record.lockout
    if lk.window_start == 0.0 or now - lk.window_start > record.lockout_window:
        lk.window_start = now
        lk.failures = 1
    else:
        lk.failures += 1
    if record.lockout_threshold is not None and lk.failures >= record.lockout_threshold:
        lk.locked = True


def unlock_record(record: ServerRecord) -> None:
    """Admin reset of the lockout bookkeeping."""
    record.lockout = LockoutState()


# --- persistence -----------------------------------------------------------

def record_to_bytes(record: ServerRecord) -> bytes:
    verifier = record.verifier.bytes if record.verifier is not None else b""
    threshold = 0 if record.lockout_threshold is None else record.lockout_threshold
    return b"".join(
        (
            bytes([RECORD_VERSION]),
            record.client_id.bytes,
            record.k.bytes,
            record.st.bytes,
            record.st.epoch.to_bytes(8, "big"),
            record.ct.to_bytes(8, "big"),
            bytes([len(verifier)]),
            verifier,
            struct.pack(">IdBId", record.lockout.failures, record.lockout.window_start,
                        1 if record.lockout.locked else 0, threshold,
                        record.lockout_window),
        )
    )


def record_from_bytes(raw: bytes) -> ServerRecord:
    if len(raw) < 1 + 16 + 32 + 32 + 8 + 8 + 1:
        raise ValueError("server record truncated")
    if raw[0] != RECORD_VERSION:
        raise ValueError(f"unsupported server record version {raw[0]:#04x}")
    off = 1
    client_id = ClientId(raw[off:off + 16]); off += 16
    k = AeKey(raw[off:off + 32]); off += 32
    st_bytes = raw[off:off + 32]; off += 32
    epoch = int.from_bytes(raw[off:off + 8], "big"); off += 8
    ct = int.from_bytes(raw[off:off + 8], "big"); off += 8
    vlen = raw[off]; off += 1
    verifier = Verifier(raw[off:off + vlen]) if vlen else None
    off += vlen
    failures, window_start, locked, threshold, window = struct.unpack_from(
        ">IdBId", raw, off
    )
    return ServerRecord(
        client_id=client_id,
        k=k,
        st=FsprgState(st_bytes, epoch),
        ct=ct,
        verifier=verifier,
        lockout=LockoutState(failures=failures, window_start=window_start,
                             locked=bool(locked)),
        lockout_threshold=None if threshold == 0 else threshold,
        lockout_window=window,
    )


class RecordStore:
    """Single-file store of server records keyed by client id.

    Writes are write-ahead: the new record blob is appended to a WAL and
    fsynced before the main file is atomically rewritten, so the committed
    counter/state pair survives a crash at any point.  The store is safe
    for concurrent use provided callers serialize per-record operations.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        self._wal_path = self.path + ".wal"
        self._lock = threading.Lock()
        self._blobs: dict[bytes, bytes] = {}
        self._load()

    def _load(self) -> None:
        if os.path.exists(self.path):
            with open(self.path, "rb") as fh:
                raw = fh.read()
            if len(raw) < 9 or raw[:4] != _STORE_MAGIC or raw[4] != _STORE_VERSION:
                raise ValueError(f"{self.path} is not a record store")
            off, count = 9, int.from_bytes(raw[5:9], "big")
            for _ in range(count):
                blob_len = int.from_bytes(raw[off:off + 2], "big")
                off += 2
                blob = raw[off:off + blob_len]
                off += blob_len
                self._blobs[blob[1:17]] = blob
        replayed = self._replay_wal()
        if replayed:
            self._rewrite()
        self._truncate_wal()

    def _replay_wal(self) -> int:
        if not os.path.exists(self._wal_path):
            return 0
        with open(self._wal_path, "rb") as fh:
            raw = fh.read()
        replayed, off = 0, 0
        while off + 2 <= len(raw):
            blob_len = int.from_bytes(raw[off:off + 2], "big")
            if off + 2 + blob_len > len(raw):
                break  # torn tail from a crash mid-append; ignore
            blob = raw[off + 2:off + 2 + blob_len]
            self._blobs[blob[1:17]] = blob
            replayed += 1
            off += 2 + blob_len
        return replayed

    def _append_wal(self, blob: bytes) -> None:
        with open(self._wal_path, "ab") as fh:
            fh.write(len(blob).to_bytes(2, "big") + blob)
            fh.flush()
            os.fsync(fh.fileno())

    def _truncate_wal(self) -> None:
        with open(self._wal_path, "wb"):
            pass

    def _rewrite(self) -> None:
        body = b"".join(
            len(blob).to_bytes(2, "big") + blob for blob in self._blobs.values()
        )
        tmp = self.path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(_STORE_MAGIC + bytes([_STORE_VERSION]))
            fh.write(len(self._blobs).to_bytes(4, "big"))
            fh.write(body)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)

    def put(self, record: ServerRecord) -> None:
        blob = record_to_bytes(record)
        with self._lock:
            self._append_wal(blob)
            self._blobs[record.client_id.bytes] = blob
            self._rewrite()
            self._truncate_wal()

    def get(self, client_id: ClientId) -> ServerRecord:
        with self._lock:
            blob = self._blobs.get(client_id.bytes)
        if blob is None:
            raise KeyError(f"no record for client {client_id.hex()}")
        return record_from_bytes(blob)

    def client_ids(self) -> list[ClientId]:
        with self._lock:
            return [ClientId(cid) for cid in self._blobs]
