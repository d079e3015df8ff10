"""Exception types shared across the protocol modules.

Every protocol-level failure is a ``ProtocolError`` subclass so callers
(the CLI, the harness, the channel simulator) can catch one base type and
still tell the reasons apart.
"""


class ProtocolError(Exception):
    """Base class for every clean protocol abort."""


class TamperedMessage(ProtocolError):
    """A ciphertext failed authentication; the step must be abandoned."""


class StaleChallenge(ProtocolError):
    """The challenge counter is not ahead of the local counter."""


class PinEntryMismatch(ProtocolError):
    """The two PIN entries typed during enrolment differ."""


class DesyncTooLarge(ProtocolError):
    """The requested catch-up distance exceeds the configured cap."""


class PolicyRejected(ProtocolError):
    """The transaction did not match the client's policy (or was declined)."""


class NoPendingExchange(ProtocolError):
    """A response arrived but no matching exchange is in progress."""


class NonceMismatch(ProtocolError):
    """The response echoes a different challenge nonce than expected."""


class NotEnrolled(ProtocolError):
    """Authentication requested before any verifier was enrolled."""


class LockedOut(ProtocolError):
    """Too many failed responses; the client is locked until admin reset."""


class UnauthenticatedChannel(ProtocolError):
    """Enrolment was attempted outside an authenticated channel."""


class CodecError(ProtocolError):
    """A wire envelope or plaintext layout could not be parsed."""


class SecretConsumed(RuntimeError):
    """A secret was read after it had been zeroized."""


class OracleError(Exception):
    """Misuse of the security-game oracle interface (not a protocol abort)."""
