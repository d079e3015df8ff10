"""Transaction descriptions and the policy predicate.

A transaction is the UTF-8 line ``pay <amount> to <payee>``.  The predicate
``phi`` is the deterministic check the device runs before asking for the
PIN: 1 iff the amount is within the policy cap and the payee is allowed.
The interactive CLI substitutes a prompt-backed object with the same
``matches`` method for the human confirmation step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_TRANSACTION_RE = re.compile(rb"\Apay (0|[1-9][0-9]*) to (.+)\Z", re.DOTALL)


def format_transaction(amount: int, payee: str) -> bytes:
    if amount < 0:
        raise ValueError("amount must be non-negative")
    if not payee:
        raise ValueError("payee must be non-empty")
    return f"pay {amount} to {payee}".encode("utf-8")


def parse_transaction(t: bytes) -> tuple[int, str]:
    m = _TRANSACTION_RE.match(t)
    if m is None:
        raise ValueError("unparseable transaction description")
    return int(m.group(1)), m.group(2).decode("utf-8")


@dataclass(frozen=True)
class Policy:
    """Deterministic matcher over a payment cap and an allowed payee set."""

    max_amount: int
    allowed_payees: frozenset

    def matches(self, t: bytes) -> bool:
        try:
            amount, payee = parse_transaction(t)
        except (ValueError, UnicodeDecodeError):
            return False
        return amount <= self.max_amount and payee in self.allowed_payees


def phi(t: bytes, policy) -> int:
    """1 iff the transaction matches the policy, else 0."""
    return 1 if policy.matches(t) else 0
