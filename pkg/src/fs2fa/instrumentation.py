"""Operation counters for the cost bench and lifecycle tests.

A single process-wide ``OpCounts`` is incremented by the primitive layer
(PRF, AE, generator steps) and by a few protocol operations (verifier
derivations, discard events).  The protocol runs single-session per state
object, so plain module-level counts are sufficient.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field, replace


@dataclass
class OpCounts:
    prf_total: int = 0        # every PRF evaluation, incl. inside AE / generator steps
    prf_direct: int = 0       # PRF calls made by protocol code itself
    ae_encrypt: int = 0
    ae_decrypt: int = 0
    fsprg_next: int = 0       # individual generator steps, incl. inside update()
    update: int = 0           # multi-step wrapper invocations
    verifier_derivations: int = 0
    discards: list = field(default_factory=list)

    def snapshot(self) -> "OpCounts":
        return replace(self, discards=list(self.discards))


counters = OpCounts()


def reset() -> None:
    global counters
    counters.prf_total = 0
    counters.prf_direct = 0
    counters.ae_encrypt = 0
    counters.ae_decrypt = 0
    counters.fsprg_next = 0
    counters.update = 0
    counters.verifier_derivations = 0
    counters.discards.clear()


@contextmanager
def measuring():
    """Reset the counters, run the block, leave the counts readable."""
    reset()
    yield counters
