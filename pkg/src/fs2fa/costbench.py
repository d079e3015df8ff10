"""Communication and computation accounting.

Two conventions are reported side by side throughout:

* the accounting convention of the protocol's published analysis - fixed
  constants (a hello is carried as an opaque 250 bits; ciphertexts and
  tags as 256 bits each) and symmetric-op counts in which each multi-step
  generator catch-up counts as one PRF call and the PIN-verifier
  derivation is not counted;
* what this implementation actually does - real envelope bytes on the
  wire and raw primitive call counts from the instrumentation layer.

The published totals this must reproduce: 2804 bits of traffic per
enrolment+authentication cycle (250+512 client and 512 server enrolment,
250+256 client and 1024 server authentication), 18 symmetric-key
operations, and zero modular exponentiations.  The comparison rows for
the two reference protocols (3136 and 3900 bits, 19/5 and 7/12 ops) are
carried as reported constants, not measured.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from . import device as device_mod, server as server_mod
from .codec import MsgType, encode_envelope, parse_enrol_response
from .crypto import SeededRng
from .device import Pin
from .instrumentation import OpCounts, measuring
from .policy import Policy, format_transaction

WANGW18_BITS = 3136
JARECKIJKSS21_BITS = 3900
WANGW18_SYM_OPS = 19
WANGW18_MODEXP = 5
JARECKIJKSS21_SYM_OPS = 7
JARECKIJKSS21_MODEXP = 12

PAPER_CLAIMED_MAX_SAVING_PCT = 40.0


@dataclass(frozen=True)
class CostModel:
    """The published accounting constants."""

    id_bits: int = 128
    nonce_bits: int = 128
    prf_out_bits: int = 256
    ct_body_bits: int = 256
    tag_bits: int = 256
    hello_bits: int = 250  # opaque convention: 128-bit id + phase label


@dataclass(frozen=True)
class CostItem:
    phase: str
    party: str
    label: str
    bits: int


@dataclass
class CostReport:
    items: list[CostItem]

    @property
    def total_bits(self) -> int:
        return sum(item.bits for item in self.items)

    def subtotal(self, phase: str, party: str) -> int:
        return sum(i.bits for i in self.items if i.phase == phase and i.party == party)

    def itemization(self) -> dict[str, int]:
        return {
            "enrolment client": self.subtotal("enrolment", "client"),
            "enrolment server": self.subtotal("enrolment", "server"),
            "authentication client": self.subtotal("authentication", "client"),
            "authentication server": self.subtotal("authentication", "server"),
        }


def comm_cost_paper_convention(model: CostModel = CostModel()) -> CostReport:
    """Pure arithmetic over the accounting constants; totals 2804 bits."""
    pair = model.ct_body_bits + model.tag_bits
    items = [
        CostItem("enrolment", "client", "hello", model.hello_bits),
        CostItem("enrolment", "server", "challenge ciphertext pair", pair),
        CostItem("enrolment", "client", "response ciphertext pair", pair),
        CostItem("authentication", "client", "hello", model.hello_bits),
        CostItem("authentication", "server", "two challenge ciphertext pairs", 2 * pair),
        CostItem("authentication", "client", "response", model.prf_out_bits),
    ]
    return CostReport(items=items)


_ACTUAL_LABELS = {
    MsgType.HELLO_ENROL: ("enrolment", "client", "hello"),
    MsgType.ENROL_CHALLENGE: ("enrolment", "server", "challenge ciphertext pair"),
    MsgType.ENROL_RESPONSE: ("enrolment", "client", "response ciphertext pair"),
    MsgType.HELLO_AUTH: ("authentication", "client", "hello"),
    MsgType.AUTH_CHALLENGE: ("authentication", "server", "two challenge ciphertext pairs"),
    MsgType.AUTH_RESPONSE: ("authentication", "client", "response"),
}


@dataclass
class ActualCommReport:
    """Measured envelope bytes of a transcript, convention bits alongside."""

    items: list[dict] = field(default_factory=list)

    @property
    def total_bytes(self) -> int:
        return sum(item["bytes"] for item in self.items)

    @property
    def total_bits(self) -> int:
        return 8 * self.total_bytes

    def by_direction(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for item in self.items:
            totals[item["party"]] = totals.get(item["party"], 0) + item["bytes"]
        return totals


def comm_cost_actual(transcript, model: CostModel = CostModel()) -> ActualCommReport:
    """Sum real envelope bytes of an honest transcript per message."""
    convention = {
        (i.phase, i.party, i.label): i.bits
        for i in comm_cost_paper_convention(model).items
    }
    report = ActualCommReport()
    for entry in transcript.entries:
        msg = entry.message
        phase, party, label = _ACTUAL_LABELS[msg.msg_type]
        raw = encode_envelope(msg)
        report.items.append(
            {
                "phase": phase,
                "party": party,
                "label": label,
                "bytes": len(raw),
                "bits": 8 * len(raw),
                "convention_bits": convention[(phase, party, label)],
            }
        )
    return report


@dataclass
class OpCountReport:
    raw: OpCounts
    modexp: int = 0  # the protocol involves no modular exponentiation at all

    @property
    def ae_calls(self) -> int:
        return self.raw.ae_encrypt + self.raw.ae_decrypt

    @property
    def paper_convention_prf_calls(self) -> int:
        # Each Update counts as one PRF call; the PIN-verifier derivation is
        # outside the published per-phase counts.
        return self.raw.update + (self.raw.prf_direct - self.raw.verifier_derivations)

    @property
    def paper_convention_sym_ops(self) -> int:
        return self.ae_calls + self.paper_convention_prf_calls

    @property
    def raw_sym_ops(self) -> int:
        return self.ae_calls + self.raw.prf_direct + self.raw.fsprg_next


def measure_honest_cycle(seed: int = 0, pin: str = "1234") -> OpCountReport:
    """Run one honest enrolment+authentication cycle with instrumented
    primitives (provisioning excluded) and report the counts."""
    rng = SeededRng(f"costbench:{seed}")
    record, bundle = server_mod.server_setup(rng)
    k, st0, client_id = bundle.open()
    dev = device_mod.device_setup(k, st0, client_id, rng)
    policy = Policy(max_amount=1000, allowed_payees=frozenset({"acme"}))
    transaction = format_transaction(250, "acme")
    with measuring() as counts:
        challenge = server_mod.handle_hello_enrolment(record, rng)
        msg, dev = device_mod.handle_enrol_challenge(dev, challenge, Pin(pin), Pin(pin))
        server_mod.handle_enrol_response(record, parse_enrol_response(msg))
        inner, counter_ct = server_mod.handle_hello_auth(record, transaction, rng)
        _, outcome, dev = device_mod.handle_auth_challenge(
            dev, inner, counter_ct, Pin(pin), policy
        )
        sk = server_mod.verify_auth_response(record, outcome.response)
        if sk is None or sk != outcome.session_key:
            raise RuntimeError("honest cycle failed; instrumentation run is invalid")
        snapshot = counts.snapshot()
    return OpCountReport(raw=snapshot)


def saving_pct(ours: int, theirs: int) -> float:
    return 100.0 * (1.0 - ours / theirs)


def comparison_rows(op_report: OpCountReport | None = None) -> list[dict]:
    if op_report is None:
        op_report = measure_honest_cycle()
    comm = comm_cost_paper_convention()
    return [
        {
            "protocol": "this implementation",
            "sym_ops": op_report.paper_convention_sym_ops,
            "modexp": op_report.modexp,
            "comm_bits": comm.total_bits,
            "source": "measured (convention rollup)",
        },
        {
            "protocol": "WangW18",
            "sym_ops": WANGW18_SYM_OPS,
            "modexp": WANGW18_MODEXP,
            "comm_bits": WANGW18_BITS,
            "source": "reported, not measured",
        },
        {
            "protocol": "JareckiJKSS21",
            "sym_ops": JARECKIJKSS21_SYM_OPS,
            "modexp": JARECKIJKSS21_MODEXP,
            "comm_bits": JARECKIJKSS21_BITS,
            "source": "reported, not measured",
        },
    ]


def comparison_table(op_report: OpCountReport | None = None) -> str:
    rows = comparison_rows(op_report)
    comm = comm_cost_paper_convention()
    out = io.StringIO()
    header = f"{'protocol':<22} {'sym-ops':>7} {'modexp':>6} {'comm bits':>9}  source"
    out.write(header + "\n")
    out.write("-" * len(header) + "\n")
    for row in rows:
        out.write(
            f"{row['protocol']:<22} {row['sym_ops']:>7} {row['modexp']:>6} "
            f"{row['comm_bits']:>9}  {row['source']}\n"
        )
    out.write("\n")
    out.write("itemization (convention bits): ")
    out.write(", ".join(f"{k}={v}" for k, v in comm.itemization().items()))
    out.write(f"; total={comm.total_bits}\n")
    out.write(
        f"savings by direct ratio: {saving_pct(comm.total_bits, WANGW18_BITS):.1f}% "
        f"vs WangW18, {saving_pct(comm.total_bits, JARECKIJKSS21_BITS):.1f}% "
        f"vs JareckiJKSS21\n"
    )
    out.write(
        f"note: the published comparison claims up to "
        f"{PAPER_CLAIMED_MAX_SAVING_PCT:.0f}% lower overhead; the direct ratio "
        f"{comm.total_bits}/{JARECKIJKSS21_BITS} gives "
        f"{saving_pct(comm.total_bits, JARECKIJKSS21_BITS):.1f}% - both figures "
        "are reported, the discrepancy is not resolved here\n"
    )
    return out.getvalue()


def comparison_csv(op_report: OpCountReport | None = None) -> str:
    rows = comparison_rows(op_report)
    lines = ["protocol,sym_ops,modexp,comm_bits,source"]
    for row in rows:
        lines.append(
            f"{row['protocol']},{row['sym_ops']},{row['modexp']},"
            f"{row['comm_bits']},{row['source']}"
        )
    return "\n".join(lines) + "\n"
