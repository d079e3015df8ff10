"""Command-line front end.

Subcommands: provision, enroll, auth, attack, scenario, bench, unlock,
inspect, and the server-role helper that backs --split-roles.  All
interactive flows read piped stdin when no TTY is present, so every flow
is scriptable.  Exit codes: 0 expected outcome, 1 protocol failure,
2 usage error.  The FS2FA_SEED environment variable overrides the
configured seed.
"""

from __future__ import annotations

import argparse
import getpass
import hashlib
import os
import subprocess
import sys
import time
from dataclasses import dataclass

from . import attacks, baselines, costbench, device as device_mod, harness, \
    scenarios, server as server_mod
from .codec import (
    MsgType,
    Phase,
    build_auth_challenge,
    build_enrol_challenge,
    build_hello,
    parse_auth_challenge,
    parse_auth_response,
    parse_enrol_challenge,
    parse_enrol_response,
    qr_decode,
    qr_encode,
)
from .crypto import SeededRng, SystemRng
from .device import Pin, load_device_state, save_device_state
from .errors import (
    LockedOut,
    PinEntryMismatch,
    PolicyRejected,
    ProtocolError,
)
from .policy import format_transaction, parse_transaction
from .server import RecordStore, unlock_record

EXIT_OK = 0
EXIT_PROTOCOL = 1
EXIT_USAGE = 2


@dataclass
class CliConfig:
    device_state_path: str = "device.state"
    server_store_path: str = "server.store"
    pin_length: int = 4
    verifier_truncation: int | None = None
    lockout_threshold: int | None = 5
    seed: int | None = None

    def rng(self, salt: str = ""):
        if self.seed is None:
            return SystemRng()
        return SeededRng(f"cli:{self.seed}:{salt}")


def _parse_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _load_config(args) -> CliConfig:
    cfg = CliConfig()
    if args.config:
        raw = _parse_config_file(args.config)
        if "device_state_path" in raw:
            cfg.device_state_path = raw["device_state_path"]
        if "server_store_path" in raw:
            cfg.server_store_path = raw["server_store_path"]
        if "pin_length" in raw:
            cfg.pin_length = int(raw["pin_length"])
        if "verifier_truncation" in raw:
            value = raw["verifier_truncation"]
            cfg.verifier_truncation = None if value in ("", "none") else int(value)
        if "lockout_threshold" in raw:
            value = raw["lockout_threshold"]
            cfg.lockout_threshold = None if value in ("", "none") else int(value)
        if "seed" in raw and raw["seed"] != "":
            cfg.seed = int(raw["seed"])
    if os.environ.get("FS2FA_SEED"):
        cfg.seed = int(os.environ["FS2FA_SEED"])
    if args.device_state:
        cfg.device_state_path = args.device_state
    if args.server_store:
        cfg.server_store_path = args.server_store
    if args.pin_length is not None:
        cfg.pin_length = args.pin_length
    if args.truncation is not None:
        cfg.verifier_truncation = args.truncation
    if args.lockout_threshold is not None:
        cfg.lockout_threshold = args.lockout_threshold
    if args.seed is not None:
        cfg.seed = args.seed
    if not 4 <= cfg.pin_length <= 12:
        raise ValueError("pin_length must be between 4 and 12")
    return cfg


def _read_line(prompt: str) -> str:
    if sys.stdin.isatty():
        return input(prompt)
    print(prompt, end="", flush=True)
    line = sys.stdin.readline()
    if not line:
        raise EOFError("no input available")
    print()
    return line.rstrip("\n")


def _read_pin(prompt: str, expected_len: int) -> str:
    if sys.stdin.isatty():
        digits = getpass.getpass(prompt)
    else:
        digits = _read_line(prompt)
    digits = digits.strip()
    if len(digits) != expected_len or not digits.isdigit():
        raise ValueError(f"PIN must be exactly {expected_len} digits")
    return digits


class PromptApproval:
    """Interactive stand-in for the policy check: display the transaction
    and let the client approve or reject it."""

    def matches(self, t: bytes) -> bool:
        try:
            amount, payee = parse_transaction(t)
            print(f"transaction: pay {amount} to {payee}")
        except ValueError:
            print(f"transaction (unparsed): {t!r}")
            return False
        answer = _read_line("approve this transaction? [y/n] ").strip().lower()
        return answer in ("y", "yes")


def _show_qr(direction: str, msg) -> None:
    print(f"QR {direction}: {qr_encode(msg)}")


def _flip_bit(raw: bytes, bit: int = 7) -> bytes:
    out = bytearray(raw)
    out[len(out) // 2] ^= 1 << bit
    return bytes(out)


def _fingerprint(secret: bytes) -> str:
    return hashlib.sha256(secret).hexdigest()[:16]


# --- commands ---------------------------------------------------------------

def cmd_provision(cfg: CliConfig, args) -> int:
    for path in (cfg.device_state_path, cfg.server_store_path):
        if os.path.exists(path) and not args.force:
            print(f"error: {path} exists (use --force to overwrite)", file=sys.stderr)
            return EXIT_USAGE
    if args.force:
        for path in (cfg.device_state_path, cfg.server_store_path,
                     cfg.server_store_path + ".wal"):
            if os.path.exists(path):
                os.remove(path)
    rng = cfg.rng("provision")
    record, bundle = server_mod.server_setup(rng)
    record.lockout_threshold = cfg.lockout_threshold
    store = RecordStore(cfg.server_store_path)
    store.put(record)
    k, st0, client_id = bundle.open()
    device = device_mod.device_setup(k, st0, client_id, rng)
    save_device_state(device, cfg.device_state_path)
    print(f"provisioned client {client_id.hex()}")
    print(f"device state: {cfg.device_state_path}")
    print(f"server store: {cfg.server_store_path}")
    return EXIT_OK


def _load_pair(cfg: CliConfig):
    device = load_device_state(cfg.device_state_path)
    store = RecordStore(cfg.server_store_path)
    record = store.get(device.client_id)
    return device, store, record


def _pin_provider(cfg: CliConfig, prompt: str):
    def provider() -> Pin:
        return Pin(_read_pin(prompt, cfg.pin_length))

    return provider


def cmd_enroll(cfg: CliConfig, args) -> int:
    if args.split_roles:
        return _split_roles_flow(cfg, args, Phase.ENROLMENT)
    try:
        device, store, record = _load_pair(cfg)
    except (FileNotFoundError, KeyError):
        print("error: not provisioned (run 'fs2fa provision')", file=sys.stderr)
        return EXIT_USAGE
    rng = cfg.rng("enroll")
    stale_replay = None
    try:
        hello = build_hello(device.client_id, Phase.ENROLMENT)
        _show_qr("client->server", hello)
        if args.channel_tamper == "stale":
            # capture one challenge, then enrol against a newer one; the
            # replayed capture must be rejected as stale
            stale_replay = server_mod.handle_hello_enrolment(record, rng)
            store.put(record)
        challenge = server_mod.handle_hello_enrolment(record, rng)
        store.put(record)
        envelope = build_enrol_challenge(device.client_id, challenge)
        if args.channel_tamper == "bitflip":
            envelope = type(envelope)(
                envelope.msg_type, envelope.client_id, _flip_bit(envelope.payload)
            )
        _show_qr("server->client", envelope)
        ct_pair = parse_enrol_challenge(envelope)
        provider = _pin_provider(cfg, "PIN: ")
        confirm = _pin_provider(cfg, "PIN (again): ")
        while True:
            try:
                response_msg, device = device_mod.handle_enrol_challenge(
                    device, ct_pair, provider, confirm,
                    truncation=cfg.verifier_truncation,
                )
                break
            except PinEntryMismatch:
                print("the two PIN entries differ; try again")
        _show_qr("client->server", response_msg)
        server_mod.handle_enrol_response(record, parse_enrol_response(response_msg))
        store.put(record)
        save_device_state(device, cfg.device_state_path)
        print("enrolled: verifier stored on server")
        if stale_replay is not None:
            print("replaying the earlier captured challenge ...")
            replay_msg = build_enrol_challenge(device.client_id, stale_replay)
            _show_qr("server->client (replayed)", replay_msg)
            device_mod.handle_enrol_challenge(
                device, parse_enrol_challenge(replay_msg), provider, confirm,
                truncation=cfg.verifier_truncation,
            )
            print("error: stale challenge was accepted", file=sys.stderr)
            return EXIT_PROTOCOL
        return EXIT_OK
    except ProtocolError as exc:
        print(f"enrolment aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        store.put(record)
        return EXIT_PROTOCOL


def cmd_auth(cfg: CliConfig, args) -> int:
    if args.split_roles:
        return _split_roles_flow(cfg, args, Phase.AUTHENTICATION)
    try:
        device, store, record = _load_pair(cfg)
    except (FileNotFoundError, KeyError):
        print("error: not provisioned (run 'fs2fa provision')", file=sys.stderr)
        return EXIT_USAGE
    rng = cfg.rng(f"auth:{record.ct}")
    transaction = format_transaction(args.amount, args.payee)
    try:
        hello = build_hello(device.client_id, Phase.AUTHENTICATION)
        _show_qr("client->server", hello)
        inner, counter_ct = server_mod.handle_hello_auth(record, transaction, rng)
        store.put(record)
        envelope = build_auth_challenge(device.client_id, inner, counter_ct)
        _show_qr("server->client", envelope)
        inner, counter_ct = parse_auth_challenge(envelope)
        response_msg, outcome, device = device_mod.handle_auth_challenge(
            device,
            inner,
            counter_ct,
            _pin_provider(cfg, "PIN: "),
            PromptApproval(),
            truncation=cfg.verifier_truncation,
        )
        save_device_state(device, cfg.device_state_path)
        _show_qr("client->server", response_msg)
        session_key = server_mod.verify_auth_response(
            record, parse_auth_response(response_msg)
        )
        store.put(record)
        if session_key is None:
            print(
                "authentication rejected (wrong PIN or tampered message)",
                file=sys.stderr,
            )
            return EXIT_PROTOCOL
        print("authentication accepted")
        if args.debug:
            print(f"device session-key fingerprint: {_fingerprint(outcome.session_key)}")
            print(f"server session-key fingerprint: {_fingerprint(session_key)}")
        return EXIT_OK
    except PolicyRejected:
        print("aborted: transaction rejected before any PIN entry", file=sys.stderr)
        store.put(record)
        return EXIT_PROTOCOL
    except LockedOut:
        print(
            "locked out: too many failed responses; run 'fs2fa unlock'",
            file=sys.stderr,
        )
        store.put(record)
        return EXIT_PROTOCOL
    except ProtocolError as exc:
        print(f"authentication aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        store.put(record)
        return EXIT_PROTOCOL


def cmd_unlock(cfg: CliConfig, args) -> int:
    try:
        device, store, record = _load_pair(cfg)
    except (FileNotFoundError, KeyError):
        print("error: not provisioned", file=sys.stderr)
        return EXIT_USAGE
    unlock_record(record)
    store.put(record)
    print(f"lockout cleared for client {record.client_id.hex()}")
    return EXIT_OK


def cmd_inspect(cfg: CliConfig, args) -> int:
    try:
        device, store, record = _load_pair(cfg)
    except (FileNotFoundError, KeyError):
        print("error: not provisioned", file=sys.stderr)
        return EXIT_USAGE
    print(f"client id:        {device.client_id.hex()}")
    print(f"device counter:   {device.ct} (generator epoch {device.st.epoch})")
    print(f"server counter:   {record.ct} (generator epoch {record.st.epoch})")
    print(f"verifier stored:  {record.verifier is not None}")
    print(f"lockout:          locked={record.lockout.locked} "
          f"failures={record.lockout.failures} threshold={record.lockout_threshold}")
    return EXIT_OK


def cmd_attack(cfg: CliConfig, args) -> int:
    seed = cfg.seed if cfg.seed is not None else 0
    if args.name == "s2-bruteforce":
        rng = SeededRng(f"attack-s2:{seed}")
        pin_digits = str(int.from_bytes(rng.random_bytes(4), "big") % 10**4).zfill(4)
        state = baselines.s2_setup(rng, Pin(pin_digits))
        nonce = baselines.s1_challenge(rng)
        t = format_transaction(99, "acme")
        response = baselines.s2_respond(
            state.client.k, nonce, t, baselines.s2_enrol(state.client.sa, Pin(pin_digits))
        )
        report = attacks.strawman2_offline_attack(
            state.client.k, state.client.sa, nonce, t, response
        )
        print(f"tried {report.tried} candidate PINs against the recorded exchange")
        if report.unique == pin_digits:
            print("unique PIN recovered: ****  (matches the enrolled PIN)")
            return EXIT_OK
        print("attack failed to isolate the PIN", file=sys.stderr)
        return EXIT_PROTOCOL
    if args.name == "main-bruteforce":
        rng, ci, sj, _ = scenarios.setup_session(seed)
        transcript = harness.execute(ci, sj)
        dump = harness.corrupt(ci, 2)
        report = attacks.main_offline_attack(dump.raw, transcript)
        for note in report.notes:
            print(f"note: {note}")
        print(f"{len(report.candidates)} of {report.tried} candidates remain")
        return EXIT_OK if len(report.candidates) == report.tried else EXIT_PROTOCOL
    if args.name == "replay":
        rng, ci, sj, transaction = scenarios.setup_session(seed)
        transcript = harness.execute(ci, sj)
        captured = transcript.messages()[-1].payload
        accepted = attacks.replay_auth_response(sj.record, transaction, rng, captured)
        if accepted:
            print("replayed response was accepted", file=sys.stderr)
            return EXIT_PROTOCOL
        print("replayed response rejected: nonce and evolved key have moved on")
        return EXIT_OK
    if args.name == "preplay-s1":
        rng = SeededRng(f"attack-s1:{seed}")
        state = baselines.s1_setup(rng)
        nonce = baselines.s1_challenge(rng)
        honest = baselines.s1_respond(state.k, nonce)
        fresh = baselines.s1_challenge(rng)
        replay_ok = baselines.s1_verify(state.k, fresh, honest)
        forged_ok = attacks.strawman1_stolen_key_forgery(state, rng)
        print(f"replaying an old response against a fresh nonce: "
              f"{'accepted' if replay_ok else 'rejected'}")
        print(f"forging with the stolen key: {'accepted' if forged_ok else 'rejected'}")
        if forged_ok and not replay_ok:
            print("stolen device answers any future challenge (the strawman-I flaw)")
            return EXIT_OK
        return EXIT_PROTOCOL
    print(f"unknown attack {args.name}", file=sys.stderr)
    return EXIT_USAGE


def cmd_scenario(cfg: CliConfig, args) -> int:
    seed = cfg.seed if cfg.seed is not None else 0
    report = scenarios.run_scenario(args.number, seed)
    for line in report.render_lines():
        print(line)
    return EXIT_OK if not report.adversary_succeeded else EXIT_PROTOCOL


def cmd_bench(cfg: CliConfig, args) -> int:
    seed = cfg.seed if cfg.seed is not None else 0
    op_report = costbench.measure_honest_cycle(seed)
    print(costbench.comparison_table(op_report))
    comm = costbench.comm_cost_paper_convention()
    print(f"convention total: {comm.total_bits} bits")
    print(
        f"op counts: AE={op_report.ae_calls} "
        f"paper-convention sym-ops={op_report.paper_convention_sym_ops} "
        f"modexp={op_report.modexp}"
    )
    print(
        f"raw primitive calls: prf={op_report.raw.prf_total} "
        f"(direct {op_report.raw.prf_direct}), generator steps="
        f"{op_report.raw.fsprg_next}, update calls={op_report.raw.update}"
    )
    rng, ci, sj, _ = scenarios.setup_session(seed)
    transcript = harness.execute(ci, sj)
    actual = costbench.comm_cost_actual(transcript)
    print("actual wire bytes per message (convention bits alongside):")
    for item in actual.items:
        print(
            f"  {item['phase']:<14} {item['party']:<6} {item['label']:<32} "
            f"{item['bytes']:>4} B = {item['bits']:>5} bits "
            f"(convention {item['convention_bits']})"
        )
    print(f"actual total: {actual.total_bytes} bytes = {actual.total_bits} bits")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(costbench.comparison_csv(op_report))
        print(f"comparison table written to {args.csv}")
    return EXIT_OK


# --- split-roles: device and server as separate processes over files --------

class FileChannel:
    """Line-oriented message files standing in for the copy-pasted QR text."""

    def __init__(self, directory: str, inbox: str, outbox: str):
        self.inbox = os.path.join(directory, inbox)
        self.outbox = os.path.join(directory, outbox)
        self._offset = 0

    def send(self, line: str) -> None:
        with open(self.outbox, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def recv(self, timeout: float = 15.0) -> str:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if os.path.exists(self.inbox):
                with open(self.inbox, "r", encoding="utf-8") as fh:
                    fh.seek(self._offset)
                    line = fh.readline()
                    if line.endswith("\n"):
                        self._offset = fh.tell()
                        return line.rstrip("\n")
            time.sleep(0.02)
        raise TimeoutError(f"no message arrived in {self.inbox}")


def _split_roles_flow(cfg: CliConfig, args, phase: Phase) -> int:
    channel_dir = args.channel_dir or "."
    os.makedirs(channel_dir, exist_ok=True)
    for name in ("c2s.qr", "s2c.qr"):
        path = os.path.join(channel_dir, name)
        if os.path.exists(path):
            os.remove(path)
    cmd = [
        sys.executable, "-m", "fs2fa",
        "--server-store", cfg.server_store_path,
        "server-role",
        "--phase", phase.value,
        "--channel-dir", channel_dir,
    ]
    if phase is Phase.AUTHENTICATION:
        cmd += ["--amount", str(args.amount), "--payee", args.payee]
    if cfg.lockout_threshold is not None:
        pass  # the stored record already carries the threshold
    child = subprocess.Popen(cmd)
    try:
        device = load_device_state(cfg.device_state_path)
        chan = FileChannel(channel_dir, inbox="s2c.qr", outbox="c2s.qr")
        hello = build_hello(device.client_id, phase)
        chan.send(qr_encode(hello))
        print(f"QR client->server: {qr_encode(hello)}")
        reply = qr_decode(chan.recv())
        print(f"QR server->client: {qr_encode(reply)}")
        if phase is Phase.ENROLMENT:
            provider = _pin_provider(cfg, "PIN: ")
            confirm = _pin_provider(cfg, "PIN (again): ")
            response_msg, device = device_mod.handle_enrol_challenge(
                device, parse_enrol_challenge(reply), provider, confirm,
                truncation=cfg.verifier_truncation,
            )
        else:
            inner, counter_ct = parse_auth_challenge(reply)
            response_msg, outcome, device = device_mod.handle_auth_challenge(
                device, inner, counter_ct, _pin_provider(cfg, "PIN: "),
                PromptApproval(), truncation=cfg.verifier_truncation,
            )
        chan.send(qr_encode(response_msg))
        print(f"QR client->server: {qr_encode(response_msg)}")
        status = chan.recv()
        print(f"server: {status}")
        save_device_state(device, cfg.device_state_path)
        return EXIT_OK if status.startswith("status:ok") else EXIT_PROTOCOL
    except ProtocolError as exc:
        print(f"aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    finally:
        try:
            child.wait(timeout=15)
        except subprocess.TimeoutExpired:
            child.kill()


def cmd_server_role(cfg: CliConfig, args) -> int:
    store = RecordStore(cfg.server_store_path)
    chan = FileChannel(args.channel_dir, inbox="c2s.qr", outbox="s2c.qr")
    rng = cfg.rng("server-role")
    try:
        hello = qr_decode(chan.recv())
        record = store.get(hello.client_id)
        if args.phase == Phase.ENROLMENT.value:
            if hello.msg_type is not MsgType.HELLO_ENROL:
                chan.send("status:error:expected enrolment hello")
                return EXIT_PROTOCOL
            challenge = server_mod.handle_hello_enrolment(record, rng)
            store.put(record)
            chan.send(qr_encode(build_enrol_challenge(record.client_id, challenge)))
            response = qr_decode(chan.recv())
            server_mod.handle_enrol_response(record, parse_enrol_response(response))
            store.put(record)
            chan.send("status:ok:enrolled")
            return EXIT_OK
        if hello.msg_type is not MsgType.HELLO_AUTH:
            chan.send("status:error:expected authentication hello")
            return EXIT_PROTOCOL
        transaction = format_transaction(args.amount, args.payee)
        inner, counter_ct = server_mod.handle_hello_auth(record, transaction, rng)
        store.put(record)
        chan.send(qr_encode(build_auth_challenge(record.client_id, inner, counter_ct)))
        response = qr_decode(chan.recv())
        session_key = server_mod.verify_auth_response(
            record, parse_auth_response(response)
        )
        store.put(record)
        if session_key is None:
            chan.send("status:rejected")
            return EXIT_PROTOCOL
        chan.send(f"status:ok:accepted:{_fingerprint(session_key)}")
        return EXIT_OK
    except (ProtocolError, TimeoutError) as exc:
        chan.send(f"status:error:{type(exc).__name__}")
        return EXIT_PROTOCOL


# --- argument parsing --------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fs2fa",
        description="Forward-secure two-factor authentication demo and bench.",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--device-state", help="device state file path")
    parser.add_argument("--server-store", help="server record store path")
    parser.add_argument("--pin-length", type=int, help="PIN length (4..12)")
    parser.add_argument("--truncation", type=int,
                        help="verifier truncation T in bytes (4..32)")
    parser.add_argument("--lockout-threshold", type=int,
                        help="failed responses before lockout")
    parser.add_argument("--seed", type=int, help="deterministic seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("provision", help="create device state and server record")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_provision)

    p = sub.add_parser("enroll", help="set or change the PIN")
    p.add_argument("--channel-tamper", choices=["stale", "bitflip"])
    p.add_argument("--split-roles", action="store_true",
                   help="run the server as a separate process over files")
    p.add_argument("--channel-dir", help="directory for split-roles message files")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("auth", help="authenticate one transaction")
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--payee", required=True)
    p.add_argument("--debug", action="store_true",
                   help="print both session-key fingerprints")
    p.add_argument("--split-roles", action="store_true")
    p.add_argument("--channel-dir")
    p.set_defaults(func=cmd_auth)

    p = sub.add_parser("attack", help="run an attack demonstration")
    p.add_argument("name", choices=["s2-bruteforce", "main-bruteforce",
                                    "replay", "preplay-s1"])
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("scenario", help="run a threat scenario")
    p.add_argument("number", choices=["1", "2", "3", "4", "5"])
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("bench", help="communication and computation accounting")
    p.add_argument("--csv", help="write the comparison table as CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("unlock", help="admin reset of the lockout")
    p.set_defaults(func=cmd_unlock)

    p = sub.add_parser("inspect", help="show device and server counters")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("server-role", help=argparse.SUPPRESS)
    p.add_argument("--phase", required=True,
                   choices=[Phase.ENROLMENT.value, Phase.AUTHENTICATION.value])
    p.add_argument("--channel-dir", required=True)
    p.add_argument("--amount", type=int, default=0)
    p.add_argument("--payee", default="")
    p.set_defaults(func=cmd_server_role)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(cfg, args)
    except EOFError:
        print("error: ran out of input", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
