"""Command-line front end.

Exit codes: 0 success, 1 verification rejected, 2 usage / IO / malformed
input, 3 cryptographic refusal (bad fixed-part signature, inadmissible
modification, inversion exhausted, dangling sanitize event).
"""

from __future__ import annotations

import argparse
import contextlib
import fcntl
import sys
import time
from pathlib import Path

from . import auditlog, ledger
from .errors import (
    DanglingSanitizeEvent,
    InvalidFixedSignature,
    InversionExhausted,
    MulSanError,
    NotAdmissible,
    PreconditionViolated,
)
from .field import make_rng
from .mqsig import Party, PublicMap, SecretKey, MqKeyPair, decode_key, get_params, PRESETS
from .sss import (
    decode_signatures,
    encode_signatures,
    kgen_sanit,
    kgen_sign,
    sss_judge,
    sss_sanitize,
    sss_sign,
    sss_verify,
)

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_CRYPTO = 0, 1, 2, 3
CRYPTO_ERRORS = (InvalidFixedSignature, NotAdmissible, InversionExhausted, DanglingSanitizeEvent)


class UsageError(MulSanError):
    pass


def _err(msg: str) -> None:
    print(f"mulsan: {msg}", file=sys.stderr)


def _rng(args):
    seed = getattr(args, "seed", None)
    if seed is None:
        return make_rng()
    try:
        value = int(seed, 16)
    except ValueError:
        raise UsageError(f"--seed must be hex, got {seed!r}") from None
    _err("warning: --seed makes output deterministic; use for testing only")
    return make_rng(value)


def _load_public(path: str, party: Party) -> PublicMap:
    key = decode_key(Path(path).read_bytes())
    if not isinstance(key, PublicMap) or key.party is not party:
        raise UsageError(f"{path} is not a {party.name.lower()} public key")
    return key


def _load_secret(path: str, party: Party) -> MqKeyPair:
    key = decode_key(Path(path).read_bytes())
    if not isinstance(key, SecretKey) or key.party is not party:
        raise UsageError(f"{path} is not a {party.name.lower()} secret key")
    return MqKeyPair(key.params, key, key.public_map())


def _load_log(args):
    schema, policy = auditlog.load_config(args.policy)
    entries = auditlog.read_jsonl(args.input, schema)
    return schema, policy, entries


def _load_signed(args, schema, entries):
    sigs = decode_signatures(Path(args.sig).read_bytes())
    if len(sigs) != len(entries):
        raise UsageError(f"{len(entries)} log entries but {len(sigs)} signatures")
    return [auditlog.canonicalize_entry(e, schema) for e in entries], sigs


def _index_list(text: str | None, total: int) -> list[int]:
    if text is None:
        return list(range(total))
    try:
        idx = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad entry list {text!r}") from None
    if any(not 0 <= i < total for i in idx):
        raise UsageError(f"entry index out of range (log has {total} entries)")
    return idx


# --- subcommands ----------------------------------------------------------

def cmd_keygen(args) -> int:
    params = get_params(args.params)
    gen = kgen_sign if args.role == "signer" else kgen_sanit
    pair = gen(params, _rng(args))
    out = Path(args.out)
    out.write_bytes(pair.secret.to_bytes())
    pub = out.with_name(out.name + ".pub")
    pub.write_bytes(pair.public.to_bytes())
    print(f"{args.role} key ({params.name}): secret {out}, public {pub}")
    print(f"public key sha3-256 {ledger.sha3(pair.public.to_bytes()).hex()}")
    return EXIT_OK


def cmd_sign(args) -> int:
    signer = _load_secret(args.key, Party.SIGNER)
    pk_sanit = _load_public(args.sanitizer_pk, Party.SANITIZER)
    schema, policy, entries = _load_log(args)
    ad = auditlog.policy_to_ad(policy, schema)
    rng = _rng(args)
    sigs = [sss_sign(auditlog.canonicalize_entry(e, schema), signer, pk_sanit, ad, rng) for e in entries]
    Path(args.out).write_bytes(encode_signatures(sigs))
    print(f"signed {len(sigs)} entries -> {args.out}")
    return EXIT_OK


def cmd_sanitize(args) -> int:
    sanitizer = _load_secret(args.key, Party.SANITIZER)
    pk_sign = _load_public(args.signer_pk, Party.SIGNER)
    schema, _policy, entries = _load_log(args)
    msgs, sigs = _load_signed(args, schema, entries)
    names = [n.strip() for n in args.redact.split(",") if n.strip()]
    targets = set(_index_list(args.entries, len(entries)))
    rng = _rng(args)
    out_entries, out_sigs = [], []
    for i, (entry, msg, sig) in enumerate(zip(entries, msgs, sigs)):
        if i in targets:
            mod = auditlog.redact(entry, names, schema, args.replacement.encode())
            msg, sig = sss_sanitize(msg, mod, sig, pk_sign, sanitizer, rng)
            entry = auditlog.parse_entry(msg, schema)
        out_entries.append(entry)
        out_sigs.append(sig)
    auditlog.write_jsonl(args.out_log, out_entries)
    Path(args.out_sig).write_bytes(encode_signatures(out_sigs))
    print(f"sanitized {len(targets)} entries -> {args.out_log}, {args.out_sig}")
    return EXIT_OK


def _pair_keys(args):
    return _load_public(args.signer_pk, Party.SIGNER), _load_public(args.sanitizer_pk, Party.SANITIZER)


def cmd_verify(args) -> int:
    pk_sign, pk_sanit = _pair_keys(args)
    schema, _policy, entries = _load_log(args)
    msgs, sigs = _load_signed(args, schema, entries)
    ok = True
    for i, (msg, sig) in enumerate(zip(msgs, sigs)):
        good = sss_verify(msg, sig, pk_sign, pk_sanit)
        ok &= good
        print(f"entry {i}: {'accept' if good else 'reject'}")
    return EXIT_OK if ok else EXIT_REJECT


def cmd_judge(args) -> int:
    pk_sign, pk_sanit = _pair_keys(args)
    schema, _policy, entries = _load_log(args)
    msgs, sigs = _load_signed(args, schema, entries)
    ok = True
    for i, (msg, sig) in enumerate(zip(msgs, sigs)):
        try:
            print(f"entry {i}: {sss_judge(msg, sig, pk_sign, pk_sanit).value}")
        except PreconditionViolated:
            print(f"entry {i}: invalid")
            ok = False
    return EXIT_OK if ok else EXIT_REJECT


@contextlib.contextmanager
def _locked(directory: str):
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"no ledger directory at {d}; run 'ledger init' first")
    with open(d / ".lock", "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield d
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def cmd_ledger_init(args) -> int:
    d = Path(args.dir)
    if d.exists() and any(d.iterdir()):
        raise UsageError(f"{d} already exists and is not empty")
    ledger.Chain().save(d)
    print(f"initialized empty ledger at {d}")
    return EXIT_OK


def cmd_ledger_append(args) -> int:
    pk_sign, pk_sanit = _pair_keys(args)
    schema, _policy, entries = _load_log(args)
    msgs, sigs = _load_signed(args, schema, entries)
    kind = ledger.RecordKind.SIGN if args.kind == "sign" else ledger.RecordKind.SANITIZE
    ts = args.timestamp if args.timestamp is not None else int(time.time())
    with _locked(args.dir) as d:
        chain = ledger.Chain.load(d)
        for i in _index_list(args.entries, len(entries)):
            rec = ledger.LedgerRecord.for_signature(kind, msgs[i], sigs[i], pk_sign, pk_sanit, ts)
            rid = ledger.append_record(chain, rec)
            print(f"entry {i}: record {rid[0]}:{rid[1]}")
        chain.save(d)
    return EXIT_OK


def cmd_ledger_seal(args) -> int:
    ts = args.timestamp if args.timestamp is not None else int(time.time())
    with _locked(args.dir) as d:
        chain = ledger.Chain.load(d)
        block = ledger.seal_block(chain, ts)
        chain.save(d)
    print(f"sealed block {block.index} with {len(block.records)} records")
    print(f"tip {block.hash().hex()}")
    return EXIT_OK


def cmd_ledger_verify(args) -> int:
    with _locked(args.dir) as d:
        try:
            chain = ledger.Chain.load(d)
        except MulSanError as exc:
            print(f"reject: malformed ledger ({exc})")
            return EXIT_REJECT
    verdict = ledger.verify_chain(chain)
    if verdict:
        print(f"accept: {len(chain.blocks)} blocks, tip {chain.tip_hash().hex()}")
        return EXIT_OK
    print(f"reject at block {verdict.index}: {verdict.reason}")
    return EXIT_REJECT


def _parse_ids(text: str) -> list[tuple[int, int]]:
    ids = []
    for item in text.split(","):
        try:
            b, p = item.split(":")
            ids.append((int(b), int(p)))
        except ValueError:
            raise UsageError(f"record ids look like BLOCK:POS, got {item!r}") from None
    return ids


def cmd_ledger_challenge(args) -> int:
    chal = ledger.make_challenge(_parse_ids(args.ids), _rng(args))
    Path(args.out).write_bytes(chal.to_bytes())
    print(f"challenge nonce {chal.nonce.hex()} for {len(chal.ids)} records -> {args.out}")
    return EXIT_OK


def cmd_ledger_prove(args) -> int:
    chal = ledger.Challenge.from_bytes(Path(args.challenge).read_bytes())
    with _locked(args.dir) as d:
        chain = ledger.Chain.load(d)
    proof = ledger.build_proof(chain, chal)
    Path(args.out).write_bytes(proof.to_bytes())
    print(f"proof over {len(proof.items)} records -> {args.out}")
    return EXIT_OK


def cmd_ledger_check(args) -> int:
    chal = ledger.Challenge.from_bytes(Path(args.challenge).read_bytes())
    proof = ledger.AuditProof.from_bytes(Path(args.proof).read_bytes())
    try:
        tip = bytes.fromhex(args.tip)
    except ValueError:
        raise UsageError("--tip must be a hex digest") from None
    verdict = ledger.check_proof(proof, chal, tip)
    print("accept" if verdict else f"reject: {verdict.reason}")
    return EXIT_OK if verdict else EXIT_REJECT


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mulsan", description="Sanitizable MQ signatures for audit logs")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", help="hex rng seed (reproducible tests only)")
        return sp

    def log_args(sp):
        sp.add_argument("--policy", required=True, help="schema/policy JSON config")
        sp.add_argument("--in", dest="input", required=True, help="JSON-lines log")
        return sp

    def key_pair_args(sp):
        sp.add_argument("--signer-pk", required=True)
        sp.add_argument("--sanitizer-pk", required=True)
        return sp

    sp = seeded(sub.add_parser("keygen", help="generate a key pair"))
    sp.add_argument("--role", choices=["signer", "sanitizer"], required=True)
    sp.add_argument("--params", choices=sorted(PRESETS), default="uov-toy")
    sp.add_argument("--out", required=True, help="secret key path; public key goes to <out>.pub")
    sp.set_defaults(func=cmd_keygen)

    sp = seeded(log_args(sub.add_parser("sign", help="sign every entry of a log")))
    sp.add_argument("--key", required=True)
    sp.add_argument("--sanitizer-pk", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sign)

    sp = seeded(log_args(sub.add_parser("sanitize", help="redact fields and re-sign")))
    sp.add_argument("--key", required=True)
    sp.add_argument("--signer-pk", required=True)
    sp.add_argument("--redact", required=True, help="comma-separated field names")
    sp.add_argument("--sig", required=True)
    sp.add_argument("--entries", help="comma-separated entry indices (default: all)")
    sp.add_argument("--replacement", default=auditlog.DEFAULT_REPLACEMENT.decode())
    sp.add_argument("--out-log", required=True)
    sp.add_argument("--out-sig", required=True)
    sp.set_defaults(func=cmd_sanitize)

    for name, func in (("verify", cmd_verify), ("judge", cmd_judge)):
        sp = key_pair_args(log_args(sub.add_parser(name)))
        sp.add_argument("--sig", required=True)
        sp.set_defaults(func=func)

    lp = sub.add_parser("ledger", help="hash-chained audit ledger")
    lsub = lp.add_subparsers(dest="ledger_command", required=True)
    sp = lsub.add_parser("init")
    sp.add_argument("--dir", required=True)
    sp.set_defaults(func=cmd_ledger_init)

    sp = key_pair_args(log_args(lsub.add_parser("append")))
    sp.add_argument("--dir", required=True)
    sp.add_argument("--kind", choices=["sign", "sanitize"], required=True)
    sp.add_argument("--sig", required=True)
    sp.add_argument("--entries")
    sp.add_argument("--timestamp", type=int)
    sp.set_defaults(func=cmd_ledger_append)

    sp = lsub.add_parser("seal")
    sp.add_argument("--dir", required=True)
    sp.add_argument("--timestamp", type=int)
    sp.set_defaults(func=cmd_ledger_seal)

    sp = lsub.add_parser("verify")
    sp.add_argument("--dir", required=True)
    sp.set_defaults(func=cmd_ledger_verify)

    sp = seeded(lsub.add_parser("challenge"))
    sp.add_argument("--ids", required=True, help="BLOCK:POS[,BLOCK:POS...]")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ledger_challenge)

    sp = lsub.add_parser("prove")
    sp.add_argument("--dir", required=True)
    sp.add_argument("--challenge", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ledger_prove)

    sp = lsub.add_parser("check")
    sp.add_argument("--proof", required=True)
    sp.add_argument("--challenge", required=True)
    sp.add_argument("--tip", required=True, help="trusted tip hash, hex")
    sp.set_defaults(func=cmd_ledger_check)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CRYPTO_ERRORS as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_CRYPTO
    except (MulSanError, OSError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
