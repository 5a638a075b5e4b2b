# %% [markdown]
# # Recording signatures on a hash-chained ledger
#
# Sign and sanitize events go into blocks; a receiver that knows only the
# tip hash challenges the ledger and checks the returned proof.

# %%
import numpy as np

from mulsan import get_params, kgen_sanit, kgen_sign, ledger, sss

rng = np.random.default_rng(11)
params = get_params("uov-toy")
signer, sanitizer = kgen_sign(params, rng), kgen_sanit(params, rng)
ad = sss.AdmissibleDescription(3, {2})

chain = ledger.Chain()
msgs = [sss.BlockMessage((b"ts=%d" % i, b"actor=svc", b"detail=job %d" % i)) for i in range(3)]
sigs = [sss.sss_sign(m, signer, sanitizer.public, ad, rng) for m in msgs]
for m, s in zip(msgs, sigs):
    rid = ledger.append_record(chain, ledger.LedgerRecord.for_signature(
        ledger.RecordKind.SIGN, m, s, signer.public, sanitizer.public, 1_790_000_000))
    print("queued", rid)
genesis = ledger.seal_block(chain, 1_790_000_001)

# %% [markdown]
# Later the sanitizer redacts entry 1 and the event is recorded.

# %%
red_msg, red_sig = sss.sss_sanitize(msgs[1], sss.Modification({2: b"detail=[REDACTED]"}), sigs[1],
                                    signer.public, sanitizer, rng)
ledger.append_record(chain, ledger.LedgerRecord.for_signature(
    ledger.RecordKind.SANITIZE, red_msg, red_sig, signer.public, sanitizer.public, 1_790_003_600))
ledger.seal_block(chain, 1_790_003_601)
print("chain valid:", bool(ledger.verify_chain(chain)))
for rid, rec in ledger.history(chain, sigs[1].sigma1_bytes()):
    print(rid, rec.kind.name, rec.message_digest.hex()[:16])

# %% [markdown]
# The receiver's challenge and the ledger's proof.

# %%
tip = chain.tip_hash()
challenge = ledger.make_challenge([(0, 1), (1, 0)], rng)
proof = ledger.build_proof(chain, challenge)
print("proof accepted:", bool(ledger.check_proof(proof, challenge, tip)))
replayed = ledger.make_challenge(challenge.ids, rng)
print("replayed against a new nonce:", ledger.check_proof(proof, replayed, tip).reason)

# %% [markdown]
# Tampering with a sealed record is caught.

# %%
files = chain.to_files()
raw = bytearray(files["block_0.bin"])
raw[90] ^= 0x01  # inside the first record's message digest
try:
    verdict = ledger.verify_chain(ledger.Chain.from_files({**files, "block_0.bin": bytes(raw)}))
    print(verdict)
except ledger.FormatError as exc:
    print("unparseable:", exc)
