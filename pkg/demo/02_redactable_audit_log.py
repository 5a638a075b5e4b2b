# %% [markdown]
# # Redacting a signed audit log
#
# The signer marks which fields a designated sanitizer may later rewrite.
# After redaction the entry still verifies, the fixed fields cannot be
# touched, and the judge can tell who produced the current signature.

# %%
import numpy as np

from mulsan import auditlog, get_params, kgen_sanit, kgen_sign, mqsig, sss
from mulsan.h2f import FULL_TAG, HashInput, hash_to_field
from mulsan.errors import NotAdmissible

rng = np.random.default_rng(7)
params = get_params("uov-toy")
signer = kgen_sign(params, rng)
sanitizer = kgen_sanit(params, rng)

schema = auditlog.Schema(("timestamp", "actor", "action", "resource", "detail"))
policy = auditlog.RedactionPolicy({"detail"})
entry = auditlog.AuditEntry.from_mapping(schema, {
    "timestamp": "2026-10-16T09:12:44Z", "actor": "dr.okafor", "action": "read",
    "resource": "/patients/4411", "detail": "HIV status viewed",
})

# %%
msg = auditlog.canonicalize_entry(entry, schema)
ad = auditlog.policy_to_ad(policy, schema)
sig = sss.sss_sign(msg, signer, sanitizer.public, ad, rng)
print(msg.blocks)
print("verify:", sss.sss_verify(msg, sig, signer.public, sanitizer.public))
print("judge:", sss.sss_judge(msg, sig, signer.public, sanitizer.public).value)

# %% [markdown]
# Redacting the detail field is admissible.

# %%
mod = auditlog.redact(entry, ["detail"], schema)
red_msg, red_sig = sss.sss_sanitize(msg, mod, sig, signer.public, sanitizer, rng)
print(auditlog.parse_entry(red_msg, schema).as_dict())
print("verify:", sss.sss_verify(red_msg, red_sig, signer.public, sanitizer.public))
print("judge:", sss.sss_judge(red_msg, red_sig, signer.public, sanitizer.public).value)

# %% [markdown]
# Rewriting the actor is not, and a forged message fails verification even
# if someone re-signs the full message with the sanitizer key.

# %%
try:
    sss.sss_sanitize(msg, auditlog.redact(entry, ["actor"], schema), sig, signer.public, sanitizer, rng)
except NotAdmissible as exc:
    print("refused:", exc)

forged = sss.BlockMessage((msg.blocks[0], b"actor=someone-else") + msg.blocks[2:])
full = HashInput(FULL_TAG, [forged.to_bytes(), sanitizer.public.to_bytes(), signer.public.to_bytes()])
sigma2 = mqsig.mq_sign(sanitizer.secret, hash_to_field(full, params.m), rng)
attempt = sss.SanSignature(sig.sigma1, sigma2, sig.ad)
print("forged entry with a fresh sanitizer sigma2 verifies:",
      sss.sss_verify(forged, attempt, signer.public, sanitizer.public))
