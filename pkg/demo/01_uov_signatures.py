# %% [markdown]
# # Oil-and-vinegar signatures over GF(16)
#
# A walk through the vector-level signature underneath the sanitizable
# scheme: field arithmetic, key generation, the inversion chain used to
# sign, and the public-map evaluation used to verify.

# %%
import numpy as np

from mulsan import field, mqsig

rng = np.random.default_rng(2026)

# %% [markdown]
# Field elements are nibbles.  Addition is XOR; multiplication reduces
# modulo x^4 + x + 1, so x * (x^3 + 1) = 1.

# %%
print("0x2 * 0x9 =", hex(field.fe_mul(0x2, 0x9)))
print("inverse of 0x7 =", hex(field.fe_inv(0x7)))

# %% [markdown]
# The toy preset has 24 variables and 8 equations: 16 vinegar, 8 oil.

# %%
params = mqsig.get_params("uov-toy")
pair = mqsig.mq_keygen(params, rng)
print("public coefficients:", pair.public.coefficients().size,
      "=", mqsig.public_element_count(params))
print("central map coefficients:", mqsig.central_element_count(params))

# %% [markdown]
# The public map equals the secret factors applied in turn.

# %%
x = field.random_elements(rng, params.n)
sk = pair.secret
print(pair.public(x))
print(sk.outer(sk.central(sk.inner(x))))

# %% [markdown]
# Signing undoes S, then solves the central map by guessing vinegar values
# and solving the oil system, then undoes T.  Usually one guess suffices.

# %%
attempts = [mqsig.invert_with_attempts(sk.central, field.random_elements(rng, params.m), rng, 256)[1]
            for _ in range(500)]
print("mean vinegar draws per inversion:", np.mean(attempts))

y = field.random_elements(rng, params.m)
sig = mqsig.mq_sign(sk, y, rng)
print("signature:", sig)
print("verifies:", mqsig.mq_verify(pair.public, sig, y))
sig[0] ^= 1
print("after one flipped nibble:", mqsig.mq_verify(pair.public, sig, y))

# %% [markdown]
# At the 128-bit preset (n=160, m=64) the public key is 834,624 elements.

# %%
big = mqsig.get_params("uov-128")
print("uov-128 public key elements:", mqsig.public_element_count(big))
print("nominal secret-key count n^2+m^2+C:", mqsig.nominal_secret_element_count(big))
print("stored secret-key elements (with offsets):", mqsig.secret_element_count(big))
