"""Sanitizable multivariate-quadratic signatures for redactable audit logs."""

from .errors import MulSanError
from .field import make_rng
from .mqsig import PRESETS, MqKeyPair, Party, PublicMap, SecretKey, UOVParams, get_params
from .sss import (
    AdmissibleDescription,
    BlockMessage,
    Modification,
    Origin,
    SanSignature,
    admissible_check,
    fixed_extract,
    kgen_sanit,
    kgen_sign,
    sss_judge,
    sss_sanitize,
    sss_sign,
    sss_verify,
)

__version__ = "0.1.0"
