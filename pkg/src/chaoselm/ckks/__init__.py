"""RNS CKKS approximate homomorphic encryption over Z[X]/(X^N + 1)."""

from .ciphertext import Ciphertext
from .encoding import PlaintextPoly, decode, encode, encode_constant
from .evaluator import Evaluator
from .keys import (EvaluationKeys, KeySet, KeySwitchKey, PublicKey, SecretKey, decrypt, encrypt,
                   encrypt_symmetric, keygen)
from .serialize import (FormatError, load_ciphertexts, load_evaluation_keys, load_secret_key,
                        save_ciphertexts, save_evaluation_keys, save_secret_key)
from .params import (PAPER_PARAMS, PROFILES, TEST_PARAMS, CkksContext, CkksError, CkksParams,
                     KeyMismatchError, LevelExhaustedError, MissingKeyError, ParameterError,
                     ScaleError, build_context)

__all__ = [
    "Ciphertext", "PlaintextPoly", "decode", "encode", "encode_constant", "Evaluator",
    "EvaluationKeys", "KeySet", "KeySwitchKey", "PublicKey", "SecretKey", "decrypt", "encrypt",
    "encrypt_symmetric", "keygen", "PAPER_PARAMS", "PROFILES", "TEST_PARAMS", "CkksContext",
    "CkksError", "CkksParams", "KeyMismatchError", "LevelExhaustedError", "MissingKeyError",
    "ParameterError", "ScaleError", "build_context", "FormatError", "load_ciphertexts",
    "load_evaluation_keys", "load_secret_key", "save_ciphertexts", "save_evaluation_keys",
    "save_secret_key",
]
