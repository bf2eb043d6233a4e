"""Privacy-preserving chaotic ELM over CKKS ciphertexts.

Two roles share one context. The key holder encrypts data and parameters,
decrypts the hidden matrix to solve for beta and decrypts final scores. The
evaluator computes hidden units and scores and only ever holds
:class:`EvaluationKeys`.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import elm
from .ckks import (Ciphertext, CkksContext, EvaluationKeys, Evaluator, KeySet, LevelExhaustedError,
                   decode, decrypt, encode, encrypt, encrypt_symmetric)

log = logging.getLogger(__name__)

C0, C1, _, C3 = elm.SIGMOID_COEFFS

# Hidden units land on a scale wider than the global one so the rounding
# of their last rescale shrinks relative to the signal. Bounded by the first
# prime, which must still hold the encoded 0.5.
HIDDEN_EXTRA_BITS = 10
FIRST_PRIME_MARGIN_BITS = 4


def hidden_scale(ctx: CkksContext) -> float:
    q0_bits = ctx.params.coeff_modulus_bits[0]
    bits = min(ctx.params.scale_bits + HIDDEN_EXTRA_BITS, q0_bits - FIRST_PRIME_MARGIN_BITS)
    return float(2 ** max(bits, ctx.params.scale_bits))


@dataclass(frozen=True)
class LevelBudget:
    """Rescales consumed by each stage of one hidden unit and the output."""

    dot: int = 1
    square: int = 1
    cube: int = 1
    scalar_mults: int = 1
    output_mul: int = 1

    @property
    def hidden(self) -> int:
        return self.dot + self.square + self.cube + self.scalar_mults

    @property
    def total(self) -> int:
        return self.hidden + self.output_mul


BUDGET = LevelBudget()


@dataclass(frozen=True, eq=False)
class EncryptedSample:
    ct: Ciphertext
    n_features: int


@dataclass(eq=False)
class EncryptedModelParams:
    enc_weight_rows: list
    enc_biases: list
    n_features: int
    enc_beta: list | None = None

    @property
    def n_hidden(self) -> int:
        return len(self.enc_weight_rows)

    def __post_init__(self):
        if len(self.enc_biases) != len(self.enc_weight_rows):
            raise ValueError("one bias ciphertext per weight row is required")
        if self.enc_beta is not None and len(self.enc_beta) != len(self.enc_weight_rows):
            raise ValueError("one beta ciphertext per hidden node is required")


@dataclass
class PhaseTimer:
    """Wall-clock seconds per named phase, accumulated."""

    seconds: dict = field(default_factory=dict)

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - t0

    @property
    def total(self) -> float:
        return sum(self.seconds.values())


def _require_keyset(keys) -> KeySet:
    if not isinstance(keys, KeySet):
        raise TypeError("this step needs the key holder's KeySet")
    return keys


def _require_eval_keys(keys) -> EvaluationKeys:
    if isinstance(keys, KeySet) or not isinstance(keys, EvaluationKeys):
        raise TypeError("encrypted evaluation accepts EvaluationKeys only")
    return keys


def encrypt_vector(values, ctx: CkksContext, keys, rng, level: int | None = None) -> Ciphertext:
    """Encrypt at the global scale.

    A key holder encrypts under the secret key, which carries one error term
    instead of three. Anyone holding only public keys uses the public key.
    """
    pt = encode(values, ctx.scale, ctx, level)
    if isinstance(keys, KeySet):
        return encrypt_symmetric(pt, keys.secret_key, ctx, rng)
    return encrypt(pt, keys.public_key, ctx, rng)


def _check_fresh(ct: Ciphertext, need: int, what: str):
    if ct.level < need:
        raise LevelExhaustedError(f"{what} is at level {ct.level}; {need} levels are required")


# -- data owner: encryption ------------------------------------------------------

def range_preflight(X, W, b, limit: float = elm.POLY_RANGE) -> np.ndarray:
    """Indices of rows whose pre-activation leaves [-limit, limit] for some node.

    Runs in plaintext on the data owner's side; the polynomial sigmoid is
    only accurate inside this interval and the violation cannot be seen
    homomorphically.
    """
    u = elm.pre_activation(X, W, b)
    return np.flatnonzero(np.any(np.abs(u) > limit, axis=1))


def encrypt_dataset(X, ctx: CkksContext, keys, rng) -> list[EncryptedSample]:
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return []
    X = np.atleast_2d(X)
    if X.shape[1] > ctx.slot_count:
        raise ValueError(f"rows of width {X.shape[1]} exceed {ctx.slot_count} slots")
    return [EncryptedSample(encrypt_vector(row, ctx, keys, rng), X.shape[1]) for row in X]


def encrypt_model_params(W, b, ctx: CkksContext, keys, rng) -> EncryptedModelParams:
    """One ciphertext per weight row; one scalar ciphertext per bias (replicated in all slots)."""
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    if W.shape[0] != b.shape[0]:
        raise ValueError("W rows must equal b length")
    rows = [encrypt_vector(w, ctx, keys, rng) for w in W]
    slots = ctx.slot_count
    biases = [encrypt_vector(np.full(slots, v), ctx, keys, rng) for v in b]
    return EncryptedModelParams(rows, biases, W.shape[1])


def encrypt_beta(beta, ctx: CkksContext, keys, rng) -> list[Ciphertext]:
    beta = np.asarray(beta, dtype=np.float64).ravel()
    return [encrypt_vector(np.full(ctx.slot_count, v), ctx, keys, rng) for v in beta]


# -- evaluator: hidden layer and scores ------------------------------------------

def encrypted_hidden_unit(ev: Evaluator, ex: EncryptedSample, ew: Ciphertext, eb: Ciphertext,
                          n_features: int) -> Ciphertext:
    """poly_sigmoid(w . x + b) in slot 0, at :func:`hidden_scale`.

    Level path: dot (L to L-1), u^2, u^3, the two scalar products landing
    on the global scale, then the constant; four rescales in total.
    """
    _require_eval_keys(ev.keys)
    for ct, what in ((ex.ct, "sample"), (ew, "weight row"), (eb, "bias")):
        _check_fresh(ct, BUDGET.hidden, what)
    u = ev.add_ct(ev.dot_product(ex.ct, ew, n_features), eb)
    u2 = ev.rescale(ev.square(u))
    u3 = ev.rescale(ev.mul_ct(u2, ev.mod_switch_to(u, u2.level)))
    target = hidden_scale(ev.ctx)
    t3 = ev.mul_scalar(u3, C3, target)
    t1 = ev.mul_scalar(ev.mod_switch_to(u, u3.level), C1, target)
    h = ev.add_constant(ev.add_ct(t1, t3), C0)
    if h.level < 0:
        raise LevelExhaustedError("hidden unit ran past the last prime")
    return h


def encrypted_hidden_matrix(samples, params: EncryptedModelParams, ctx: CkksContext,
                            keys: EvaluationKeys, workers: int = 1) -> list[list[Ciphertext]]:
    """Grid of hidden units, rows are samples and columns hidden nodes."""
    ev = Evaluator(ctx, _require_eval_keys(keys))
    n = params.n_features
    cells = [(j, i) for j in range(len(samples)) for i in range(params.n_hidden)]

    def unit(cell):
        j, i = cell
        return encrypted_hidden_unit(ev, samples[j], params.enc_weight_rows[i],
                                     params.enc_biases[i], n)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            flat = list(pool.map(unit, cells))
    else:
        flat = [unit(c) for c in cells]
    m = params.n_hidden
    return [flat[j * m:(j + 1) * m] for j in range(len(samples))]


def encrypted_scores_from_hidden(ev: Evaluator, hidden_row, enc_beta) -> Ciphertext:
    """sum_i h_i * beta_i with a single rescale at the end."""
    acc = None
    for h, beta in zip(hidden_row, enc_beta):
        prod = ev.mul_ct(h, ev.mod_switch_to(beta, h.level) if beta.level > h.level else beta)
        acc = prod if acc is None else ev.add_ct(acc, prod)
    return ev.rescale(acc)


def predict_encrypted(test_samples, params: EncryptedModelParams, ctx: CkksContext,
                      keys: EvaluationKeys, workers: int = 1) -> list[Ciphertext]:
    if params.enc_beta is None:
        raise ValueError("model parameters carry no encrypted beta")
    ev = Evaluator(ctx, _require_eval_keys(keys))
    for ex in test_samples:
        _check_fresh(ex.ct, BUDGET.total, "sample")
    grid = encrypted_hidden_matrix(test_samples, params, ctx, keys, workers)
    return [encrypted_scores_from_hidden(ev, row, params.enc_beta) for row in grid]


# -- key holder: decryption and training -----------------------------------------

def decrypt_slot0(ct: Ciphertext, ctx: CkksContext, keys: KeySet) -> float:
    return float(decode(decrypt(ct, _require_keyset(keys).secret_key, ctx), ctx, 1)[0])


def decrypt_hidden_matrix(grid, ctx: CkksContext, keys: KeySet) -> np.ndarray:
    return np.array([[decrypt_slot0(ct, ctx, keys) for ct in row] for row in grid],
                    dtype=np.float64).reshape(len(grid), -1)


def train_encrypted(samples, targets, params: EncryptedModelParams, ctx: CkksContext,
                    keys: KeySet, rng, timer: PhaseTimer | None = None,
                    workers: int = 1) -> tuple[EncryptedModelParams, np.ndarray]:
    """Encrypted hidden matrix, decrypted by the key holder to solve for beta.

    Returns the parameters with encrypted beta and the plaintext beta.
    """
    keys = _require_keyset(keys)
    timer = timer or PhaseTimer()
    with timer.phase("hidden"):
        grid = encrypted_hidden_matrix(samples, params, ctx, keys.public, workers)
    with timer.phase("solve"):
        H = decrypt_hidden_matrix(grid, ctx, keys)
        beta = elm.solve_beta(H, targets)
    with timer.phase("encrypt"):
        enc_beta = encrypt_beta(beta, ctx, keys, rng)
    trained = EncryptedModelParams(params.enc_weight_rows, params.enc_biases,
                                   params.n_features, enc_beta)
    return trained, beta


def decrypt_scores(enc_scores, ctx: CkksContext, keys: KeySet) -> np.ndarray:
    return np.array([decrypt_slot0(ct, ctx, keys) for ct in enc_scores], dtype=np.float64)


def decrypt_and_classify(enc_scores, ctx: CkksContext, keys: KeySet,
                         mode: str = "linear") -> np.ndarray:
    return elm.classify(decrypt_scores(enc_scores, ctx, keys), mode)
