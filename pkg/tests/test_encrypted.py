import inspect

import numpy as np
import pytest

from chaoselm import elm
from chaoselm import encrypted as E
from chaoselm.chaos import generate_chaotic_params
from chaoselm.ckks import Evaluator, KeySet, LevelExhaustedError
from chaoselm.ckks.keys import SecretKey


@pytest.fixture(scope="module")
def ctx(test_ctx):
    return test_ctx


@pytest.fixture(scope="module")
def keys(test_keys):
    return test_keys


@pytest.fixture(scope="module")
def ev(ctx, keys):
    return Evaluator(ctx, keys.public)


def unit(ev, ctx, keys, rng, x, w, b):
    ex = E.encrypt_dataset(np.atleast_2d(x), ctx, keys, rng)[0]
    params = E.encrypt_model_params(np.atleast_2d(w), [b], ctx, keys, rng)
    return E.encrypted_hidden_unit(ev, ex, params.enc_weight_rows[0], params.enc_biases[0], len(x))


def well_conditioned(n, seed=0):
    """Seed search for a square poly-sigmoid hidden matrix with cond < 50."""
    rng = np.random.default_rng(seed)
    while True:
        X = rng.normal(size=(n, n))
        W, b = rng.uniform(-1, 1, size=(n, n)), rng.uniform(-1, 1, size=n)
        H = elm.hidden_matrix(X, W, b, "poly_sigmoid")
        if np.abs(elm.pre_activation(X, W, b)).max() <= 4 and np.linalg.cond(H) < 50:
            return X, W, b


class TestEncryptDataset:
    def test_roundtrip(self, ctx, keys, rng):
        X = np.array([[0.5, -1.5], [2.0, 0.25]])
        samples = E.encrypt_dataset(X, ctx, keys, rng)
        assert len(samples) == 2 and samples[0].n_features == 2
        for s, row in zip(samples, X):
            got = E.decode(E.decrypt(s.ct, keys.secret_key, ctx), ctx, 2)
            assert np.max(np.abs(got - row)) < 2 ** -10

    def test_empty(self, ctx, keys, rng):
        assert E.encrypt_dataset(np.empty((0, 3)), ctx, keys, rng) == []

    def test_randomized(self, ctx, keys, rng):
        a, b = E.encrypt_dataset(np.ones((2, 3)), ctx, keys, rng)
        assert not np.array_equal(a.ct.parts[1], b.ct.parts[1])

    def test_too_wide(self, ctx, keys, rng):
        with pytest.raises(ValueError, match="slots"):
            E.encrypt_dataset(np.ones((1, ctx.slot_count + 1)), ctx, keys, rng)

    def test_public_key_encryption_for_evaluator(self, ctx, keys, rng):
        ct = E.encrypt_vector([1.0], ctx, keys.public, rng)
        assert abs(E.decrypt_slot0(ct, ctx, keys) - 1.0) < 2 ** -3


class TestHiddenUnit:
    def test_zero_input(self, ev, ctx, keys, rng):
        h = unit(ev, ctx, keys, rng, [0.0, 0.0, 0.0], [0.3, 0.6, 0.9], 0.0)
        assert abs(E.decrypt_slot0(h, ctx, keys) - 0.5) < 2 ** -3

    def test_one(self, ev, ctx, keys, rng):
        h = unit(ev, ctx, keys, rng, [1.0, 0.0], [1.0, 0.0], 0.0)
        assert abs(E.decrypt_slot0(h, ctx, keys) - 0.693) < 2 ** -3
        assert abs(E.decrypt_slot0(h, ctx, keys) - 0.693) < 1e-3

    def test_level_and_scale(self, ev, ctx, keys, rng):
        h = unit(ev, ctx, keys, rng, [0.2, 0.1], [0.5, 0.5], 0.1)
        assert h.level == ctx.max_level - E.BUDGET.hidden
        assert h.scale == E.hidden_scale(ctx)
        assert E.BUDGET.total <= ctx.max_level

    def test_random_rows(self, ev, ctx, keys, rng):
        for _ in range(5):
            x = rng.normal(size=8)
            W, b = generate_chaotic_params(8, 1, seed=int(rng.integers(1 << 30)))
            want = float(elm.hidden_matrix(x[None], W, b, "poly_sigmoid")[0, 0])
            if abs(elm.pre_activation(x[None], W, b)[0, 0]) > 5:
                continue
            got = E.decrypt_slot0(unit(ev, ctx, keys, rng, x, W[0], b[0]), ctx, keys)
            assert abs(got - want) < 2 ** -3
            assert abs(got - want) < 1e-2

    def test_stale_input(self, ev, ctx, keys, rng):
        ex = E.encrypt_dataset(np.ones((1, 2)), ctx, keys, rng)[0]
        p = E.encrypt_model_params(np.ones((1, 2)), [0.0], ctx, keys, rng)
        low = E.EncryptedSample(ev.mod_switch_to(ex.ct, 1), 2)
        with pytest.raises(LevelExhaustedError):
            E.encrypted_hidden_unit(ev, low, p.enc_weight_rows[0], p.enc_biases[0], 2)


class TestHiddenMatrix:
    def test_shape_and_zero(self, ctx, keys, rng):
        samples = E.encrypt_dataset(np.zeros((3, 4)), ctx, keys, rng)
        W, b = generate_chaotic_params(4, 2, seed=0)
        params = E.encrypt_model_params(W, np.zeros(2), ctx, keys, rng)
        grid = E.encrypted_hidden_matrix(samples, params, ctx, keys.public)
        assert len(grid) == 3 and all(len(r) == 2 for r in grid)
        H = E.decrypt_hidden_matrix(grid, ctx, keys)
        assert np.max(np.abs(H - 0.5)) < 2 ** -3

    def test_matches_plaintext_and_workers(self, ctx, keys, rng):
        X = rng.normal(size=(4, 3))
        W, b = generate_chaotic_params(3, 3, seed=9)
        samples = E.encrypt_dataset(X, ctx, keys, rng)
        params = E.encrypt_model_params(W, b, ctx, keys, rng)
        g1 = E.encrypted_hidden_matrix(samples, params, ctx, keys.public, workers=1)
        g2 = E.encrypted_hidden_matrix(samples, params, ctx, keys.public, workers=2)
        assert all(a.same_as(c) for r1, r2 in zip(g1, g2) for a, c in zip(r1, r2))
        H = E.decrypt_hidden_matrix(g1, ctx, keys)
        assert np.max(np.abs(H - elm.hidden_matrix(X, W, b, "poly_sigmoid"))) < 2 ** -3

    def test_range_preflight(self):
        X = np.array([[0.1, 0.1], [10.0, 10.0]])
        W, b = np.ones((2, 2)), np.zeros(2)
        assert E.range_preflight(X, W, b).tolist() == [1]


class TestTrainPredict:
    def test_toy_reproduces_targets(self, ctx, keys, rng):
        X, W, b = well_conditioned(4)
        T = np.array([1.0, 0.0, 0.0, 1.0])
        samples = E.encrypt_dataset(X, ctx, keys, rng)
        params = E.encrypt_model_params(W, b, ctx, keys, rng)
        timer = E.PhaseTimer()
        trained, beta = E.train_encrypted(samples, T, params, ctx, keys, rng, timer)
        assert set(timer.seconds) == {"hidden", "solve", "encrypt"}
        plain = elm.fit(X, T, W, b, "poly_sigmoid")
        assert np.max(np.abs(beta - plain.beta)) < 1e-2
        scores = E.decrypt_scores(E.predict_encrypted(samples, trained, ctx, keys.public), ctx, keys)
        assert np.max(np.abs(scores - T)) < 1e-2
        assert E.decrypt_and_classify(
            E.predict_encrypted(samples, trained, ctx, keys.public), ctx, keys).tolist() == [1, 0, 0, 1]

    def test_zero_targets(self, ctx, keys, rng):
        X, W, b = well_conditioned(3, seed=1)
        samples = E.encrypt_dataset(X, ctx, keys, rng)
        params = E.encrypt_model_params(W, b, ctx, keys, rng)
        trained, beta = E.train_encrypted(samples, np.zeros(3), params, ctx, keys, rng)
        dec = [E.decrypt_slot0(c, ctx, keys) for c in trained.enc_beta]
        assert np.max(np.abs(beta)) < 1e-12 and np.max(np.abs(dec)) < 2 ** -10

    def test_zero_beta_and_identity_beta(self, ctx, keys, rng):
        X = rng.normal(size=(2, 3)) * 0.5
        W, b = generate_chaotic_params(3, 1, seed=4)
        samples = E.encrypt_dataset(X, ctx, keys, rng)
        params = E.encrypt_model_params(W, b, ctx, keys, rng)
        for beta, want in (([0.0], np.zeros(2)),
                           ([1.0], elm.hidden_matrix(X, W, b, "poly_sigmoid")[:, 0])):
            params.enc_beta = E.encrypt_beta(beta, ctx, keys, rng)
            out = E.predict_encrypted(samples, params, ctx, keys.public)
            assert out[0].level == ctx.max_level - E.BUDGET.total
            assert np.max(np.abs(E.decrypt_scores(out, ctx, keys) - want)) < 1e-2

    def test_predict_needs_beta(self, ctx, keys, rng):
        params = E.encrypt_model_params(np.ones((1, 2)), [0.0], ctx, keys, rng)
        with pytest.raises(ValueError, match="beta"):
            E.predict_encrypted([], params, ctx, keys.public)

    @pytest.mark.parametrize("score, mode, want", [(0.7, "linear", 1), (0.3, "sigmoid", 1),
                                                   (0.49, "linear", 0), (-0.2, "sigmoid", 0)])
    def test_decrypt_and_classify(self, ctx, keys, rng, score, mode, want):
        # exact ties do not survive encryption noise; the tie rule is tested in plaintext
        ct = E.encrypt_vector([score], ctx, keys, rng)
        assert E.decrypt_and_classify([ct], ctx, keys, mode).tolist() == [want]


class TestKeyBoundary:
    """The secret key must be unreachable from the evaluation path."""

    EVAL_FUNCS = ("encrypted_hidden_matrix", "predict_encrypted")

    @pytest.mark.parametrize("name", EVAL_FUNCS)
    def test_evaluation_rejects_keyset(self, ctx, keys, rng, name):
        samples = E.encrypt_dataset(np.zeros((1, 2)), ctx, keys, rng)
        params = E.encrypt_model_params(np.ones((1, 2)), [0.0], ctx, keys, rng)
        params.enc_beta = E.encrypt_beta([1.0], ctx, keys, rng)
        with pytest.raises(TypeError, match="EvaluationKeys"):
            getattr(E, name)(samples, params, ctx, keys)

    def test_evaluator_rejects_keyset(self, ctx, keys):
        with pytest.raises(TypeError):
            Evaluator(ctx, keys)

    def test_annotations_carry_no_secret(self):
        for name in self.EVAL_FUNCS + ("encrypted_hidden_unit", "encrypted_scores_from_hidden"):
            sig = inspect.signature(getattr(E, name))
            for p in sig.parameters.values():
                assert p.annotation not in (KeySet, SecretKey, "KeySet", "SecretKey"), (name, p)

    def test_evaluation_keys_have_no_secret_fields(self, keys):
        fields = vars(keys.public)
        assert not any(isinstance(v, SecretKey) for v in fields.values())

    def test_decryption_requires_keyset(self, ctx, keys, rng):
        ct = E.encrypt_vector([1.0], ctx, keys, rng)
        with pytest.raises(TypeError):
            E.decrypt_slot0(ct, ctx, keys.public)
        with pytest.raises(TypeError):
            E.train_encrypted([], [], None, ctx, keys.public, rng)
