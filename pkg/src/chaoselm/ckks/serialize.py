"""Length-prefixed little-endian binary layout for ciphertexts and keys.

Every blob is ``u64 length`` followed by the body. Bodies start with a kind
byte, a format version byte and the 8-byte context hash, so a blob cannot be
loaded against the wrong parameters. Residue arrays are raw ``<u8`` words.
The secret key is written only by :func:`save_secret_key`, never alongside
public material.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from ..ring import reduce_signed
from .ciphertext import Ciphertext
from .keys import EvaluationKeys, KeySwitchKey, PublicKey, SecretKey
from .params import CkksContext, CkksParams, KeyMismatchError, build_context

FORMAT_VERSION = 1
MAGIC = b"CKEL"

KIND_CIPHERTEXT = 1
KIND_PUBLIC_KEY = 2
KIND_SWITCH_KEY = 3
KIND_EVAL_KEYS = 4
KIND_SECRET_KEY = 5
KIND_PARAMS = 6
KIND_BUNDLE = 7


class FormatError(ValueError):
    pass


def _put_blob(out: io.BytesIO, body: bytes):
    out.write(struct.pack("<Q", len(body)))
    out.write(body)


def _get_blob(buf: io.BytesIO) -> bytes:
    head = buf.read(8)
    if len(head) != 8:
        raise FormatError("truncated length prefix")
    (n,) = struct.unpack("<Q", head)
    body = buf.read(n)
    if len(body) != n:
        raise FormatError("truncated blob")
    return body


def _header(kind: int, ctx_hash: bytes) -> bytes:
    return struct.pack("<BB8s", kind, FORMAT_VERSION, ctx_hash)


def _check_header(body: io.BytesIO, kind: int, ctx: CkksContext | None):
    raw = body.read(10)
    if len(raw) != 10:
        raise FormatError("truncated header")
    got_kind, version, h = struct.unpack("<BB8s", raw)
    if got_kind != kind:
        raise FormatError(f"expected blob kind {kind}, found {got_kind}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if ctx is not None and h != ctx.params_hash:
        raise KeyMismatchError("blob was written for a different context")
    return h


def _put_array(out: io.BytesIO, a: np.ndarray):
    out.write(np.ascontiguousarray(a, dtype="<u8").tobytes())


def _get_array(body: io.BytesIO, shape) -> np.ndarray:
    count = int(np.prod(shape))
    raw = body.read(8 * count)
    if len(raw) != 8 * count:
        raise FormatError("truncated residue array")
    return np.frombuffer(raw, dtype="<u8").astype(np.uint64).reshape(shape)


# -- parameters ---------------------------------------------------------------

def params_to_bytes(params: CkksParams) -> bytes:
    bits = params.coeff_modulus_bits
    body = struct.pack("<BBBdB", KIND_PARAMS, FORMAT_VERSION, params.degree_log2,
                       params.error_stddev, params.scale_bits)
    body += struct.pack("<B", len(bits)) + bytes(bits)
    return body


def params_from_bytes(body: bytes) -> CkksParams:
    kind, version, logn, stddev, scale_bits, count = struct.unpack_from("<BBBdBB", body)
    if kind != KIND_PARAMS or version != FORMAT_VERSION:
        raise FormatError("not a parameter blob")
    off = struct.calcsize("<BBBdBB")
    bits = tuple(body[off:off + count])
    return CkksParams(logn, bits, scale_bits, stddev)


# -- ciphertexts --------------------------------------------------------------

def ciphertext_to_bytes(ct: Ciphertext, ctx: CkksContext) -> bytes:
    out = io.BytesIO()
    out.write(_header(KIND_CIPHERTEXT, ctx.params_hash))
    out.write(struct.pack("<IdB", ct.level, ct.scale, ct.size))
    for part in ct.parts:
        _put_array(out, part)
    return out.getvalue()


def ciphertext_from_bytes(body: bytes, ctx: CkksContext) -> Ciphertext:
    buf = io.BytesIO(body)
    _check_header(buf, KIND_CIPHERTEXT, ctx)
    level, scale, count = struct.unpack("<IdB", buf.read(13))
    ctx.check_level(level)
    parts = tuple(_get_array(buf, (level + 1, ctx.degree)) for _ in range(count))
    return Ciphertext(parts, scale, level)


def save_ciphertexts(path, cts, ctx: CkksContext):
    """Write a flat list of ciphertexts as one bundle file."""
    out = io.BytesIO()
    out.write(MAGIC)
    _put_blob(out, _header(KIND_BUNDLE, ctx.params_hash) + struct.pack("<Q", len(cts)))
    for ct in cts:
        _put_blob(out, ciphertext_to_bytes(ct, ctx))
    Path(path).write_bytes(out.getvalue())


def load_ciphertexts(path, ctx: CkksContext) -> list[Ciphertext]:
    buf = io.BytesIO(Path(path).read_bytes())
    if buf.read(4) != MAGIC:
        raise FormatError("bad magic")
    head = io.BytesIO(_get_blob(buf))
    _check_header(head, KIND_BUNDLE, ctx)
    (count,) = struct.unpack("<Q", head.read(8))
    return [ciphertext_from_bytes(_get_blob(buf), ctx) for _ in range(count)]


# -- keys -----------------------------------------------------------------------

def _switch_key_bytes(key: KeySwitchKey) -> bytes:
    out = io.BytesIO()
    out.write(_header(KIND_SWITCH_KEY, key.params_hash))
    out.write(struct.pack("<III", *key.b.shape))
    _put_array(out, key.b)
    _put_array(out, key.a)
    return out.getvalue()


def _switch_key_from(body: bytes, ctx: CkksContext) -> KeySwitchKey:
    buf = io.BytesIO(body)
    h = _check_header(buf, KIND_SWITCH_KEY, ctx)
    shape = struct.unpack("<III", buf.read(12))
    return KeySwitchKey(_get_array(buf, shape), _get_array(buf, shape), h)


def save_evaluation_keys(path, keys: EvaluationKeys, ctx: CkksContext):
    """Public material only: parameters, public key, relin and rotation keys."""
    out = io.BytesIO()
    out.write(MAGIC)
    _put_blob(out, params_to_bytes(ctx.params))
    pk = io.BytesIO()
    pk.write(_header(KIND_PUBLIC_KEY, ctx.params_hash))
    _put_array(pk, keys.public_key.b)
    _put_array(pk, keys.public_key.a)
    _put_blob(out, pk.getvalue())
    steps = sorted(keys.galois_keys)
    meta = _header(KIND_EVAL_KEYS, ctx.params_hash)
    meta += struct.pack("<BI", keys.relin_key is not None, len(steps))
    meta += struct.pack(f"<{len(steps)}I", *steps)
    _put_blob(out, meta)
    if keys.relin_key is not None:
        _put_blob(out, _switch_key_bytes(keys.relin_key))
    for s in steps:
        _put_blob(out, _switch_key_bytes(keys.galois_keys[s]))
    Path(path).write_bytes(out.getvalue())


def load_evaluation_keys(path) -> tuple[CkksContext, EvaluationKeys]:
    """Rebuild the context from the stored parameters and return it with the keys."""
    buf = io.BytesIO(Path(path).read_bytes())
    if buf.read(4) != MAGIC:
        raise FormatError("bad magic")
    ctx = build_context(params_from_bytes(_get_blob(buf)))
    pk_buf = io.BytesIO(_get_blob(buf))
    _check_header(pk_buf, KIND_PUBLIC_KEY, ctx)
    shape = (ctx.max_level + 1, ctx.degree)
    pk = PublicKey(_get_array(pk_buf, shape), _get_array(pk_buf, shape), ctx.params_hash)
    meta = io.BytesIO(_get_blob(buf))
    _check_header(meta, KIND_EVAL_KEYS, ctx)
    has_relin, nsteps = struct.unpack("<BI", meta.read(5))
    steps = struct.unpack(f"<{nsteps}I", meta.read(4 * nsteps))
    relin = _switch_key_from(_get_blob(buf), ctx) if has_relin else None
    galois = {s: _switch_key_from(_get_blob(buf), ctx) for s in steps}
    return ctx, EvaluationKeys(pk, relin, galois)


def save_secret_key(path, sk: SecretKey, ctx: CkksContext):
    out = io.BytesIO()
    out.write(MAGIC)
    body = io.BytesIO()
    body.write(_header(KIND_SECRET_KEY, ctx.params_hash))
    body.write(np.ascontiguousarray(sk.coeffs, dtype="<i1").tobytes())
    _put_blob(out, body.getvalue())
    Path(path).write_bytes(out.getvalue())


def load_secret_key(path, ctx: CkksContext) -> SecretKey:
    buf = io.BytesIO(Path(path).read_bytes())
    if buf.read(4) != MAGIC:
        raise FormatError("bad magic")
    body = io.BytesIO(_get_blob(buf))
    _check_header(body, KIND_SECRET_KEY, ctx)
    raw = body.read(ctx.degree)
    if len(raw) != ctx.degree:
        raise FormatError("truncated secret key")
    s = np.frombuffer(raw, dtype="<i1").astype(np.int64)
    ext = ctx.ext_basis(ctx.max_level)
    return SecretKey(s, ext.forward(reduce_signed(s[None, :], ext.p)), ctx.params_hash)
