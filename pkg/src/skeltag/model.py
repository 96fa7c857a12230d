"""Compact BERT-style encoder with a token-classification head, in numpy.

Post-layer-norm blocks, learned positions, GELU feed-forward. The backward
pass is written out by hand; :func:`backward` consumes the cache produced by
``forward(..., return_cache=True)``.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from skeltag.corpus import TaggedSentence, TagSet
from skeltag.errors import ConfigError, ModelError, ModelFormatError
from skeltag.tokenizer import Encoding, Tokenizer, encode_sentence

LN_EPS = 1e-12
MASK_NEG = -1e9
GELU_C = float(np.sqrt(2.0 / np.pi))


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    n_tags: int
    max_len: int = 128
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    dropout_rate: float = 0.1
    seed: int = 0

    def validate(self) -> "ModelConfig":
        for name in ("vocab_size", "n_tags", "max_len", "d_model", "n_heads", "n_layers", "d_ff"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        return self

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Tensor names and shapes in canonical (serialization) order."""
    D, F, V = config.d_model, config.d_ff, config.vocab_size
    shapes = {
        "embed.token": (V, D),
        "embed.position": (config.max_len, D),
    }
    for l in range(config.n_layers):
        p = f"layer{l}."
        for proj in "qkvo":
            shapes[p + f"attn.{proj}.weight"] = (D, D)
            shapes[p + f"attn.{proj}.bias"] = (D,)
        shapes[p + "ln1.gain"] = (D,)
        shapes[p + "ln1.bias"] = (D,)
        shapes[p + "ffn.w1"] = (D, F)
        shapes[p + "ffn.b1"] = (F,)
        shapes[p + "ffn.w2"] = (F, D)
        shapes[p + "ffn.b2"] = (D,)
        shapes[p + "ln2.gain"] = (D,)
        shapes[p + "ln2.bias"] = (D,)
    shapes["final_ln.gain"] = (D,)
    shapes["final_ln.bias"] = (D,)
    shapes["classifier.weight"] = (D, config.n_tags)
    shapes["classifier.bias"] = (config.n_tags,)
    shapes["mlm.weight"] = (D, V)
    shapes["mlm.bias"] = (V,)
    return shapes


def _is_bias(name: str) -> bool:
    return name.endswith(("bias", ".b1", ".b2"))


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(repr=False)

    def __getitem__(self, name):
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(self.config, {k: v.astype(dtype) for k, v in self.tensors.items()})

    @property
    def dtype(self):
        return self.tensors["embed.token"].dtype

    def n_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())

    def check(self) -> None:
        expected = param_shapes(self.config)
        if list(expected) != list(self.tensors):
            raise ModelError("parameter names do not match config")
        for name, shape in expected.items():
            t = self.tensors[name]
            if t.shape != shape:
                raise ModelError(f"{name}: shape {t.shape}, expected {shape}")
            if not np.all(np.isfinite(t)):
                raise ModelError(f"{name}: non-finite values")


def _truncated_normal(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    x = rng.standard_normal(shape)
    bad = np.abs(x) > 2.0
    while bad.any():
        x[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(x) > 2.0
    return x * std


def init_model(config: ModelConfig, dtype=np.float32) -> ModelParams:
    """Truncated-normal (std 0.02) weights, zero biases, unit layer-norm gains."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    tensors = {}
    for name, shape in param_shapes(config).items():
        if name.endswith("gain"):
            t = np.ones(shape)
        elif _is_bias(name):
            t = np.zeros(shape)
        else:
            t = _truncated_normal(rng, shape, 0.02)
        tensors[name] = t.astype(dtype)
    return ModelParams(config, tensors)


def with_fresh_head(params: ModelParams, n_tags: int, seed: int | None = None) -> ModelParams:
    """Copy encoder (and MLM head) weights; reinitialize the classifier for ``n_tags``."""
    config = params.config
    new_config = ModelConfig(**{**asdict(config), "n_tags": n_tags, "seed": config.seed if seed is None else seed})
    fresh = init_model(new_config, dtype=params.dtype)
    tensors = {}
    for name in param_shapes(new_config):
        if name.startswith("classifier."):
            tensors[name] = fresh.tensors[name]
        else:
            tensors[name] = params.tensors[name].copy()
    return ModelParams(new_config, tensors)


# ---------------------------------------------------------------- batching


@dataclass
class Batch:
    ids: np.ndarray
    mask: np.ndarray
    labels: np.ndarray | None = None

    @property
    def shape(self):
        return self.ids.shape


def collate(encodings: Sequence[Encoding], trim: bool = False) -> Batch:
    """Stack encodings. ``trim`` cuts trailing all-PAD columns (logits at real
    positions are unaffected because PAD keys are masked)."""
    if not encodings:
        raise ModelError("empty batch")
    lengths = {len(e) for e in encodings}
    if len(lengths) != 1:
        raise ModelError(f"encodings have different lengths: {sorted(lengths)}")
    ids = np.array([e.ids for e in encodings], dtype=np.int64)
    mask = np.array([e.attention_mask for e in encodings], dtype=np.int64)
    labels = None
    if all(e.label_ids is not None for e in encodings):
        labels = np.array([e.label_ids for e in encodings], dtype=np.int64)
    if trim:
        t = int(mask.sum(axis=1).max())
        ids, mask = ids[:, :t], mask[:, :t]
        if labels is not None:
            labels = labels[:, :t]
    return Batch(ids, mask, labels)


def _as_batch(batch) -> Batch:
    if isinstance(batch, Batch):
        return batch
    return collate(batch)


# ---------------------------------------------------------------- primitives


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-shifted softmax; safe for large-magnitude inputs."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def gelu(x):
    """Tanh approximation of GELU."""
    return 0.5 * x * (1.0 + np.tanh(GELU_C * (x + 0.044715 * x * x * x)))


def _gelu_grad(x):
    # x**3 goes through pow(), ~100x slower than repeated multiplication
    t = np.tanh(GELU_C * (x + 0.044715 * x * x * x))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3 * 0.044715 * x * x)


def _layer_norm(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + LN_EPS)
    xh = xc * rstd
    return xh * gain + bias, (xh, rstd)


def _layer_norm_back(dy, gain, cache):
    xh, rstd = cache
    dxh = dy * gain
    dgain = (dy * xh).reshape(-1, xh.shape[-1]).sum(axis=0)
    dbias = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dx = rstd * (dxh - dxh.mean(axis=-1, keepdims=True) - xh * (dxh * xh).mean(axis=-1, keepdims=True))
    return dx, dgain, dbias


def _dropout(x, rate, rng):
    if rng is None or rate == 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * keep, keep


def _linear_back(dy, x, w):
    """Gradients of ``y = x @ w + b`` for inputs of shape [..., in]."""
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ w.T, x2.T @ dy2, dy2.sum(axis=0)


# ---------------------------------------------------------------- forward / backward


def forward(params: ModelParams, batch, mode: str = "eval", rng=None, head: str = "tag", return_cache=False):
    """Logits ``[batch, seq_len, n_tags]`` (or ``vocab_size`` for ``head="mlm"``).

    Dropout is applied only in ``train`` mode and needs ``rng``
    (a ``numpy.random.Generator``).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if head not in ("tag", "mlm"):
        raise ValueError(f"head must be 'tag' or 'mlm', got {head!r}")
    cfg = params.config
    P = params.tensors
    b = _as_batch(batch)
    ids, mask = b.ids, b.mask
    if ids.ndim != 2 or mask.shape != ids.shape:
        raise ModelError(f"bad batch shape: ids {ids.shape}, mask {mask.shape}")
    B, T = ids.shape
    if T > cfg.max_len:
        raise ModelError(f"sequence length {T} exceeds max_len {cfg.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        raise ModelError(f"token id out of range [0, {cfg.vocab_size})")
    if mode == "train" and cfg.dropout_rate > 0 and rng is None:
        rng = np.random.default_rng(cfg.seed)
    drop_rng = rng if mode == "train" else None
    rate = cfg.dropout_rate
    dtype = params.dtype
    H, dh = cfg.n_heads, cfg.d_head
    scale = dtype.type(1.0 / np.sqrt(dh))

    cache = {"ids": ids, "T": T, "layers": []}
    x = P["embed.token"][ids] + P["embed.position"][:T]
    x, cache["drop_emb"] = _dropout(x, rate, drop_rng)
    key_bias = np.where(mask[:, None, None, :] > 0, 0.0, MASK_NEG).astype(dtype)

    for l in range(cfg.n_layers):
        p = f"layer{l}."
        lc = {"x": x}
        q = x @ P[p + "attn.q.weight"] + P[p + "attn.q.bias"]
        k = x @ P[p + "attn.k.weight"] + P[p + "attn.k.bias"]
        v = x @ P[p + "attn.v.weight"] + P[p + "attn.v.bias"]
        q = q.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        k = k.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        v = v.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        probs = softmax(q @ k.transpose(0, 1, 3, 2) * scale + key_bias)
        ctx = (probs @ v).transpose(0, 2, 1, 3).reshape(B, T, H * dh)
        a = ctx @ P[p + "attn.o.weight"] + P[p + "attn.o.bias"]
        a, lc["drop_a"] = _dropout(a, rate, drop_rng)
        h, lc["ln1"] = _layer_norm(x + a, P[p + "ln1.gain"], P[p + "ln1.bias"])
        u = h @ P[p + "ffn.w1"] + P[p + "ffn.b1"]
        g = gelu(u)
        f = g @ P[p + "ffn.w2"] + P[p + "ffn.b2"]
        f, lc["drop_f"] = _dropout(f, rate, drop_rng)
        x, lc["ln2"] = _layer_norm(h + f, P[p + "ln2.gain"], P[p + "ln2.bias"])
        lc.update(q=q, k=k, v=v, probs=probs, ctx=ctx, h=h, u=u, g=g)
        cache["layers"].append(lc)

    z, cache["final_ln"] = _layer_norm(x, P["final_ln.gain"], P["final_ln.bias"])
    cache["z"] = z
    cache["head"] = head
    if head == "tag":
        logits = z @ P["classifier.weight"] + P["classifier.bias"]
    else:
        logits = z @ P["mlm.weight"] + P["mlm.bias"]
    if return_cache:
        return logits, cache
    return logits


def backward(params: ModelParams, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Reverse-mode gradients of a scalar loss given ``dloss/dlogits``."""
    cfg = params.config
    P = params.tensors
    grads = {name: np.zeros_like(t) for name, t in P.items()}
    ids, T = cache["ids"], cache["T"]
    B = ids.shape[0]
    H, dh = cfg.n_heads, cfg.d_head
    scale = params.dtype.type(1.0 / np.sqrt(dh))
    dlogits = dlogits.astype(params.dtype, copy=False)

    head = "classifier" if cache["head"] == "tag" else "mlm"
    dz, grads[f"{head}.weight"], grads[f"{head}.bias"] = _linear_back(dlogits, cache["z"], P[f"{head}.weight"])
    dx, grads["final_ln.gain"], grads["final_ln.bias"] = _layer_norm_back(dz, P["final_ln.gain"], cache["final_ln"])

    for l in reversed(range(cfg.n_layers)):
        p = f"layer{l}."
        lc = cache["layers"][l]
        # x_out = LN2(h + f)
        ds2, grads[p + "ln2.gain"], grads[p + "ln2.bias"] = _layer_norm_back(dx, P[p + "ln2.gain"], lc["ln2"])
        df = ds2 if lc["drop_f"] is None else ds2 * lc["drop_f"]
        dg, grads[p + "ffn.w2"], grads[p + "ffn.b2"] = _linear_back(df, lc["g"], P[p + "ffn.w2"])
        du = dg * _gelu_grad(lc["u"])
        dh_ffn, grads[p + "ffn.w1"], grads[p + "ffn.b1"] = _linear_back(du, lc["h"], P[p + "ffn.w1"])
        dh_ = ds2 + dh_ffn
        # h = LN1(x + a)
        ds1, grads[p + "ln1.gain"], grads[p + "ln1.bias"] = _layer_norm_back(dh_, P[p + "ln1.gain"], lc["ln1"])
        da = ds1 if lc["drop_a"] is None else ds1 * lc["drop_a"]
        dctx, grads[p + "attn.o.weight"], grads[p + "attn.o.bias"] = _linear_back(da, lc["ctx"], P[p + "attn.o.weight"])
        dctx = dctx.reshape(B, T, H, dh).transpose(0, 2, 1, 3)
        probs, q, k, v = lc["probs"], lc["q"], lc["k"], lc["v"]
        dprobs = dctx @ v.transpose(0, 1, 3, 2)
        dv = probs.transpose(0, 1, 3, 2) @ dctx
        dscores = probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))
        dq = (dscores @ k) * scale
        dk = (dscores.transpose(0, 1, 3, 2) @ q) * scale
        x_in = lc["x"]
        dx = ds1.copy()
        for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
            dproj = dproj.transpose(0, 2, 1, 3).reshape(B, T, H * dh)
            dxi, grads[p + f"attn.{name}.weight"], grads[p + f"attn.{name}.bias"] = _linear_back(
                dproj, x_in, P[p + f"attn.{name}.weight"]
            )
            dx += dxi

    if cache["drop_emb"] is not None:
        dx = dx * cache["drop_emb"]
    np.add.at(grads["embed.token"], ids.reshape(-1), dx.reshape(-1, dx.shape[-1]))
    grads["embed.position"][:T] = dx.sum(axis=0)
    return grads


# ---------------------------------------------------------------- prediction


def predict_batch(params: ModelParams, encodings: Sequence[Encoding]) -> list[list[int]]:
    """Argmax tag id at each word-start position (lowest id wins ties)."""
    logits = forward(params, collate(encodings, trim=True), mode="eval")
    out = []
    for row, enc in zip(logits, encodings):
        starts = list(enc.word_starts)
        out.append(np.argmax(row[starts], axis=-1).tolist() if starts else [])
    return out


def predict_tags(params: ModelParams, tok: Tokenizer, tagset: TagSet, words: Sequence[str], max_len: int | None = None) -> TaggedSentence:
    """Tag a word list. Words truncated to fit ``max_len`` are dropped from the result."""
    words = list(words)
    if not words:
        raise ModelError("cannot tag an empty word list")
    if len(tagset) != params.config.n_tags:
        raise ModelError(f"tagset has {len(tagset)} tags, model has {params.config.n_tags}")
    enc = encode_sentence(tok, words, max_len=max_len or params.config.max_len)
    if enc.n_words == 0:
        raise ModelError("all words were truncated away")
    (ids,) = predict_batch(params, [enc])
    return TaggedSentence(words[: enc.n_words], [tagset[i] for i in ids])


# ---------------------------------------------------------------- model file

MAGIC = b"SKTG"
FORMAT_VERSION = 1


def _metadata(params: ModelParams, tagset: TagSet | None, tokenizer_sha256: str | None, extra: dict | None):
    manifest = []
    offset = 0
    for name, t in params.tensors.items():
        nbytes = int(t.size) * 4
        manifest.append({"name": name, "shape": list(t.shape), "offset": offset, "nbytes": nbytes})
        offset += nbytes
    return {
        "config": asdict(params.config),
        "tagset": list(tagset.tags) if tagset is not None else None,
        "tokenizer_sha256": tokenizer_sha256,
        "tensors": manifest,
        "extra": extra or {},
    }


def save_model(path, params: ModelParams, tagset: TagSet | None = None, tokenizer: Tokenizer | None = None, extra: dict | None = None) -> None:
    """Write the ``SKTG`` container: magic, u32 version, u64 metadata length,
    JSON metadata, then little-endian float32 tensors in manifest order."""
    meta = _metadata(params, tagset, tokenizer.sha256() if tokenizer is not None else None, extra)
    meta_bytes = json.dumps(meta, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(meta_bytes)))
        fh.write(meta_bytes)
        for t in params.tensors.values():
            fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def _read_header(fh) -> tuple[dict, int]:
    magic = fh.read(4)
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file (magic {magic!r})")
    raw = fh.read(4)
    if len(raw) != 4:
        raise ModelFormatError("truncated header")
    (version,) = struct.unpack("<I", raw)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    raw = fh.read(8)
    if len(raw) != 8:
        raise ModelFormatError("truncated header")
    (n,) = struct.unpack("<Q", raw)
    meta_bytes = fh.read(n)
    if len(meta_bytes) != n:
        raise ModelFormatError("truncated metadata")
    try:
        meta = json.loads(meta_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"bad metadata: {e}") from None
    return meta, 16 + n


def read_metadata(path) -> dict:
    """Metadata block only; tensor payloads are not read."""
    try:
        with open(path, "rb") as fh:
            meta, _ = _read_header(fh)
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    return meta


@dataclass
class LoadedModel:
    params: ModelParams
    tagset: TagSet | None
    tokenizer_sha256: str | None
    extra: dict


def load_model(path) -> LoadedModel:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    fh = io.BytesIO(data)
    meta, start = _read_header(fh)
    try:
        config = ModelConfig(**meta["config"]).validate()
        expected = param_shapes(config)
        tensors = {}
        for entry in meta["tensors"]:
            name, shape = entry["name"], tuple(entry["shape"])
            if expected.get(name) != shape:
                raise ModelFormatError(f"tensor {name}: unexpected shape {shape}")
            lo = start + entry["offset"]
            hi = lo + entry["nbytes"]
            if hi > len(data) or entry["nbytes"] != 4 * int(np.prod(shape)):
                raise ModelFormatError(f"tensor {name}: payload out of bounds")
            tensors[name] = np.frombuffer(data[lo:hi], dtype="<f4").reshape(shape).astype(np.float32)
        if list(tensors) != list(expected):
            raise ModelFormatError("tensor manifest does not match config")
    except (KeyError, TypeError) as e:
        raise ModelFormatError(f"bad metadata: {e}") from None
    tagset = TagSet(meta["tagset"]) if meta.get("tagset") else None
    return LoadedModel(ModelParams(config, tensors), tagset, meta.get("tokenizer_sha256"), meta.get("extra", {}))

