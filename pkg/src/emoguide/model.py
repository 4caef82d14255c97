"""Tiny autoregressive dialog LM: a gated-recurrent sequence mixer.

One (configurably stacked) GRU layer over token embeddings with a linear
readout to vocabulary logits.  Everything is plain numpy with hand-written
forward/backward passes; parameters are float32 by default (pass
``dtype=np.float64`` at init for gradient-checking).  Identical seeds give
bit-identical parameters.

Checkpoints are a single binary file: a magic string, a JSON header (config,
step count, optional vocabulary and config hash, parameter manifest) followed
by the raw little-endian float32 parameter buffers in manifest order.  A
save/load round trip is bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .vocab import Vocab

CKPT_MAGIC = b"EMOGCKPT"
CKPT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 64
    hidden_dim: int = 128
    num_layers: int = 1
    context_window: int = 128

    def __post_init__(self) -> None:
        for name in ("vocab_size", "embed_dim", "hidden_dim", "num_layers", "context_window"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "num_layers": self.num_layers,
            "context_window": self.context_window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray]
    step_count: int = 0
    vocab: Vocab | None = field(default=None, repr=False)

    @property
    def dtype(self) -> np.dtype:
        return self.params["emb"].dtype

    def astype(self, dtype) -> "Model":
        return Model(
            config=self.config,
            params={k: v.astype(dtype) for k, v in self.params.items()},
            step_count=self.step_count,
            vocab=self.vocab,
        )


def _param_names(config: ModelConfig) -> list[str]:
    names = ["emb"]
    for layer in range(config.num_layers):
        for gate in ("z", "r", "c"):
            names += [f"l{layer}.w_{gate}", f"l{layer}.u_{gate}", f"l{layer}.b_{gate}"]
    names += ["out_w", "out_b"]
    return names


def init_model(
    config: ModelConfig,
    seed: int,
    dtype=np.float32,
    vocab: Vocab | None = None,
) -> Model:
    """Seeded uniform init, each tensor scaled by 1/sqrt(fan_in)."""
    if vocab is not None and len(vocab) != config.vocab_size:
        raise ValueError(f"vocab size {len(vocab)} != config.vocab_size {config.vocab_size}")
    rng = np.random.default_rng(seed)
    V, D, H = config.vocab_size, config.embed_dim, config.hidden_dim

    def uniform(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    params: dict[str, np.ndarray] = {"emb": uniform((V, D), D)}
    for layer in range(config.num_layers):
        d_in = D if layer == 0 else H
        for gate in ("z", "r", "c"):
            params[f"l{layer}.w_{gate}"] = uniform((d_in, H), d_in)
            params[f"l{layer}.u_{gate}"] = uniform((H, H), H)
            params[f"l{layer}.b_{gate}"] = uniform((H,), H)
    params["out_w"] = uniform((H, V), H)
    params["out_b"] = np.zeros((V,), dtype=dtype)
    return Model(config=config, params=params, step_count=0, vocab=vocab)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_ids(ids, vocab_size: int, window: int) -> np.ndarray:
    arr = np.asarray(ids)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected token ids of shape (L,) or (B, L), got {arr.shape}")
    if arr.shape[1] == 0:
        raise ValueError("empty token stream")
    if arr.shape[1] > window:
        raise ValueError(f"input length {arr.shape[1]} exceeds context window {window}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"token ids must be integers, got dtype {arr.dtype}")
    if arr.min() < 0 or arr.max() >= vocab_size:
        raise ValueError("token id out of range")
    return arr.astype(np.int64)


def _forward_cached(model: Model, ids: np.ndarray):
    """Run the stack, returning logits plus everything backward() needs."""
    p = model.params
    cfg = model.config
    B, L = ids.shape
    x = p["emb"][ids]  # (B, L, D)
    layers = []
    for layer in range(cfg.num_layers):
        w_z, u_z, b_z = p[f"l{layer}.w_z"], p[f"l{layer}.u_z"], p[f"l{layer}.b_z"]
        w_r, u_r, b_r = p[f"l{layer}.w_r"], p[f"l{layer}.u_r"], p[f"l{layer}.b_r"]
        w_c, u_c, b_c = p[f"l{layer}.w_c"], p[f"l{layer}.u_c"], p[f"l{layer}.b_c"]
        H = u_z.shape[0]
        # input-to-hidden products for the whole sequence in one GEMM per gate
        az_x = x @ w_z + b_z
        ar_x = x @ w_r + b_r
        ac_x = x @ w_c + b_c
        z = np.empty((B, L, H), dtype=x.dtype)
        r = np.empty_like(z)
        c = np.empty_like(z)
        h = np.empty_like(z)
        h_prev = np.zeros((B, H), dtype=x.dtype)
        for t in range(L):
            zt = _sigmoid(az_x[:, t] + h_prev @ u_z)
            rt = _sigmoid(ar_x[:, t] + h_prev @ u_r)
            ct = np.tanh(ac_x[:, t] + (rt * h_prev) @ u_c)
            ht = (1.0 - zt) * h_prev + zt * ct
            z[:, t], r[:, t], c[:, t], h[:, t] = zt, rt, ct, ht
            h_prev = ht
        layers.append({"x": x, "z": z, "r": r, "c": c, "h": h, "layer": layer})
        x = h
    logits = x @ p["out_w"] + p["out_b"]
    return logits, {"ids": ids, "layers": layers, "top": x}


def forward(model: Model, ids) -> np.ndarray:
    """Causal logits for every position; shape mirrors the input batch shape."""
    arr = _check_ids(ids, model.config.vocab_size, model.config.context_window)
    logits, _ = _forward_cached(model, arr)
    return logits[0] if np.asarray(ids).ndim == 1 else logits


def _layer_backward(params: dict, cache: dict, dh_out: np.ndarray):
    """Backward through one GRU layer given d(loss)/d(h_t) for every t."""
    layer = cache["layer"]
    x, z, r, c, h = cache["x"], cache["z"], cache["r"], cache["c"], cache["h"]
    u_z, u_r, u_c = params[f"l{layer}.u_z"], params[f"l{layer}.u_r"], params[f"l{layer}.u_c"]
    w_z, w_r, w_c = params[f"l{layer}.w_z"], params[f"l{layer}.w_r"], params[f"l{layer}.w_c"]
    B, L, H = dh_out.shape
    da_z = np.empty_like(z)
    da_r = np.empty_like(z)
    da_c = np.empty_like(z)
    dh_next = np.zeros((B, H), dtype=x.dtype)
    zeros = np.zeros((B, H), dtype=x.dtype)
    for t in reversed(range(L)):
        h_prev = h[:, t - 1] if t > 0 else zeros
        dh = dh_out[:, t] + dh_next
        zt, rt, ct = z[:, t], r[:, t], c[:, t]
        dct = dh * zt
        dat_c = dct * (1.0 - ct * ct)
        dzt = dh * (ct - h_prev)
        dat_z = dzt * zt * (1.0 - zt)
        dh_prev = dh * (1.0 - zt)
        drh = dat_c @ u_c.T
        dh_prev += drh * rt
        drt = drh * h_prev
        dat_r = drt * rt * (1.0 - rt)
        dh_prev += dat_z @ u_z.T
        dh_prev += dat_r @ u_r.T
        da_z[:, t], da_r[:, t], da_c[:, t] = dat_z, dat_r, dat_c
        dh_next = dh_prev

    # batched weight gradients; h shifted right one step is the recurrent input
    h_shift = np.concatenate([np.zeros((B, 1, H), dtype=x.dtype), h[:, :-1]], axis=1)
    rh = r * h_shift
    flat = lambda a: a.reshape(-1, a.shape[-1])
    grads = {
        f"l{layer}.w_z": flat(x).T @ flat(da_z),
        f"l{layer}.u_z": flat(h_shift).T @ flat(da_z),
        f"l{layer}.b_z": da_z.sum(axis=(0, 1)),
        f"l{layer}.w_r": flat(x).T @ flat(da_r),
        f"l{layer}.u_r": flat(h_shift).T @ flat(da_r),
        f"l{layer}.b_r": da_r.sum(axis=(0, 1)),
        f"l{layer}.w_c": flat(x).T @ flat(da_c),
        f"l{layer}.u_c": flat(rh).T @ flat(da_c),
        f"l{layer}.b_c": da_c.sum(axis=(0, 1)),
    }
    dx = da_z @ w_z.T + da_r @ w_r.T + da_c @ w_c.T
    return dx, grads


def backward(model: Model, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients for d(loss)/d(logits); pairs with _forward_cached."""
    p = model.params
    top = cache["top"]
    dlogits = dlogits.astype(top.dtype, copy=False)
    flat = lambda a: a.reshape(-1, a.shape[-1])
    grads: dict[str, np.ndarray] = {
        "out_w": flat(top).T @ flat(dlogits),
        "out_b": dlogits.sum(axis=(0, 1)),
    }
    dh = dlogits @ p["out_w"].T
    for layer_cache in reversed(cache["layers"]):
        dh, layer_grads = _layer_backward(p, layer_cache, dh)
        grads.update(layer_grads)
    d_emb = np.zeros_like(p["emb"])
    np.add.at(d_emb, cache["ids"], dh)
    grads["emb"] = d_emb
    return grads


# ------------------------------------------------------------- generation


@dataclass(frozen=True)
class DecodeConfig:
    mode: str = "greedy"  # "greedy" | "top_k"
    k: int = 5
    temperature: float = 1.0
    max_tokens: int = 12

    def __post_init__(self) -> None:
        if self.mode not in ("greedy", "top_k"):
            raise ValueError(f"unknown decode mode {self.mode!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not math.isfinite(self.temperature) or self.temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature!r}")
        if not isinstance(self.max_tokens, int) or self.max_tokens < 0:
            raise ValueError(f"max_tokens must be nonnegative, got {self.max_tokens!r}")


class _DecodeState:
    """Carried GRU hidden states for O(1)-per-token decoding."""

    __slots__ = ("hs",)

    def __init__(self, model: Model):
        H = model.config.hidden_dim
        self.hs = [np.zeros(H, dtype=model.dtype) for _ in range(model.config.num_layers)]


def _decode_step(model: Model, state: _DecodeState, token_id: int) -> np.ndarray:
    p = model.params
    x = p["emb"][token_id]
    for layer in range(model.config.num_layers):
        h_prev = state.hs[layer]
        zt = _sigmoid(x @ p[f"l{layer}.w_z"] + h_prev @ p[f"l{layer}.u_z"] + p[f"l{layer}.b_z"])
        rt = _sigmoid(x @ p[f"l{layer}.w_r"] + h_prev @ p[f"l{layer}.u_r"] + p[f"l{layer}.b_r"])
        ct = np.tanh(x @ p[f"l{layer}.w_c"] + (rt * h_prev) @ p[f"l{layer}.u_c"] + p[f"l{layer}.b_c"])
        ht = (1.0 - zt) * h_prev + zt * ct
        state.hs[layer] = ht
        x = ht
    return x @ p["out_w"] + p["out_b"]


def generate(
    model: Model,
    context_ids: Sequence[int],
    decode: DecodeConfig = DecodeConfig(),
    *,
    eou_id: int | None = None,
    forbidden_ids: Sequence[int] = (),
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Decode token ids after ``context_ids`` until <eou> or max_tokens.

    ``forbidden_ids`` are masked at every step; ``eou_id`` additionally at the
    first step so generated utterances are never empty.  As temperature -> 0,
    top_k sampling converges to the greedy choice.
    """
    ctx = _check_ids(context_ids, model.config.vocab_size, model.config.context_window)[0]
    if decode.mode == "top_k" and rng is None:
        raise ValueError("top_k decoding needs an rng")
    state = _DecodeState(model)
    logits = None
    for token in ctx:
        logits = _decode_step(model, state, int(token))
    out: list[int] = []
    forbidden = list(forbidden_ids)
    for step in range(decode.max_tokens):
        masked = logits.astype(np.float64, copy=True)
        if forbidden:
            masked[forbidden] = -np.inf
        if step == 0 and eou_id is not None:
            masked[eou_id] = -np.inf
        if decode.mode == "greedy":
            choice = int(np.argmax(masked))
        else:
            k = min(decode.k, int(np.sum(np.isfinite(masked))))
            top = np.argpartition(masked, -k)[-k:]
            top = top[np.argsort(masked[top])[::-1]]  # deterministic order
            scaled = masked[top] / decode.temperature
            scaled -= scaled.max()
            probs = np.exp(scaled)
            probs /= probs.sum()
            choice = int(rng.choice(top, p=probs))
        if eou_id is not None and choice == eou_id:
            break
        out.append(choice)
        logits = _decode_step(model, state, choice)
    return out


# ------------------------------------------------------------ checkpoints


def model_checksum(model: Model) -> str:
    """sha256 over the config and raw parameter bytes (manifest order)."""
    h = hashlib.sha256()
    h.update(json.dumps(model.config.to_dict(), sort_keys=True).encode())
    for name in _param_names(model.config):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())
    return h.hexdigest()


def save_checkpoint(path, model: Model, config_hash: str | None = None) -> None:
    names = _param_names(model.config)
    header = {
        "version": CKPT_VERSION,
        "config": model.config.to_dict(),
        "step_count": model.step_count,
        "vocab": list(model.vocab.tokens) if model.vocab is not None else None,
        "config_hash": config_hash,
        "params": [
            {"name": n, "shape": list(model.params[n].shape), "dtype": "<f4"} for n in names
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(model.params[n], dtype="<f4").tobytes())


def load_checkpoint(path) -> Model:
    with open(path, "rb") as fh:
        magic = fh.read(len(CKPT_MAGIC))
        if magic != CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("version") != CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')!r}")
        config = ModelConfig.from_dict(header["config"])
        params: dict[str, np.ndarray] = {}
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 4)
            if len(buf) != count * 4:
                raise ValueError("truncated checkpoint")
            params[spec["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
    expected = set(_param_names(config))
    if set(params) != expected:
        raise ValueError("checkpoint parameter manifest does not match config")
    vocab = Vocab(tokens=tuple(header["vocab"])) if header.get("vocab") else None
    return Model(config=config, params=params, step_count=int(header["step_count"]), vocab=vocab)


def checkpoint_config_hash(path) -> str | None:
    """Read just the config hash recorded in a checkpoint header."""
    with open(path, "rb") as fh:
        if fh.read(len(CKPT_MAGIC)) != CKPT_MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
    return header.get("config_hash")
