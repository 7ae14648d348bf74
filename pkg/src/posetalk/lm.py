"""Small decoder-only autoregressive language model.

Pre-norm transformer stack over float64 numpy arrays: visual-token
splicing, strictly causal attention, masked cross-entropy with analytic
gradients for every parameter, and greedy/sampled generation.  Sized so
that full finite-difference checks run in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptation import LoraParams, effective_weight
from .core import Prompt, Vocabulary
from .errors import CapacityError, ContractError, NumericError
from .translators import VisualEmbeddings, _gelu, _gelu_grad

_LN_EPS = 1e-5
_ATTN_TARGETS = ("wq", "wk", "wv", "wo")


@dataclass(frozen=True)
class LMConfig:
    vocab_size: int
    d_lm: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    max_len: int = 256
    init_std: float = 0.08

    def __post_init__(self):
        if self.d_lm % self.n_heads != 0:
            raise ContractError("d_lm must be divisible by n_heads")
        if min(self.vocab_size, self.d_lm, self.n_layers, self.n_heads, self.d_ff, self.max_len) < 1:
            raise ContractError("all LM dimensions must be positive")


class LMParams:
    """Flat name -> ndarray store for the base LM weights."""

    def __init__(self, cfg: LMConfig, tensors: dict[str, np.ndarray]):
        self.cfg = cfg
        self.tensors = tensors
        for name, arr in tensors.items():
            if not np.all(np.isfinite(arr)):
                raise ContractError(f"LM tensor {name} contains non-finite values")

    @classmethod
    def init(cls, cfg: LMConfig, seed: int) -> "LMParams":
        """Frozen-base initialization shaped like a usable reservoir.

        The base LM never trains, so plain i.i.d. noise would leave the
        translators steering a scrambling network.  Instead the value and
        output projections start at identity (attention copies normalized
        content, the way trained models move information), queries/keys and
        the first FFN matrix use unit-gain 1/sqrt(fan_in) noise, and the
        FFN write-back is damped so the copy path dominates the stream.
        Embeddings and the head use ``init_std``, which pins the untrained
        loss to ln|vocab| (the head alone determines that calibration).
        """
        rng = np.random.default_rng([seed, 301])
        std = cfg.init_std
        d, ff, v = cfg.d_lm, cfg.d_ff, cfg.vocab_size
        eye = np.eye(d)
        t: dict[str, np.ndarray] = {
            "tok_emb": rng.standard_normal((v, d)) * std,
            "pos_emb": rng.standard_normal((cfg.max_len, d)) * std,
        }
        for i in range(cfg.n_layers):
            p = f"layers.{i}"
            t[f"{p}.ln1.g"] = np.ones(d)
            t[f"{p}.attn.wq"] = rng.standard_normal((d, d)) / np.sqrt(d)
            t[f"{p}.attn.wk"] = rng.standard_normal((d, d)) / np.sqrt(d)
            t[f"{p}.attn.wv"] = eye.copy()
            t[f"{p}.attn.wo"] = eye.copy()
            t[f"{p}.ln2.g"] = np.ones(d)
            t[f"{p}.ffn.w1"] = rng.standard_normal((ff, d)) / np.sqrt(d)
            t[f"{p}.ffn.b1"] = np.zeros(ff)
            t[f"{p}.ffn.w2"] = rng.standard_normal((d, ff)) * (0.3 / np.sqrt(ff))
            t[f"{p}.ffn.b2"] = np.zeros(d)
        t["ln_f.g"] = np.ones(d)
        t["head"] = rng.standard_normal((v, d)) * std
        return cls(cfg, t)


@dataclass
class EmbeddedSequence:
    """A spliced sequence ready for the decoder.

    ``token_ids`` is -1 at visual positions; ``loss_mask`` is True exactly
    at response-token positions (never at visual positions).
    """

    vectors: np.ndarray  # (L, d_lm) float64
    token_ids: np.ndarray  # (L,) int64
    loss_mask: np.ndarray  # (L,) bool
    vis_start: int
    vis_len: int

    @property
    def length(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class GenerationResult:
    ids: tuple[int, ...]
    truncated: bool = False


def embed_with_visual(
    prompt: Prompt,
    vis: VisualEmbeddings,
    response: tuple[int, ...] | list[int] | None,
    params: LMParams,
    vocab: Vocabulary,
) -> EmbeddedSequence:
    """Embed prompt tokens, splice the K visual vectors at the VIS slot,
    append embedded response tokens, then add positional vectors."""
    cfg = params.cfg
    if vis.tokens.shape[1] != cfg.d_lm:
        raise ContractError(
            f"visual token width {vis.tokens.shape[1]} does not match d_lm {cfg.d_lm}"
        )
    toks = prompt.instruction_tokens
    if max(toks) >= cfg.vocab_size or len(vocab) != cfg.vocab_size:
        raise ContractError("prompt ids exceed the model vocabulary")
    vis_at = toks.index(vocab.vis_id)
    before = np.array(toks[:vis_at], dtype=np.int64)
    after = np.array(toks[vis_at + 1:], dtype=np.int64)
    resp = np.array(list(response) if response else [], dtype=np.int64)

    k = vis.tokens.shape[0]
    total = before.size + k + after.size + resp.size
    if total > cfg.max_len:
        raise CapacityError(f"sequence length {total} exceeds max_len {cfg.max_len}")

    emb = params.tensors["tok_emb"]
    vectors = np.concatenate([emb[before], vis.tokens, emb[after], emb[resp]], axis=0)
    vectors = vectors + params.tensors["pos_emb"][:total]

    token_ids = np.concatenate([before, np.full(k, -1, dtype=np.int64), after, resp])
    loss_mask = np.zeros(total, dtype=bool)
    if resp.size:
        loss_mask[total - resp.size:] = True
    return EmbeddedSequence(
        vectors=vectors,
        token_ids=token_ids,
        loss_mask=loss_mask,
        vis_start=before.size,
        vis_len=k,
    )


def append_token(seq: EmbeddedSequence, token_id: int, params: LMParams) -> EmbeddedSequence:
    """Extend a sequence by one embedded token (used during generation)."""
    pos = seq.length
    if pos >= params.cfg.max_len:
        raise CapacityError("cannot append beyond max_len")
    row = params.tensors["tok_emb"][token_id] + params.tensors["pos_emb"][pos]
    return EmbeddedSequence(
        vectors=np.concatenate([seq.vectors, row[None, :]], axis=0),
        token_ids=np.concatenate([seq.token_ids, [token_id]]),
        loss_mask=np.concatenate([seq.loss_mask, [False]]),
        vis_start=seq.vis_start,
        vis_len=seq.vis_len,
    )


def _layer_norm(x: np.ndarray, gain: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + _LN_EPS)
    xhat = xc * inv
    return xhat * gain, xhat, inv


def _layer_norm_backward(dy: np.ndarray, xhat: np.ndarray, inv: np.ndarray, gain: np.ndarray):
    dgain = (dy * xhat).sum(axis=0)
    dxhat = dy * gain
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dgain


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    length, d = x.shape
    return x.reshape(length, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    n_heads, length, dh = x.shape
    return x.transpose(1, 0, 2).reshape(length, n_heads * dh)


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(
    seq: EmbeddedSequence,
    params: LMParams,
    lora: LoraParams | None = None,
    want_cache: bool = False,
):
    """Causal decoder forward pass.

    Returns logits (L, vocab) or, with ``want_cache``, (logits, cache) for
    :func:`backward`.  Position t's logits depend only on positions <= t;
    masked attention weights are exactly zero, so causality is bit-exact.
    """
    cfg = params.cfg
    t = params.tensors
    length = seq.length
    if length > cfg.max_len:
        raise CapacityError(f"sequence length {length} exceeds max_len {cfg.max_len}")
    scale = 1.0 / np.sqrt(cfg.d_lm // cfg.n_heads)
    causal = np.triu(np.full((length, length), -np.inf), k=1)

    x = seq.vectors
    layer_caches = []
    for i in range(cfg.n_layers):
        p = f"layers.{i}"
        w_eff = {
            tgt: effective_weight(t[f"{p}.attn.{tgt}"], lora, i, tgt)
            for tgt in _ATTN_TARGETS
        }
        a, xhat1, inv1 = _layer_norm(x, t[f"{p}.ln1.g"])
        q = _split_heads(a @ w_eff["wq"].T, cfg.n_heads)
        k = _split_heads(a @ w_eff["wk"].T, cfg.n_heads)
        v = _split_heads(a @ w_eff["wv"].T, cfg.n_heads)
        scores = q @ k.transpose(0, 2, 1) * scale + causal
        attn = _softmax_rows(scores)
        merged = _merge_heads(attn @ v)
        attn_out = merged @ w_eff["wo"].T
        x_mid = x + attn_out

        b, xhat2, inv2 = _layer_norm(x_mid, t[f"{p}.ln2.g"])
        pre = b @ t[f"{p}.ffn.w1"].T + t[f"{p}.ffn.b1"]
        act = _gelu(pre)
        x_out = x_mid + act @ t[f"{p}.ffn.w2"].T + t[f"{p}.ffn.b2"]
        if not np.all(np.isfinite(x_out)):
            raise NumericError(f"non-finite activations in layer {i}", layer=i)
        layer_caches.append(
            {
                "x_in": x, "xhat1": xhat1, "inv1": inv1, "a": a,
                "q": q, "k": k, "v": v, "attn": attn, "merged": merged,
                "x_mid": x_mid, "xhat2": xhat2, "inv2": inv2, "b": b,
                "pre": pre, "act": act, "w_eff": w_eff,
            }
        )
        x = x_out

    h_f, xhat_f, inv_f = _layer_norm(x, t["ln_f.g"])
    logits = h_f @ t["head"].T
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits", layer=None)
    if not want_cache:
        return logits
    cache = {"layers": layer_caches, "h_f": h_f, "xhat_f": xhat_f, "inv_f": inv_f, "scale": scale}
    return logits, cache


def backward(
    dlogits: np.ndarray,
    cache: dict,
    params: LMParams,
    lora: LoraParams | None = None,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients of every LM tensor (and LoRA tensor when present) plus the
    gradient with respect to the input vectors."""
    cfg = params.cfg
    t = params.tensors
    grads: dict[str, np.ndarray] = {}

    grads["head"] = dlogits.T @ cache["h_f"]
    dh_f = dlogits @ t["head"]
    dx, grads["ln_f.g"] = _layer_norm_backward(dh_f, cache["xhat_f"], cache["inv_f"], t["ln_f.g"])

    for i in reversed(range(cfg.n_layers)):
        p = f"layers.{i}"
        c = cache["layers"][i]

        # feed-forward block
        d_act = dx @ t[f"{p}.ffn.w2"]
        grads[f"{p}.ffn.w2"] = dx.T @ c["act"]
        grads[f"{p}.ffn.b2"] = dx.sum(axis=0)
        d_pre = d_act * _gelu_grad(c["pre"])
        grads[f"{p}.ffn.w1"] = d_pre.T @ c["b"]
        grads[f"{p}.ffn.b1"] = d_pre.sum(axis=0)
        d_b = d_pre @ t[f"{p}.ffn.w1"]
        d_ln2, grads[f"{p}.ln2.g"] = _layer_norm_backward(d_b, c["xhat2"], c["inv2"], t[f"{p}.ln2.g"])
        dx_mid = dx + d_ln2

        # attention block
        w_eff = c["w_eff"]
        d_merged = _split_heads(dx_mid @ w_eff["wo"], cfg.n_heads)
        d_wo_eff = dx_mid.T @ c["merged"]
        d_attn = d_merged @ c["v"].transpose(0, 2, 1)
        d_v = c["attn"].transpose(0, 2, 1) @ d_merged
        d_scores = c["attn"] * (d_attn - (d_attn * c["attn"]).sum(axis=-1, keepdims=True))
        d_q = d_scores @ c["k"] * cache["scale"]
        d_k = d_scores.transpose(0, 2, 1) @ c["q"] * cache["scale"]

        a = c["a"]
        d_a = np.zeros_like(a)
        for tgt, d_heads in (("wq", d_q), ("wk", d_k), ("wv", d_v)):
            flat = _merge_heads(d_heads)
            _assign_attn_grads(grads, p, tgt, flat.T @ a, params, lora, i)
            d_a += flat @ w_eff[tgt]
        _assign_attn_grads(grads, p, "wo", d_wo_eff, params, lora, i)

        d_ln1, grads[f"{p}.ln1.g"] = _layer_norm_backward(d_a, c["xhat1"], c["inv1"], t[f"{p}.ln1.g"])
        dx = dx_mid + d_ln1

    return grads, dx


def _assign_attn_grads(grads, prefix, target, d_w_eff, params, lora, layer_idx):
    """Split an effective-weight gradient into base and LoRA parts."""
    grads[f"{prefix}.attn.{target}"] = d_w_eff
    if lora is not None and lora.has(layer_idx, target):
        a_name, b_name = lora.names(layer_idx, target)
        a, b = lora.tensors[a_name], lora.tensors[b_name]
        s = lora.spec.scaling
        grads[a_name] = s * b.T @ d_w_eff
        grads[b_name] = s * d_w_eff @ a.T


def loss_and_grad(
    logits: np.ndarray,
    token_ids: np.ndarray,
    loss_mask: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean masked negative log-likelihood with the shift-by-one convention.

    A masked position i holds a response token predicted by the logits at
    position i - 1; the gradient is (softmax - one_hot) / n_masked on those
    predicting rows and zero elsewhere.
    """
    masked = np.nonzero(loss_mask)[0]
    if masked.size == 0:
        raise ContractError("loss requires at least one masked position")
    if masked[0] == 0:
        raise ContractError("a masked position has no preceding context position")
    rows = logits[masked - 1]
    targets = token_ids[masked]
    if np.any(targets < 0):
        raise ContractError("masked positions must carry target token ids")

    z = rows - rows.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    log_probs = z - log_z
    nll = -log_probs[np.arange(masked.size), targets]
    loss = float(nll.mean())

    d_rows = np.exp(log_probs)
    d_rows[np.arange(masked.size), targets] -= 1.0
    dlogits = np.zeros_like(logits)
    dlogits[masked - 1] = d_rows / masked.size
    return loss, dlogits


def sequence_param_grads(
    seq: EmbeddedSequence,
    d_vectors: np.ndarray,
    params: LMParams,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Route input-vector gradients to the embedding tables and the visual
    tokens."""
    length = seq.length
    d_tok = np.zeros_like(params.tensors["tok_emb"])
    token_positions = np.nonzero(seq.token_ids >= 0)[0]
    np.add.at(d_tok, seq.token_ids[token_positions], d_vectors[token_positions])
    d_pos = np.zeros_like(params.tensors["pos_emb"])
    d_pos[:length] = d_vectors
    d_vis = d_vectors[seq.vis_start: seq.vis_start + seq.vis_len]
    return {"tok_emb": d_tok, "pos_emb": d_pos}, d_vis


def generate(
    prompt: Prompt,
    vis: VisualEmbeddings,
    params: LMParams,
    vocab: Vocabulary,
    lora: LoraParams | None = None,
    strategy: str = "greedy",
    max_new: int = 32,
    temperature: float = 1.0,
    seed: int = 0,
) -> GenerationResult:
    """Decode step by step; greedy takes the argmax (ties break to the
    lowest id), sampling draws from the temperature-scaled distribution
    with a seeded generator.  Stops at EOS or after ``max_new`` tokens."""
    if strategy not in ("greedy", "sample"):
        raise ContractError(f"unknown strategy: {strategy!r}")
    if strategy == "sample" and temperature <= 0:
        raise ContractError("temperature must be positive")
    rng = np.random.default_rng([seed, 401]) if strategy == "sample" else None

    seq = embed_with_visual(prompt, vis, None, params, vocab)
    out: list[int] = []
    truncated = False
    for _ in range(max_new):
        if seq.length >= params.cfg.max_len:
            truncated = True
            break
        logits = forward(seq, params, lora)
        last = logits[-1]
        if strategy == "greedy":
            nxt = int(np.argmax(last))
        else:
            probs = _softmax_rows((last / temperature)[None, :])[0]
            nxt = int(rng.choice(len(probs), p=probs))
        out.append(nxt)
        if nxt == vocab.eos_id:
            break
        seq = append_token(seq, nxt, params)
    return GenerationResult(ids=tuple(out), truncated=truncated)
