"""Parameterized building blocks: linear, layer norm, transformer block.

Every block exposes `parameters()` as an ordered {name: Tensor} mapping;
composites prefix child names with dots.  Weight matrices draw from
Xavier-uniform (gain 1) unless explicitly zero-initialized; biases start at
zero.  Initialization consumes a dedicated RNG child stream per tensor, so
adding one block never shifts another block's draws.
"""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError
from .rng import Stream

__all__ = ["xavier_uniform", "Linear", "LayerNorm", "TransformerBlock",
           "set_trainable", "parameter_vector_norms"]


def xavier_uniform(stream: Stream, fan_in: int, fan_out: int,
                   shape: tuple[int, ...]) -> np.ndarray:
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return stream.uniform(shape, low=-limit, high=limit)


class Linear:
    """y = x @ w + b with w: [d_in, d_out]."""

    def __init__(self, stream: Stream, d_in: int, d_out: int,
                 zero_init: bool = False):
        if zero_init:
            w = np.zeros((d_in, d_out))
        else:
            w = xavier_uniform(stream.child("w"), d_in, d_out, (d_in, d_out))
        self.w = Tensor(w, requires_grad=True)
        self.b = Tensor(np.zeros(d_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return ad.add_bias(ad.matmul(x, self.w), self.b)

    def parameters(self) -> dict[str, Tensor]:
        return {"w": self.w, "b": self.b}


class LayerNorm:
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gain = Tensor(np.ones(dim), requires_grad=True)
        self.shift = Tensor(np.zeros(dim), requires_grad=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ad.layernorm(x, self.gain, self.shift, eps=self.eps)

    def parameters(self) -> dict[str, Tensor]:
        return {"g": self.gain, "b": self.shift}


class TransformerBlock:
    """Pre-norm block: x + MHSA(LN(x)), then + MLP(LN(.)).

    Operates on [batch, tokens, dim]; attention is bidirectional.
    """

    def __init__(self, stream: Stream, dim: int, heads: int, mlp_ratio: int):
        if dim % heads != 0:
            raise ShapeError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        hidden = mlp_ratio * dim
        self.ln1 = LayerNorm(dim)
        self.qkv = Linear(stream.child("qkv"), dim, 3 * dim)
        self.proj = Linear(stream.child("proj"), dim, dim)
        self.ln2 = LayerNorm(dim)
        self.fc1 = Linear(stream.child("fc1"), dim, hidden)
        self.fc2 = Linear(stream.child("fc2"), hidden, dim)

    def attention_weights(self, x: Tensor) -> Tensor:
        """Softmax attention matrix [batch, heads, tokens, tokens]."""
        q, k, _ = self._qkv_heads(x)
        scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))),
                          1.0 / np.sqrt(self.head_dim))
        return ad.softmax(scores)

    def _qkv_heads(self, x: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        n, t, _ = x.shape
        packed = self.qkv(x)  # [n, t, 3*dim]
        split = ad.reshape(packed, (n, t, 3, self.heads, self.head_dim))
        arranged = ad.transpose(split, (2, 0, 3, 1, 4))  # [3, n, heads, t, hd]
        return (ad.select(arranged, 0, 0), ad.select(arranged, 0, 1),
                ad.select(arranged, 0, 2))

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 3 or x.shape[2] != self.dim:
            raise ShapeError(f"block expects [batch, tokens, {self.dim}], got {x.shape}")
        n, t, d = x.shape
        normed = self.ln1(x)
        q, k, v = self._qkv_heads(normed)
        scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))),
                          1.0 / np.sqrt(self.head_dim))
        mixed = ad.matmul(ad.softmax(scores), v)  # [n, heads, t, hd]
        merged = ad.reshape(ad.transpose(mixed, (0, 2, 1, 3)), (n, t, d))
        x = ad.add(x, self.proj(merged))
        x = ad.add(x, self.fc2(ad.gelu(self.fc1(self.ln2(x)))))
        return x

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for prefix, mod in (("ln1", self.ln1), ("qkv", self.qkv), ("proj", self.proj),
                            ("ln2", self.ln2), ("fc1", self.fc1), ("fc2", self.fc2)):
            for name, tensor in mod.parameters().items():
                out[f"{prefix}.{name}"] = tensor
        return out

    def mac_count(self, tokens: int) -> int:
        """Multiply-accumulates of one forward pass at `tokens` tokens.

        Counted by enumerating every matmul in __call__ (a [m,k]@[k,n]
        product is m*k*n MACs); nonlinearities and norms are excluded.
        """
        t, d, hd = tokens, self.dim, self.head_dim
        total = t * d * (3 * d)                 # qkv projection
        total += self.heads * t * hd * t        # attention scores
        total += self.heads * t * t * hd        # attention-weighted values
        total += t * d * d                      # output projection
        hidden = self.fc1.w.shape[1]
        total += t * d * hidden + t * hidden * d  # MLP
        return total


def set_trainable(params: dict[str, Tensor], flag: bool) -> None:
    for tensor in params.values():
        tensor.requires_grad = flag
        if not flag:
            tensor.grad = None


def parameter_vector_norms(params: dict[str, Tensor]) -> dict[str, float]:
    return {name: float(np.linalg.norm(t.data)) for name, t in params.items()}
