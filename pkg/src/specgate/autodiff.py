"""Tape-based reverse-mode automatic differentiation over float64 arrays.

Design rules, enforced everywhere:

- A `Tensor` wraps a C-contiguous float64 numpy array.  Ops never mutate
  their inputs; every op allocates fresh output storage.
- Recording is define-by-run: each op appends one node to the global tape.
  `backward(loss)` walks the tape once in reverse execution order and
  accumulates gradients additively into `Tensor.grad`, then resets the tape.
- There is no silent broadcasting.  Binary elementwise ops require equal
  shapes; the only shape-bending ops are the explicit ones (`add_bias`,
  `repeat0`, `matmul` with a shared right operand).
- Every op output is checked for NaN/Inf and raises `NumericsError` on the
  first non-finite value, naming the op.

Gradients of non-differentiable corner points (|x| at 0 etc.) do not arise:
the op set is smooth except `select`/`reshape`-style data movement.
"""
from __future__ import annotations

import contextlib

import numpy as np

from .errors import NumericsError, ShapeError

__all__ = [
    "Tensor", "no_grad", "backward", "tape_size", "reset_tape",
    "matmul", "add", "sub", "mul", "add_bias", "scale", "add_scalar",
    "sigmoid", "gelu", "exp", "log", "tanh", "softmax", "layernorm",
    "concat", "reshape", "transpose", "repeat0", "select", "mean",
    "bce_with_logits", "softmax_cross_entropy",
]


def _ensure_finite(arr: np.ndarray, op: str) -> None:
    if not np.isfinite(arr).all():
        raise NumericsError(f"non-finite value produced by op '{op}'")


# Overflow/invalid results are converted to NumericsError by _ensure_finite;
# numpy's own warnings for them are redundant noise.
_quiet = {"over": "ignore", "invalid": "ignore", "divide": "ignore"}


class Tensor:
    """A float64 array plus an optional accumulated gradient."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        _ensure_finite(arr, "tensor")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # Small amount of operator sugar used by tests; model code calls the
    # module functions directly.
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


# --- tape machinery ---------------------------------------------------------

_NODES: list[tuple[Tensor, object]] = []
_GRAD_ENABLED = True


def tape_size() -> int:
    return len(_NODES)


def reset_tape() -> None:
    _NODES.clear()


@contextlib.contextmanager
def no_grad():
    """Disable recording; forwards run but produce untracked tensors."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _track(inputs: tuple[Tensor, ...]) -> bool:
    return _GRAD_ENABLED and any(t.requires_grad for t in inputs)


def _record(out: Tensor, back) -> None:
    if out.requires_grad:
        _NODES.append((out, back))


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(tensor) into .grad for every tracked tensor.

    The tape is consumed: a second backward needs a fresh forward pass.
    """
    if loss.data.shape != ():
        raise ShapeError(f"backward requires a scalar, got shape {loss.data.shape}")
    if not loss.requires_grad:
        reset_tape()
        raise NumericsError("backward on a tensor that tracks no parameters")
    try:
        loss.grad = np.ones((), dtype=np.float64)
        for out, back in reversed(_NODES):
            if out.grad is not None:
                back(out.grad)
    finally:
        reset_tape()


# --- ops --------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a @ b.  Either both operands are stacked with identical leading axes,
    or `b` is a single 2-D matrix shared across `a`'s leading axes."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs >=2-D operands, got {a.shape} @ {b.shape}")
    if b.ndim != 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul leading axes differ: {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data
    _ensure_finite(out_data, "matmul")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((a, b))

    def back(g: np.ndarray) -> None:
        if a.requires_grad:
            _accum(a, g @ np.swapaxes(b.data, -1, -2))
        if b.requires_grad:
            if b.ndim == 2 and a.ndim > 2:
                _accum(b, a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1]))
            else:
                _accum(b, np.swapaxes(a.data, -1, -2) @ g)

    _record(out, back)
    return out


def _make_elementwise_binary(name: str, fwd, da, db):
    def op(a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"{name} requires equal shapes, got {a.shape} and {b.shape}")
        with np.errstate(**_quiet):
            out_data = fwd(a.data, b.data)
        _ensure_finite(out_data, name)
        out = Tensor.__new__(Tensor)
        out.data, out.grad, out.requires_grad = out_data, None, _track((a, b))

        def back(g: np.ndarray) -> None:
            if a.requires_grad:
                _accum(a, da(g, a.data, b.data))
            if b.requires_grad:
                _accum(b, db(g, a.data, b.data))

        _record(out, back)
        return out

    op.__name__ = name
    return op


add = _make_elementwise_binary(
    "add", lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g)
sub = _make_elementwise_binary(
    "sub", lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g)
mul = _make_elementwise_binary(
    "mul", lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x)


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """x + bias where bias.shape equals a trailing suffix of x.shape.

    This is the one sanctioned broadcast: the bias is repeated over the
    leading axes, and its gradient sums over them.
    """
    k = bias.ndim
    if k == 0 or k > x.ndim or x.shape[x.ndim - k:] != bias.shape:
        raise ShapeError(f"bias shape {bias.shape} is not a suffix of {x.shape}")
    out_data = x.data + bias.data
    _ensure_finite(out_data, "add_bias")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x, bias))
    lead = tuple(range(x.ndim - k))

    def back(g: np.ndarray) -> None:
        if x.requires_grad:
            _accum(x, g)
        if bias.requires_grad:
            _accum(bias, g.sum(axis=lead) if lead else g)

    _record(out, back)
    return out


def _make_unary(name: str, fwd, dfn):
    def op(x: Tensor) -> Tensor:
        with np.errstate(**_quiet):
            out_data = fwd(x.data)
        _ensure_finite(out_data, name)
        out = Tensor.__new__(Tensor)
        out.data, out.grad, out.requires_grad = out_data, None, _track((x,))

        def back(g: np.ndarray) -> None:
            _accum(x, g * dfn(x.data, out_data))

        _record(out, back)
        return out

    op.__name__ = name
    return op


def _sigmoid_fwd(x: np.ndarray) -> np.ndarray:
    # Evaluate on the sign-split branches so exp never overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_fwd(x: np.ndarray) -> np.ndarray:
    if (x <= 0.0).any():
        raise NumericsError("log of a non-positive value")
    return np.log(x)


sigmoid = _make_unary("sigmoid", _sigmoid_fwd, lambda x, y: y * (1.0 - y))
exp = _make_unary("exp", np.exp, lambda x, y: y)
log = _make_unary("log", _log_fwd, lambda x, y: 1.0 / x)
tanh = _make_unary("tanh", np.tanh, lambda x, y: 1.0 - y * y)

_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715


def _gelu_fwd(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + _GELU_A * x ** 3)))


def _gelu_grad(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    t = np.tanh(_GELU_C * (x + _GELU_A * x ** 3))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)


gelu = _make_unary("gelu", _gelu_fwd, _gelu_grad)


def scale(x: Tensor, c: float) -> Tensor:
    """x * c for a plain python scalar c."""
    c = float(c)
    out_data = x.data * c
    _ensure_finite(out_data, "scale")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))
    _record(out, lambda g: _accum(x, g * c))
    return out


def add_scalar(x: Tensor, c: float) -> Tensor:
    """x + c for a plain python scalar c."""
    out_data = x.data + float(c)
    _ensure_finite(out_data, "add_scalar")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))
    _record(out, lambda g: _accum(x, g))
    return out


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, computed around the row max."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)
    _ensure_finite(out_data, "softmax")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))

    def back(g: np.ndarray) -> None:
        s = out.data
        _accum(x, s * (g - (g * s).sum(axis=-1, keepdims=True)))

    _record(out, back)
    return out


def layernorm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    d = x.shape[-1]
    if gain.shape != (d,) or shift.shape != (d,):
        raise ShapeError(f"layernorm affine params must have shape ({d},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out_data = xhat * gain.data + shift.data
    _ensure_finite(out_data, "layernorm")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x, gain, shift))
    lead = tuple(range(x.ndim - 1))

    def back(g: np.ndarray) -> None:
        if gain.requires_grad:
            _accum(gain, (g * xhat).sum(axis=lead) if lead else g * xhat)
        if shift.requires_grad:
            _accum(shift, g.sum(axis=lead) if lead else g)
        if x.requires_grad:
            gx_hat = g * gain.data
            term = gx_hat - gx_hat.mean(axis=-1, keepdims=True) \
                - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True)
            _accum(x, term * inv)

    _record(out, back)
    return out


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    """Concatenate along an existing axis; all other extents must agree."""
    if not tensors:
        raise ShapeError("concat of an empty list")
    shapes = [t.shape for t in tensors]
    base = list(shapes[0])
    for s in shapes[1:]:
        if len(s) != len(base) or any(
                i != (axis % len(base)) and s[i] != base[i] for i in range(len(base))):
            raise ShapeError(f"concat shapes incompatible along axis {axis}: {shapes}")
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    _ensure_finite(out_data, "concat")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track(tuple(tensors))
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g: np.ndarray) -> None:
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    _record(out, back)
    return out


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Row-major reinterpretation; total size must be preserved."""
    out_data = x.data.reshape(shape).copy()
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))
    _record(out, lambda g: _accum(x, g.reshape(x.shape)))
    return out


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    """Permute axes; gradient applies the inverse permutation."""
    out_data = np.ascontiguousarray(np.transpose(x.data, axes))
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))
    inv = np.argsort(axes)

    _record(out, lambda g: _accum(x, np.transpose(g, inv)))
    return out


def repeat0(x: Tensor, n: int) -> Tensor:
    """Stack n copies of x along a new leading axis: shape -> (n, *x.shape)."""
    if n <= 0:
        raise ShapeError(f"repeat0 needs n >= 1, got {n}")
    out_data = np.broadcast_to(x.data, (n,) + x.shape).copy()
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))
    _record(out, lambda g: _accum(x, g.sum(axis=0)))
    return out


def select(x: Tensor, axis: int, index: int) -> Tensor:
    """Extract one slice along `axis` (the axis disappears)."""
    if not (-x.ndim <= axis < x.ndim):
        raise ShapeError(f"select axis {axis} out of range for shape {x.shape}")
    if not (0 <= index < x.shape[axis]):
        raise ShapeError(f"select index {index} out of range for shape {x.shape}")
    out_data = np.take(x.data, index, axis=axis).copy()
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))

    def back(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        sl = [slice(None)] * x.ndim
        sl[axis] = index
        full[tuple(sl)] = g
        _accum(x, full)

    _record(out, back)
    return out


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    """Mean over one axis, or over all elements when axis is None."""
    if axis is None:
        out_data = np.asarray(x.data.mean())
        count = x.size
    else:
        out_data = x.data.mean(axis=axis)
        count = x.shape[axis]
    _ensure_finite(out_data, "mean")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((x,))

    def back(g: np.ndarray) -> None:
        if axis is None:
            _accum(x, np.full(x.shape, float(g) / count))
        else:
            _accum(x, np.expand_dims(g, axis).repeat(count, axis=axis) / count)

    _record(out, back)
    return out


def bce_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross-entropy, evaluated from logits for stability.

    per-element loss = max(z, 0) - z*y + log(1 + exp(-|z|)).
    """
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeError(f"targets shape {y.shape} != logits shape {logits.shape}")
    if y.size == 0:
        raise ShapeError("bce_with_logits on empty batch")
    z = logits.data
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out_data = np.asarray(per.mean())
    _ensure_finite(out_data, "bce_with_logits")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((logits,))

    def back(g: np.ndarray) -> None:
        _accum(logits, (float(g) / y.size) * (_sigmoid_fwd(z) - y))

    _record(out, back)
    return out


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy between row softmax and integer class labels."""
    idx = np.asarray(labels)
    if logits.ndim != 2 or idx.shape != (logits.shape[0],):
        raise ShapeError(
            f"softmax_cross_entropy needs [n, c] logits and [n] labels, "
            f"got {logits.shape} and {idx.shape}")
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    picked = z[np.arange(z.shape[0]), idx]
    out_data = np.asarray((lse - picked).mean())
    _ensure_finite(out_data, "softmax_cross_entropy")
    out = Tensor.__new__(Tensor)
    out.data, out.grad, out.requires_grad = out_data, None, _track((logits,))

    def back(g: np.ndarray) -> None:
        soft = np.exp(z - zmax)
        soft /= soft.sum(axis=1, keepdims=True)
        soft[np.arange(z.shape[0]), idx] -= 1.0
        _accum(logits, (float(g) / z.shape[0]) * soft)

    _record(out, back)
    return out
