"""Dense networks with hand-written gradients, in float64 numpy.

The policy and value networks are small stacks of fully connected layers
with optional layer normalization applied before the activation.  The
backward pass is hand-derived (and pinned against finite differences in
the tests), which keeps the whole learner dependency-free and bit-for-bit
reproducible.

A layer computes  a = f(gain * norm(x W^T + b) + offset)  where norm is
per-sample mean/variance normalization (skipped when layernorm is off) and
f is relu, tanh or identity.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

LN_EPS = 1e-5

_ACTS = ("linear", "relu", "tanh")


class DenseLayer:
    """One affine + (optional) layernorm + activation block."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "relu",
                 layernorm: bool = False, rng: np.random.Generator | None = None,
                 w_scale: float | None = None):
        if activation not in _ACTS:
            raise ValueError(f"unknown activation {activation!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        scale = w_scale if w_scale is not None else 1.0 / np.sqrt(in_dim)
        self.W = rng.uniform(-scale, scale, (out_dim, in_dim))
        self.b = rng.uniform(-scale, scale, out_dim)
        self.activation = activation
        self.layernorm = layernorm
        self.ln_gain = np.ones(out_dim) if layernorm else None
        self.ln_offset = np.zeros(out_dim) if layernorm else None

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def params(self) -> list[np.ndarray]:
        ps = [self.W, self.b]
        if self.layernorm:
            ps += [self.ln_gain, self.ln_offset]
        return ps

    def forward(self, x: np.ndarray):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"input shape {x.shape} incompatible with "
                             f"({'?'}, {self.in_dim}) layer")
        z = x @ self.W.T + self.b
        if self.layernorm:
            mu = z.mean(axis=1, keepdims=True)
            zc = z - mu
            var = np.einsum("bj,bj->b", zc, zc)[:, None] / z.shape[1]
            inv = 1.0 / np.sqrt(var + LN_EPS)
            zhat = zc * inv
            u = self.ln_gain * zhat + self.ln_offset
        else:
            zhat = inv = None
            u = z
        if self.activation == "relu":
            a = np.maximum(u, 0.0)
        elif self.activation == "tanh":
            a = np.tanh(u)
        else:
            a = u
        return a, (x, zhat, inv, u, a)

    def backward(self, cache, dy: np.ndarray):
        x, zhat, inv, u, a = cache
        if self.activation == "relu":
            du = dy * (u > 0.0)
        elif self.activation == "tanh":
            du = dy * (1.0 - a * a)
        else:
            du = dy
        if self.layernorm:
            dgain = (du * zhat).sum(axis=0)
            doffset = du.sum(axis=0)
            dzhat = du * self.ln_gain
            dz = inv * (dzhat
                        - dzhat.mean(axis=1, keepdims=True)
                        - zhat * (dzhat * zhat).mean(axis=1, keepdims=True))
        else:
            dz = du
        grads = [dz.T @ x, dz.sum(axis=0)]
        if self.layernorm:
            grads += [dgain, doffset]
        return grads, dz @ self.W


class Mlp:
    """A chain of DenseLayers with flattened parameter access."""

    def __init__(self, layers: list[DenseLayer]):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError("adjacent layer dimensions do not chain")
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def forward(self, x: np.ndarray):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, caches, dy: np.ndarray):
        grads: list[np.ndarray] = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            layer_grads, dy = layer.backward(cache, dy)
            grads = layer_grads + grads
        return grads, dy

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]


def make_mlp(in_dim: int, hidden: tuple[int, ...], out_dim: int,
             out_activation: str, layernorm: bool, rng: np.random.Generator,
             final_scale: float | None = None) -> Mlp:
    """Relu hidden stack with configurable head activation and init scale."""
    dims = [in_dim, *hidden]
    layers = [DenseLayer(dims[i], dims[i + 1], "relu", layernorm, rng)
              for i in range(len(dims) - 1)]
    layers.append(DenseLayer(dims[-1], out_dim, out_activation, False, rng,
                             w_scale=final_scale))
    return Mlp(layers)


def clone_params(params: list[np.ndarray]) -> list[np.ndarray]:
    return [p.copy() for p in params]


def copy_into(dst: list[np.ndarray], src: list[np.ndarray]) -> None:
    for d, s in zip(dst, src):
        d[...] = s


def polyak_blend(target: list[np.ndarray], main: list[np.ndarray], tau: float) -> None:
    """In-place convex blend target <- tau * main + (1 - tau) * target."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    for t, m in zip(target, main):
        t *= (1.0 - tau)
        t += tau * m


class Adam:
    """Adaptive-moment optimizer over a parameter list.

    Moments live in one flat buffer (per-tensor views are tiny here and the
    update runs every environment step, so fusing the arithmetic into a few
    long vector ops matters).
    """

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._layout = []
        off = 0
        for p in params:
            self._layout.append((off, p.size, p.shape))
            off += p.size
        self.m = np.zeros(off)
        self.v = np.zeros(off)
        self._g = np.empty(off)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(self._layout) or len(grads) != len(self._layout):
            raise ValueError("parameter/gradient structure does not match optimizer state")
        g = self._g
        for grad, (off, size, shape) in zip(grads, self._layout):
            if grad.shape != shape:
                raise ValueError(f"gradient shape {grad.shape} != parameter shape {shape}")
            g[off:off + size] = grad.ravel()
        if not np.all(np.isfinite(g)):
            bad = int(np.flatnonzero(~np.isfinite(g))[0])
            raise FloatingPointError(
                f"non-finite gradient at flat index {bad} (value {g[bad]})")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * g
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * g * g
        upd = (self.lr / bc1) * self.m / (np.sqrt(self.v / bc2) + self.eps)
        for p, (off, size, shape) in zip(params, self._layout):
            p -= upd[off:off + size].reshape(shape)

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {"t": np.array([float(self.t)]), "m": self.m, "v": self.v}

    def load_state_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        self.t = int(tensors["t"][0])
        if tensors["m"].shape != self.m.shape:
            raise ValueError("optimizer state size mismatch (architecture changed)")
        self.m[...] = tensors["m"]
        self.v[...] = tensors["v"]


# ---------------------------------------------------------------------------
# checkpoint format
# ---------------------------------------------------------------------------
# Little-endian: magic "RISTNSR1", uint64 tensor count, then per tensor
# (sorted by name): uint32 name length, utf-8 name, uint8 ndim,
# int64 dims, float64 row-major data.  Loading into a mismatched
# architecture fails on the shape comparison.

_MAGIC = b"RISTNSR1"


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<Q", len(tensors)))
        for name in sorted(tensors):
            arr = np.ascontiguousarray(tensors[name], dtype="<f8")
            enc = name.encode("utf-8")
            f.write(struct.pack("<I", len(enc)))
            f.write(enc)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}q", *arr.shape))
            f.write(arr.tobytes())


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    (count,) = struct.unpack_from("<Q", raw, 8)
    off = 16
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<I", raw, off)
        off += 4
        name = raw[off:off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}q", raw, off)
        off += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        out[name] = np.frombuffer(raw, dtype="<f8", count=size, offset=off
                                  ).reshape(shape).astype(float)
        off += 8 * size
    return out


def assign_params(params: list[np.ndarray], tensors: dict[str, np.ndarray],
                  prefix: str) -> None:
    """Copy named tensors prefix/0..n into a parameter list, shapes checked."""
    for i, p in enumerate(params):
        key = f"{prefix}/{i}"
        if key not in tensors:
            raise ValueError(f"checkpoint missing tensor {key}")
        if tensors[key].shape != p.shape:
            raise ValueError(
                f"checkpoint tensor {key} has shape {tensors[key].shape}, "
                f"expected {p.shape} (architecture mismatch)")
        p[...] = tensors[key]


def named_params(params: list[np.ndarray], prefix: str) -> dict[str, np.ndarray]:
    return {f"{prefix}/{i}": p for i, p in enumerate(params)}
