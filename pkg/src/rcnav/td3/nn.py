"""Small fully-connected networks with hand-written backprop, plus Adam."""

from __future__ import annotations

import numpy as np

ACTIVATIONS = ("linear", "tanh")


class Mlp:
    """ReLU hidden layers, linear or tanh output.

    Weights are stored as (fan_in, fan_out) so a batch ``x`` of shape
    (n, fan_in) maps to ``x @ W + b``. Parameters default to float32; the
    gradient check builds float64 nets so finite differences are meaningful.
    """

    def __init__(self, dims, output: str = "linear", rng: np.random.Generator | None = None,
                 dtype=np.float32):
        dims = [int(d) for d in dims]
        if len(dims) < 2 or min(dims) < 1:
            raise ValueError(f"bad layer dims {dims}")
        if output not in ACTIVATIONS:
            raise ValueError(f"unknown output activation {output!r}")
        self.dims = dims
        self.output = output
        self.dtype = np.dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(self.dtype))
            self.biases.append(rng.uniform(-bound, bound, fan_out).astype(self.dtype))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> Mlp:
        new = Mlp.__new__(Mlp)
        new.dims = list(self.dims)
        new.output = self.output
        new.dtype = self.dtype
        new.weights = [w.copy() for w in self.weights]
        new.biases = [b.copy() for b in self.biases]
        return new

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[-1] != self.dims[0]:
            raise ValueError(f"input has {x.shape[-1]} features, network expects {self.dims[0]}")
        return x

    def forward(self, x) -> np.ndarray:
        return self.forward_cached(x)[0]

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)

    def forward_cached(self, x):
        """Forward pass that also returns what :meth:`backward` needs."""
        h = self._check(x)
        single = h.ndim == 1
        if single:
            h = h[None, :]
        inputs = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            if i < last:
                h = np.maximum(z, 0)
            elif self.output == "tanh":
                h = np.tanh(z)
            else:
                h = z
        cache = (inputs, h, single)
        return (h[0] if single else h), cache

    def backward(self, cache, grad_out):
        """Returns (parameter grads in :attr:`params` order, grad wrt input)."""
        inputs, out, single = cache
        g = np.asarray(grad_out, dtype=self.dtype)
        if single:
            g = g[None, :]
        if self.output == "tanh":
            g = g * (1 - out * out)
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            x = inputs[i]
            grads.append(g.sum(axis=0))
            grads.append(x.T @ g)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (x > 0)  # x is the previous layer's ReLU output
        grads.reverse()
        return grads, (g[0] if single else g)


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 3e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        step = self.lr / c1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * (g * g)
            denom = np.sqrt(v * (1.0 / c2))
            denom += self.eps
            p -= step * m / denom
