"""Dense feedforward Q-value networks with exact reverse-mode gradients.

Two architectures: a plain net mapping the six state features through
three ReLU hidden layers of 64 units to the three action values, and a
two-stream variant whose state-value and per-action-advantage heads are
combined as Q(s, a) = V(s) + A(s, a) - mean_a A(s, a), pinning the mean
advantage to zero so the decomposition is identifiable.

All math is float64: these networks are tiny, so gradient checks against
central finite differences stay reliable. ReLU's subgradient at exactly
zero is taken as zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

STATE_DIM = 6
ACTION_DIM = 3
HIDDEN = 64

CHECKPOINT_MAGIC = b"SENTIQ-NET-1\n"


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass
class DenseLayer:
    """One affine layer: y = act(W x + b), activation relu or identity."""

    weights: np.ndarray     # (out, in)
    biases: np.ndarray      # (out,)
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ValueError("weight/bias shape mismatch")


def _he_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class MLP:
    """Stack of dense layers with cached forward and exact backward."""

    def __init__(self, sizes: Sequence[int], activations: Sequence[str],
                 rng: np.random.Generator) -> None:
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        self.layers = [
            DenseLayer(
                weights=_he_uniform(rng, sizes[i + 1], sizes[i]),
                biases=np.zeros(sizes[i + 1]),
                activation=activations[i],
            )
            for i in range(len(sizes) - 1)
        ]

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Forward pass keeping (input, pre-activation) pairs per layer.

        Accepts a single sample (in,) or a batch (B, in).
        """
        cache = []
        h = np.asarray(x, dtype=float)
        for layer in self.layers:
            z = h @ layer.weights.T + layer.biases
            cache.append((h, z))
            h = np.maximum(z, 0.0) if layer.activation == "relu" else z
        return h, cache

    def backward(self, cache: list, grad_out: np.ndarray,
                 ) -> tuple[list[np.ndarray], np.ndarray]:
        """Backpropagate grad_out; returns (parameter grads, input grad).

        Parameter grads align with :meth:`parameters`. Batched inputs sum
        gradients over the batch; put any 1/B factor into grad_out.
        """
        grads: list[np.ndarray] = [None] * (2 * len(self.layers))  # type: ignore
        delta = np.asarray(grad_out, dtype=float)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            h_in, z = cache[i]
            if layer.activation == "relu":
                delta = delta * (z > 0.0)
            if delta.ndim == 1:
                grads[2 * i] = np.outer(delta, h_in)
                grads[2 * i + 1] = delta.copy()
            else:
                grads[2 * i] = delta.T @ h_in
                grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ layer.weights
        return grads, delta

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.biases)
        return params

    def layer_spec(self) -> list[list]:
        return [[int(l.weights.shape[0]), int(l.weights.shape[1]), l.activation]
                for l in self.layers]


def mse_loss(q_pred: np.ndarray, action: int, target: float,
             ) -> tuple[float, np.ndarray]:
    """Squared error on the taken action's Q-value, other outputs masked.

    Returns (loss, gradient w.r.t. the predicted Q-vector).
    """
    if not 0 <= action < len(q_pred):
        raise ValueError(f"action {action} out of range")
    diff = q_pred[action] - target
    grad = np.zeros_like(q_pred)
    grad[action] = 2.0 * diff
    return float(diff * diff), grad


class QNetwork:
    """Plain Q-network: 6 inputs, three ReLU hidden layers of 64, 3 outputs."""

    kind = "q"

    def __init__(self, seed: int | np.random.Generator = 0) -> None:
        rng = _as_rng(seed)
        self.net = MLP([STATE_DIM, HIDDEN, HIDDEN, HIDDEN, ACTION_DIM],
                       ["relu", "relu", "relu", "identity"], rng)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.net.forward(x)

    def parameters(self) -> list[np.ndarray]:
        return self.net.parameters()

    def backward(self, x: np.ndarray, action: int, target: float,
                 ) -> tuple[float, list[np.ndarray]]:
        q, cache = self.net.forward_cached(x)
        loss, grad_q = mse_loss(q, action, target)
        grads, _ = self.net.backward(cache, grad_q)
        return loss, grads

    def backward_batch(self, xs: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
        """Mean-MSE gradients over a batch; equals averaging per-sample grads."""
        q, cache = self.net.forward_cached(xs)
        rows = np.arange(len(actions))
        diff = q[rows, actions] - targets
        grad_q = np.zeros_like(q)
        grad_q[rows, actions] = 2.0 * diff / len(actions)
        grads, _ = self.net.backward(cache, grad_q)
        return float(np.mean(diff * diff)), grads

    def clone(self) -> "QNetwork":
        other = QNetwork(seed=0)
        other.copy_from(self)
        return other

    def copy_from(self, source: "QNetwork") -> None:
        for dst, src in zip(self.parameters(), source.parameters()):
            np.copyto(dst, src)

    def spec(self) -> dict:
        return {"kind": self.kind, "layers": self.net.layer_spec()}


class DuelingQNetwork:
    """Two-stream Q-network with the mean-advantage subtraction combine.

    Shared trunk 6 -> 64 -> 64 feeding a value head 64 -> 64 -> 1 and an
    advantage head 64 -> 64 -> 3; every forward satisfies
    mean_a(Q(s, a) - V(s)) == 0. Parameter count: 4608 (trunk) + 4225
    (value) + 4355 (advantage) = 13188, versus 8963 for the plain net.
    """

    kind = "dueling"

    def __init__(self, seed: int | np.random.Generator = 0) -> None:
        rng = _as_rng(seed)
        self.trunk = MLP([STATE_DIM, HIDDEN, HIDDEN], ["relu", "relu"], rng)
        self.value = MLP([HIDDEN, HIDDEN, 1], ["relu", "identity"], rng)
        self.advantage = MLP([HIDDEN, HIDDEN, ACTION_DIM], ["relu", "identity"], rng)

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.trunk.forward(x)
        v = self.value.forward(h)
        a = self.advantage.forward(h)
        if a.ndim == 1:
            return v[0] + a - a.mean()
        return v + a - a.mean(axis=1, keepdims=True)

    def state_value(self, x: np.ndarray) -> float:
        """The value head alone, for inspecting the V/A decomposition."""
        return float(self.value.forward(self.trunk.forward(x))[0])

    def parameters(self) -> list[np.ndarray]:
        return (self.trunk.parameters() + self.value.parameters()
                + self.advantage.parameters())

    def _backward_from_grad_q(self, caches, grad_q: np.ndarray) -> list[np.ndarray]:
        trunk_cache, value_cache, adv_cache = caches
        if grad_q.ndim == 1:
            grad_v = np.array([grad_q.sum()])
            grad_a = grad_q - grad_q.mean()
        else:
            grad_v = grad_q.sum(axis=1, keepdims=True)
            grad_a = grad_q - grad_q.mean(axis=1, keepdims=True)
        value_grads, grad_h_v = self.value.backward(value_cache, grad_v)
        adv_grads, grad_h_a = self.advantage.backward(adv_cache, grad_a)
        trunk_grads, _ = self.trunk.backward(trunk_cache, grad_h_v + grad_h_a)
        return trunk_grads + value_grads + adv_grads

    def _forward_cached(self, x: np.ndarray):
        h, trunk_cache = self.trunk.forward_cached(x)
        v, value_cache = self.value.forward_cached(h)
        a, adv_cache = self.advantage.forward_cached(h)
        if a.ndim == 1:
            q = v[0] + a - a.mean()
        else:
            q = v + a - a.mean(axis=1, keepdims=True)
        return q, (trunk_cache, value_cache, adv_cache)

    def backward(self, x: np.ndarray, action: int, target: float,
                 ) -> tuple[float, list[np.ndarray]]:
        q, caches = self._forward_cached(x)
        loss, grad_q = mse_loss(q, action, target)
        return loss, self._backward_from_grad_q(caches, grad_q)

    def backward_batch(self, xs: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
        q, caches = self._forward_cached(xs)
        rows = np.arange(len(actions))
        diff = q[rows, actions] - targets
        grad_q = np.zeros_like(q)
        grad_q[rows, actions] = 2.0 * diff / len(actions)
        return float(np.mean(diff * diff)), self._backward_from_grad_q(caches, grad_q)

    def clone(self) -> "DuelingQNetwork":
        other = DuelingQNetwork(seed=0)
        other.copy_from(self)
        return other

    def copy_from(self, source: "DuelingQNetwork") -> None:
        for dst, src in zip(self.parameters(), source.parameters()):
            np.copyto(dst, src)

    def spec(self) -> dict:
        return {"kind": self.kind,
                "layers": {"trunk": self.trunk.layer_spec(),
                           "value": self.value.layer_spec(),
                           "advantage": self.advantage.layer_spec()}}


AnyQNetwork = QNetwork | DuelingQNetwork


@dataclass
class AdamState:
    """First/second moment estimates and step counter for Adam."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: Sequence[np.ndarray], lr: float = 1e-3,
             beta1: float = 0.9, beta2: float = 0.999,
             eps: float = 1e-8) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              state: AdamState) -> AdamState:
    """One bias-corrected Adam update, applied to params in place."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("params/grads/state length mismatch")
    state.t += 1
    b1t = 1.0 - state.beta1 ** state.t
    b2t = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / b1t) / (np.sqrt(v / b2t) + state.eps)
    return state


def gradient_check(net: AnyQNetwork, x: np.ndarray, action: int, target: float,
                   h: float = 1e-5,
                   sample: int | None = None,
                   rng: np.random.Generator | None = None) -> float:
    """Max relative error between backprop and central finite differences.

    Perturbs parameters one at a time; ``sample`` limits the check to that
    many randomly chosen parameters (all of them when None). The relative
    error uses a unit absolute floor, |a - fd| / max(1, |a|, |fd|), so
    finite-difference roundoff on near-zero gradients does not dominate.
    """
    _, analytic = net.backward(x, action, target)
    params = net.parameters()
    sizes = [p.size for p in params]
    total = sum(sizes)
    if sample is None or sample >= total:
        indices = np.arange(total)
    else:
        indices = (rng or np.random.default_rng(0)).choice(
            total, size=sample, replace=False)
    offsets = np.cumsum([0] + sizes)

    def loss_at() -> float:
        q = net.forward(x)
        return float((q[action] - target) ** 2)

    worst = 0.0
    for flat in indices:
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        local = int(flat - offsets[which])
        p = params[which]
        original = p.flat[local]
        p.flat[local] = original + h
        plus = loss_at()
        p.flat[local] = original - h
        minus = loss_at()
        p.flat[local] = original
        fd = (plus - minus) / (2.0 * h)
        an = analytic[which].flat[local]
        err = abs(an - fd) / max(1.0, abs(an), abs(fd))
        worst = max(worst, err)
    return worst


def save_checkpoint(net: AnyQNetwork, path: str | Path,
                    extra: dict | None = None) -> None:
    """Write a deterministic binary checkpoint.

    Layout: magic line, a JSON header (format version, architecture spec,
    shapes, caller extras), then each parameter array as little-endian
    float64 in row-major order. Identical networks serialize to identical
    bytes, so checkpoints can be compared with plain file equality.
    """
    params = net.parameters()
    header = {
        "format": 1,
        "spec": net.spec(),
        "shapes": [list(p.shape) for p in params],
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True, ensure_ascii=True).encode("ascii")
    with Path(path).open("wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(len(blob).to_bytes(8, "little"))
        handle.write(blob)
        for p in params:
            handle.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[AnyQNetwork, dict]:
    """Rebuild a network from :func:`save_checkpoint` output.

    Returns (network, extra); the restored network's forward outputs are
    bit-identical to the saved one's.
    """
    with Path(path).open("rb") as handle:
        magic = handle.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a network checkpoint")
        size = int.from_bytes(handle.read(8), "little")
        header = json.loads(handle.read(size).decode("ascii"))
        if header.get("format") != 1:
            raise ValueError(f"{path}: unsupported checkpoint format")
        kind = header["spec"]["kind"]
        net: AnyQNetwork
        if kind == "q":
            net = QNetwork(seed=0)
        elif kind == "dueling":
            net = DuelingQNetwork(seed=0)
        else:
            raise ValueError(f"{path}: unknown network kind {kind!r}")
        if net.spec() != header["spec"]:
            raise ValueError(f"{path}: architecture mismatch")
        for p, shape in zip(net.parameters(), header["shapes"]):
            if list(p.shape) != shape:
                raise ValueError(f"{path}: shape mismatch {shape}")
            raw = handle.read(p.size * 8)
            np.copyto(p, np.frombuffer(raw, dtype="<f8").reshape(p.shape))
    return net, header["extra"]
