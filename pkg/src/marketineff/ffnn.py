"""Small feed-forward network trained with ADAM on mean squared error.

Each layer's weight matrix has shape (fan_in + 1, fan_out); the last row
holds the weights of the bias neuron, whose output is the constant 1.
Backpropagation and the ADAM update are compiled with numba because the
walk-forward backtest retrains two networks every day.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import ShapeError

LOGISTIC, TANH, LINEAR = 0, 1, 2
_CODES = {"logistic": LOGISTIC, "tanh": TANH, "linear": LINEAR}
LECUN_A, LECUN_B = 1.7159, 2.0 / 3.0
BATCH_SIZE = 20
CHECKPOINT_MAGIC = "marketineff-ffnn"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Activation:
    """``logistic`` 1/(1+e^-z), ``tanh`` a*tanh(b*z) or ``linear`` z."""

    kind: str = "tanh"
    a: float = LECUN_A
    b: float = LECUN_B

    def __post_init__(self):
        if self.kind not in _CODES:
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.kind == "tanh" and not (self.a > 0 and self.b > 0):
            raise ValueError("tanh activation needs a > 0 and b > 0")

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return _activate(z.reshape(1, -1), self.code, self.a, self.b).reshape(z.shape)


@dataclass
class Network:
    layer_sizes: tuple
    weights: list
    activations: tuple

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        self.activations = tuple(self.activations)
        if len(self.layer_sizes) < 2:
            raise ShapeError("a network needs at least an input and an output layer")
        if len(self.weights) != len(self.layer_sizes) - 1:
            raise ShapeError("one weight matrix per layer transition expected")
        if len(self.activations) != len(self.weights):
            raise ShapeError("one activation per non-input layer expected")
        ws = []
        for i, w in enumerate(self.weights):
            w = np.ascontiguousarray(w, dtype=np.float64)
            expected = (self.layer_sizes[i] + 1, self.layer_sizes[i + 1])
            if w.shape != expected:
                raise ShapeError(f"layer {i} weights have shape {w.shape}, expected {expected}")
            ws.append(w)
        self.weights = ws

    @classmethod
    def init(
        cls,
        layer_sizes=(5, 30, 1),
        hidden: Activation = Activation("tanh"),
        output: Activation = Activation("linear"),
        seed=None,
    ) -> "Network":
        """Glorot-uniform weights (bias rows included) from a seeded generator."""
        rng = np.random.default_rng(seed)
        weights = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in + 1, fan_out)))
        acts = (hidden,) * (len(layer_sizes) - 2) + (output,)
        return cls(tuple(layer_sizes), weights, acts)

    def copy(self) -> "Network":
        return Network(self.layer_sizes, [w.copy() for w in self.weights], self.activations)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    def _kernel_args(self):
        codes = np.array([a.code for a in self.activations], dtype=np.int64)
        pa = np.array([a.a for a in self.activations], dtype=np.float64)
        pb = np.array([a.b for a in self.activations], dtype=np.float64)
        return tuple(self.weights), codes, pa, pb


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net: Network, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(w) for w in net.weights],
            0, lr, beta1, beta2, eps,
        )

    def copy(self) -> "AdamState":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class TrainingBatch:
    inputs: np.ndarray
    targets: np.ndarray
    input_dates: np.ndarray | None = field(default=None, repr=False)
    target_dates: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        x = np.ascontiguousarray(np.atleast_2d(np.asarray(self.inputs, dtype=float)))
        t = np.asarray(self.targets, dtype=float)
        if t.ndim < 2:
            t = t.reshape(-1, 1)
        t = np.ascontiguousarray(t)
        if t.shape[0] != x.shape[0] or x.shape[0] == 0:
            raise ShapeError(f"{x.shape[0]} inputs but {t.shape[0]} targets")
        if self.input_dates is not None and self.target_dates is not None:
            last_in = np.asarray(self.input_dates, "datetime64[D]").max(axis=-1)
            if np.any(last_in >= np.asarray(self.target_dates, "datetime64[D]")):
                raise ShapeError("every input must precede its target")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", t)

    def __len__(self):
        return self.inputs.shape[0]


# --- compiled kernels -------------------------------------------------------


@numba.njit(cache=True)
def _activate(z, code, a, b):
    out = np.empty_like(z)
    flat_z = z.ravel()
    flat = out.ravel()
    if code == LOGISTIC:
        for i in range(flat.size):
            flat[i] = 1.0 / (1.0 + np.exp(-flat_z[i]))
    elif code == TANH:
        # tanh(u) = 1 - 2/(e^(2u) + 1); libm tanh is several times slower here
        for i in range(flat.size):
            e = np.exp(2.0 * b * flat_z[i])
            flat[i] = a * (1.0 - 2.0 / (e + 1.0))
    else:
        flat[:] = flat_z
    return out


@numba.njit(cache=True)
def _activation_slope(y, code, a, b):
    # derivative with respect to the pre-activation, written via the output
    out = np.empty_like(y)
    flat_y = y.ravel()
    flat = out.ravel()
    if code == LOGISTIC:
        for i in range(flat.size):
            flat[i] = flat_y[i] * (1.0 - flat_y[i])
    elif code == TANH:
        for i in range(flat.size):
            t = flat_y[i] / a
            flat[i] = a * b * (1.0 - t * t)
    else:
        flat[:] = 1.0
    return out


@numba.njit(cache=True)
def _layer(y, w, code, a, b):
    n_in = w.shape[0] - 1
    z = y @ w[:n_in]
    for i in range(z.shape[0]):
        for j in range(z.shape[1]):
            z[i, j] += w[n_in, j]
    return _activate(z, code, a, b)


@numba.njit(cache=True)
def _predict(weights, codes, pa, pb, x):
    y = x
    for i in range(len(weights)):
        y = _layer(y, weights[i], codes[i], pa[i], pb[i])
    return y


@numba.njit(cache=True)
def _backprop(weights, codes, pa, pb, x, t, grads):
    """Fill ``grads`` with dLoss/dW and return the batch MSE."""
    n_layers = len(weights)
    outs = [x]
    y = x
    for i in range(n_layers):
        y = _layer(y, weights[i], codes[i], pa[i], pb[i])
        outs.append(y)
    batch = x.shape[0]
    diff = y - t
    loss = np.sum(diff * diff) / batch
    delta = (2.0 / batch) * diff * _activation_slope(y, codes[-1], pa[-1], pb[-1])
    for i in range(n_layers - 1, -1, -1):
        w = weights[i]
        n_in = w.shape[0] - 1
        g = grads[i]
        g[:n_in] = outs[i].T @ delta
        g[n_in] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ np.ascontiguousarray(w[:n_in].T)) * _activation_slope(
                outs[i], codes[i - 1], pa[i - 1], pb[i - 1]
            )
    return loss


@numba.njit(cache=True)
def _adam_update(weights, grads, m, v, step, lr, beta1, beta2, eps):
    step += 1
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for i in range(len(weights)):
        g = grads[i]
        m[i][:] = beta1 * m[i] + (1.0 - beta1) * g
        v[i][:] = beta2 * v[i] + (1.0 - beta2) * g * g
        weights[i][:] = weights[i] - lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + eps)
    return step


@numba.njit(cache=True)
def _train(weights, codes, pa, pb, x, t, m, v, step, lr, beta1, beta2, eps, epochs, grads):
    losses = np.empty(epochs + 1)
    for e in range(epochs):
        losses[e] = _backprop(weights, codes, pa, pb, x, t, grads)
        step = _adam_update(weights, grads, m, v, step, lr, beta1, beta2, eps)
    if epochs >= 0:
        losses[epochs] = _backprop(weights, codes, pa, pb, x, t, grads)
    return step, losses


# --- public operations ------------------------------------------------------


def _check_inputs(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.n_inputs or x.ndim not in (1, 2):
        raise ShapeError(f"network expects {net.n_inputs} inputs, got shape {x.shape}")
    return x


def forward(net: Network, x):
    """Network output for one input vector (scalar) or a batch (one row per sample)."""
    x = _check_inputs(net, x)
    ws, codes, pa, pb = net._kernel_args()
    out = _predict(ws, codes, pa, pb, np.ascontiguousarray(np.atleast_2d(x)))
    if x.ndim == 1:
        return float(out[0, 0]) if out.shape[1] == 1 else out[0]
    return out[:, 0] if out.shape[1] == 1 else out


def _check_batch(net: Network, batch: TrainingBatch):
    _check_inputs(net, batch.inputs)
    if batch.targets.shape[1] != net.layer_sizes[-1]:
        raise ShapeError(f"targets have {batch.targets.shape[1]} columns, network has "
                         f"{net.layer_sizes[-1]} outputs")


def loss(net: Network, batch: TrainingBatch) -> float:
    _check_batch(net, batch)
    ws, codes, pa, pb = net._kernel_args()
    out = _predict(ws, codes, pa, pb, batch.inputs)
    return float(np.sum((out - batch.targets) ** 2) / len(batch))


def gradients(net: Network, batch: TrainingBatch) -> list:
    """Exact gradient of the batch MSE with respect to every weight (bias rows included)."""
    _check_batch(net, batch)
    ws, codes, pa, pb = net._kernel_args()
    grads = tuple(np.zeros_like(w) for w in net.weights)
    _backprop(ws, codes, pa, pb, batch.inputs, batch.targets, grads)
    return list(grads)


def adam_step(net: Network, state: AdamState, grads) -> tuple[Network, AdamState]:
    """One bias-corrected ADAM update; returns new network and optimizer state."""
    if [g.shape for g in grads] != [w.shape for w in net.weights]:
        raise ShapeError("gradient shapes do not match the network")
    new_net, new_state = net.copy(), state.copy()
    gs = tuple(np.ascontiguousarray(g, dtype=np.float64) for g in grads)
    new_state.step = int(_adam_update(
        tuple(new_net.weights), gs, tuple(new_state.m), tuple(new_state.v),
        state.step, state.lr, state.beta1, state.beta2, state.eps,
    ))
    return new_net, new_state


def train(net: Network, state: AdamState, batch: TrainingBatch, epochs: int, in_place: bool = False):
    """Full-batch gradient + ADAM step, ``epochs`` times.

    Returns ``(net, state, losses)`` where ``losses[e]`` is the batch loss
    before epoch ``e`` and ``losses[-1]`` the loss after training. Unless
    ``in_place`` is set the inputs are left untouched.
    """
    _check_batch(net, batch)
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if not in_place:
        net, state = net.copy(), state.copy()
    ws, codes, pa, pb = net._kernel_args()
    grads = tuple(np.zeros_like(w) for w in net.weights)
    step, losses = _train(
        ws, codes, pa, pb, batch.inputs, batch.targets,
        tuple(state.m), tuple(state.v), state.step,
        state.lr, state.beta1, state.beta2, state.eps, int(epochs), grads,
    )
    state.step = int(step)
    return net, state, losses


def train_walkforward(net: Network, state: AdamState, batch: TrainingBatch, epochs: int = 200):
    """Train on one day's trailing batch; the result is used for the next-day forecast only."""
    net, state, _ = train(net, state, batch, epochs)
    return net, state


# --- checkpoints ------------------------------------------------------------


def save_checkpoint(net: Network, path) -> None:
    """Write a plain-text dump that reloads bit-exactly.

    Layout::

        marketineff-ffnn 1
        layers 5 30 1
        activation tanh 1.7159 0.6666666666666666
        activation linear 1.7159 0.6666666666666666
        weights 0 6 30
        <6 lines of 30 floats, row-major; last line is the bias row>
        weights 1 31 1
        ...
    """
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
             "layers " + " ".join(str(s) for s in net.layer_sizes)]
    for act in net.activations:
        lines.append(f"activation {act.kind} {act.a!r} {act.b!r}")
    for i, w in enumerate(net.weights):
        lines.append(f"weights {i} {w.shape[0]} {w.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in w)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path) -> Network:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split()
    if head[0] != CHECKPOINT_MAGIC or int(head[1]) != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} network checkpoint")
    sizes = tuple(int(s) for s in lines[1].split()[1:])
    pos = 2
    acts = []
    for _ in range(len(sizes) - 1):
        _, kind, a, b = lines[pos].split()
        acts.append(Activation(kind, float(a), float(b)))
        pos += 1
    weights = []
    for _ in range(len(sizes) - 1):
        _, _, rows, cols = lines[pos].split()
        rows, cols = int(rows), int(cols)
        block = [[float(v) for v in lines[pos + 1 + r].split()] for r in range(rows)]
        weights.append(np.array(block).reshape(rows, cols))
        pos += 1 + rows
    return Network(sizes, weights, tuple(acts))
