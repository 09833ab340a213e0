"""Graph convolution networks over the autodiff tape, training and evaluation.

Layer kinds
  * ``vanilla``  -- tied one-hop kernel Theta (A + I)
  * ``gin``      -- one-hop kernel Theta (A + c I) with a learnable scalar
                    self-loop weight c per layer (the linearized
                    disentangled form; its composite polynomial is a real
                    scalar multiple of prod_l (x + c_l), so it only ever
                    splits over the reals)
  * ``so``       -- second-order kernel Theta2 A^2 + Theta1 A + Theta0 I
  * ``korder``   -- K-hop kernel sum_t Theta_t A^t for K in {3, 4, 6}

Each multi-channel layer owns one in-by-out weight matrix per aggregation
order; a network prepends an embedding map, stacks ``depth`` conv layers
with an optional activation (and optionally a single GRU shared by all
layers, fed the ReLU of the conv output as input and the pre-conv signal as
hidden state), and ends in a node-level MLP readout or a channel-wise sum
over nodes. With identity activation, no GRU and single in/out channels,
the whole network collapses to one polynomial filter whose coefficients
:func:`linear_filter_coefficients` extracts exactly.

Training follows Adam (0.9 / 0.999 / 1e-8) with gradient accumulation over
a batch of per-graph tapes, initial learning rate 0.01, halving when the
validation MAE has not improved by more than 1e-5 for ``patience``
consecutive epochs, and stopping at the epoch cap or once the learning rate
falls below ``min_lr``. Everything is deterministic given the config seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .autodiff import (
    Tape,
    Var,
    add,
    aggregate,
    backward,
    hadamard,
    mae_loss,
    matmul,
    one_minus,
    relu,
    sigmoid,
    sum_rows,
    tanh,
)
from .errors import NumericError
from .graphs import Graph
from .polyfilter import PolyFilter
from .serialize import dumps, write_text

KINDS = ("vanilla", "gin", "so", "korder")
ACTIVATIONS = ("identity", "relu")
READOUTS = ("node_mlp", "graph_sum")
KORDER_CHOICES = (3, 4, 6)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Layered model description; fully determines parameter shapes."""

    kind: str = "so"
    order: int = 0  # derived from kind unless kind == "korder"
    depth: int = 8
    width: int = 16
    in_channels: int = 1
    out_channels: int = 1
    activation: str = "identity"
    use_gru: bool = False
    readout: str = "node_mlp"
    embed_hidden: tuple[int, ...] = ()
    readout_hidden: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.readout not in READOUTS:
            raise ValueError(f"unknown readout {self.readout!r}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.width < 1 or self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        derived = {"vanilla": 1, "gin": 1, "so": 2}
        if self.kind == "korder":
            if self.order not in KORDER_CHOICES:
                raise ValueError(
                    f"korder networks support orders {KORDER_CHOICES}, "
                    f"got {self.order}"
                )
        else:
            object.__setattr__(self, "order", derived[self.kind])
        object.__setattr__(self, "embed_hidden", tuple(self.embed_hidden))
        object.__setattr__(self, "readout_hidden", tuple(self.readout_hidden))

    @property
    def label(self) -> str:
        return f"korder{self.order}" if self.kind == "korder" else self.kind


@dataclass(frozen=True)
class LayerParams:
    """Weights of one conv layer on the tape.

    ``tied`` marks the vanilla form (one matrix applied to (A + I) x);
    a non-None ``self_scale`` marks the gin form (one matrix applied to
    (A + c I) x with ``self_scale`` the 1x1 scalar c). Otherwise
    ``weights`` holds the order+1 matrices of a K-order kernel.
    """

    order: int
    weights: tuple[Var, ...]
    tied: bool = False
    self_scale: Var | None = None

    def __post_init__(self):
        if self.tied and self.self_scale is not None:
            raise ValueError("tied and self_scale are mutually exclusive")
        expect = 1 if (self.tied or self.self_scale is not None) else self.order + 1
        if len(self.weights) != expect:
            raise ValueError(
                f"expected {expect} weight matrices, got {len(self.weights)}"
            )


@dataclass(frozen=True)
class GruParams:
    """One GRU shared across all layers (update z, reset r, tanh candidate)."""

    w_xz: Var
    w_hz: Var
    b_z: Var
    w_xr: Var
    w_hr: Var
    b_r: Var
    w_xc: Var
    w_hc: Var
    b_c: Var


def layer_forward(params: LayerParams, graph: Graph, x: Var) -> Var:
    """K-order graph convolution: repeated hops, one weight matrix per hop."""
    if params.tied:
        return matmul(add(aggregate(graph, x), x), params.weights[0])
    if params.self_scale is not None:
        hop = add(aggregate(graph, x), hadamard(x, params.self_scale))
        return matmul(hop, params.weights[0])
    acc = matmul(x, params.weights[0])
    h = x
    for t in range(1, params.order + 1):
        h = aggregate(graph, h)
        acc = add(acc, matmul(h, params.weights[t]))
    return acc


def gru_step(gru: GruParams, xin: Var, hidden: Var) -> Var:
    """Standard two-gate GRU: output (1 - z) * hidden + z * candidate."""
    z = sigmoid(add(add(matmul(xin, gru.w_xz), matmul(hidden, gru.w_hz)), gru.b_z))
    r = sigmoid(add(add(matmul(xin, gru.w_xr), matmul(hidden, gru.w_hr)), gru.b_r))
    cand = tanh(
        add(add(matmul(xin, gru.w_xc), matmul(hadamard(r, hidden), gru.w_hc)),
            gru.b_c)
    )
    return add(hadamard(one_minus(z), hidden), hadamard(z, cand))


def _chain(sizes: tuple[int, ...]) -> list[tuple[int, int]]:
    return list(zip(sizes[:-1], sizes[1:]))


def _embed_sizes(config: NetworkConfig) -> tuple[int, ...]:
    return (config.in_channels, *config.embed_hidden, config.width)


def _readout_sizes(config: NetworkConfig) -> tuple[int, ...]:
    return (config.width, *config.readout_hidden, config.out_channels)


def _param_shapes(config: NetworkConfig) -> dict[str, tuple[int, int]]:
    """Canonical parameter name -> shape map (also the init draw order)."""
    shapes: dict[str, tuple[int, int]] = {}
    use_bias = config.activation == "relu"
    for i, (fin, fout) in enumerate(_chain(_embed_sizes(config))):
        shapes[f"embed.{i}.weight"] = (fin, fout)
        if use_bias:
            shapes[f"embed.{i}.bias"] = (1, fout)
    w = config.width
    for layer in range(config.depth):
        if config.kind == "vanilla":
            shapes[f"conv.{layer}.theta"] = (w, w)
        elif config.kind == "gin":
            shapes[f"conv.{layer}.theta"] = (w, w)
            shapes[f"conv.{layer}.self_scale"] = (1, 1)
        else:
            for t in range(config.order + 1):
                shapes[f"conv.{layer}.theta{t}"] = (w, w)
    if config.use_gru:
        for gate in ("z", "r", "c"):
            shapes[f"gru.w_x{gate}"] = (w, w)
            shapes[f"gru.w_h{gate}"] = (w, w)
            shapes[f"gru.b_{gate}"] = (1, w)
    if config.readout == "node_mlp":
        for i, (fin, fout) in enumerate(_chain(_readout_sizes(config))):
            shapes[f"readout.{i}.weight"] = (fin, fout)
            if use_bias:
                shapes[f"readout.{i}.bias"] = (1, fout)
    return shapes


def init_params(config: NetworkConfig) -> dict[str, np.ndarray]:
    """Seeded init: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(config.seed)))
    )
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(config).items():
        if name.endswith("bias") or name.startswith("gru.b_"):
            params[name] = np.zeros(shape)
        elif name.endswith("self_scale"):
            # gin self-loop weight starts at the vanilla tie c = 1
            params[name] = np.ones(shape)
        else:
            bound = 1.0 / math.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def count_parameters(config: NetworkConfig) -> int:
    """Total weight count; a K-order layer holds (K+1) * in * out weights."""
    return sum(r * c for r, c in _param_shapes(config).values())


def _mlp(pv: dict[str, Var], prefix: str, h: Var, n_layers: int,
         activation: str) -> Var:
    for i in range(n_layers):
        h = matmul(h, pv[f"{prefix}.{i}.weight"])
        bias = pv.get(f"{prefix}.{i}.bias")
        if bias is not None:
            h = add(h, bias)
        if activation == "relu" and i + 1 < n_layers:
            h = relu(h)
    return h


def _layer_params(pv: dict[str, Var], config: NetworkConfig, layer: int) -> LayerParams:
    if config.kind == "vanilla":
        return LayerParams(order=1, weights=(pv[f"conv.{layer}.theta"],), tied=True)
    if config.kind == "gin":
        return LayerParams(order=1, weights=(pv[f"conv.{layer}.theta"],),
                           self_scale=pv[f"conv.{layer}.self_scale"])
    weights = tuple(pv[f"conv.{layer}.theta{t}"] for t in range(config.order + 1))
    return LayerParams(order=config.order, weights=weights)


def _build_forward(config: NetworkConfig, params: dict[str, np.ndarray],
                   graph: Graph, x: np.ndarray, target: np.ndarray | None = None):
    """Record one forward pass; returns (tape, output, loss, param vars, hidden)."""
    tape = Tape()
    pv = {name: tape.param(value) for name, value in params.items()}
    h = tape.const(x)
    h = _mlp(pv, "embed", h, len(_chain(_embed_sizes(config))), config.activation)
    gru = None
    if config.use_gru:
        gru = GruParams(**{f.name: pv[f"gru.{f.name}"] for f in fields(GruParams)})
    hidden: list[Var] = []
    for layer in range(config.depth):
        conv = layer_forward(_layer_params(pv, config, layer), graph, h)
        if gru is not None:
            h = gru_step(gru, relu(conv), h)
        elif config.activation == "relu":
            h = relu(conv)
        else:
            h = conv
        hidden.append(h)
    if config.readout == "graph_sum":
        out = sum_rows(h)
    else:
        out = _mlp(pv, "readout", h, len(_chain(_readout_sizes(config))),
                   config.activation)
    loss = mae_loss(out, target) if target is not None else None
    return tape, out, loss, pv, hidden


def _as_input(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def network_forward(config: NetworkConfig, params: dict[str, np.ndarray],
                    graph: Graph, x: np.ndarray,
                    return_hidden: bool = False):
    """Run the network; returns the output signal (and per-layer activations)."""
    _, out, _, _, hidden = _build_forward(config, params, graph, _as_input(x))
    if return_hidden:
        return out.value, [h.value for h in hidden]
    return out.value


def linear_filter_coefficients(config: NetworkConfig,
                               params: dict[str, np.ndarray]) -> PolyFilter:
    """Exact polynomial filter computed by a linear single-channel network.

    Multiplies out the per-layer matrix-coefficient polynomials together
    with the embedding and readout maps. Only defined for identity
    activation, no GRU, node-level readout and one in/out channel.
    """
    if config.activation != "identity" or config.use_gru:
        raise ValueError("network is not linear")
    if config.readout != "node_mlp":
        raise ValueError("graph-level readout has no filter representation")
    if config.in_channels != 1 or config.out_channels != 1:
        raise ValueError("filter extraction needs single in/out channels")

    def matpoly_mul(pa: list[np.ndarray], pb: list[np.ndarray]) -> list[np.ndarray]:
        out = [
            np.zeros((pa[0].shape[0], pb[0].shape[1]))
            for _ in range(len(pa) + len(pb) - 1)
        ]
        for i, a in enumerate(pa):
            for j, b in enumerate(pb):
                out[i + j] = out[i + j] + a @ b
        return out

    embed = np.eye(config.in_channels)
    for i in range(len(_chain(_embed_sizes(config)))):
        embed = embed @ params[f"embed.{i}.weight"]
    comp = [embed]
    for layer in range(config.depth):
        if config.kind == "vanilla":
            theta = params[f"conv.{layer}.theta"]
            comp = matpoly_mul(comp, [theta, theta])
        elif config.kind == "gin":
            theta = params[f"conv.{layer}.theta"]
            c = float(params[f"conv.{layer}.self_scale"][0, 0])
            comp = matpoly_mul(comp, [c * theta, theta])
        else:
            comp = matpoly_mul(
                comp,
                [params[f"conv.{layer}.theta{t}"] for t in range(config.order + 1)],
            )
    readout = np.eye(config.width)
    for i in range(len(_chain(_readout_sizes(config)))):
        readout = readout @ params[f"readout.{i}.weight"]
    comp = matpoly_mul(comp, [readout])
    return PolyFilter(tuple(float(c[0, 0]) for c in comp))


class Adam:
    """Canonical Adam with bias correction; state keyed by parameter name."""

    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name in params:
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / (1.0 - b1 ** self.t)
            v_hat = self.v[name] / (1.0 - b2 ** self.t)
            params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class TrainSchedule:
    """Optimization protocol; defaults follow the standard recipe."""

    lr: float = 0.01
    batch_size: int = 128
    max_epochs: int = 300
    patience: int = 10
    min_improve: float = 1e-5
    lr_factor: float = 0.5
    min_lr: float = 1e-5


def evaluate(params: dict[str, np.ndarray], config: NetworkConfig,
             samples) -> float:
    """Mean over samples of the mean absolute node error."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot evaluate on an empty split")
    total = 0.0
    for s in samples:
        out = network_forward(config, params, s.graph, s.x)
        total += float(np.abs(out - _as_input(s.y)).mean())
    return total / len(samples)


def train(config: NetworkConfig, data, schedule: TrainSchedule | None = None,
          log=None):
    """Train on ``data['train']``, schedule on ``data['val']``.

    Returns ``(params, history)`` where history rows carry epoch number,
    learning rate and train/val MAE. Gradients of a batch are accumulated
    over per-sample tapes in a fixed order and averaged before each Adam
    step, so runs are reproducible given the config seed.
    """
    schedule = schedule or TrainSchedule()
    train_set = list(data["train"])
    val_set = list(data["val"])
    if not train_set or not val_set:
        raise ValueError("train and val splits must be non-empty")
    params = init_params(config)
    adam = Adam(params)
    shuffle_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(config.seed), spawn_key=(1,)))
    )
    inputs = [(_as_input(s.x), _as_input(s.y), s.graph) for s in train_set]
    lr = schedule.lr
    best_val = math.inf
    stale = 0
    history: list[dict] = []
    for epoch in range(1, schedule.max_epochs + 1):
        order = shuffle_rng.permutation(len(inputs))
        abs_sum = 0.0
        for start in range(0, len(order), schedule.batch_size):
            batch = order[start:start + schedule.batch_size]
            grad_sum: dict[str, np.ndarray] = {
                k: np.zeros_like(v) for k, v in params.items()
            }
            for idx in batch:
                x, y, graph = inputs[idx]
                tape, _, loss, pv, _ = _build_forward(config, params, graph, x, y)
                loss_val = float(loss.value[0, 0])
                if not math.isfinite(loss_val):
                    raise NumericError(
                        f"non-finite training loss at epoch {epoch}"
                    )
                abs_sum += loss_val
                grads = backward(tape, loss)
                for name, var in pv.items():
                    grad_sum[name] += grads[var]
            inv = 1.0 / len(batch)
            for name in grad_sum:
                grad_sum[name] *= inv
            adam.step(params, grad_sum, lr)
        train_mae = abs_sum / len(inputs)
        val_mae = evaluate(params, config, val_set)
        if not math.isfinite(val_mae):
            raise NumericError(f"non-finite validation MAE at epoch {epoch}")
        history.append(
            {"epoch": epoch, "lr": lr, "train_mae": train_mae, "val_mae": val_mae}
        )
        if log is not None:
            log(history[-1])
        if val_mae < best_val - schedule.min_improve:
            best_val = val_mae
            stale = 0
        else:
            stale += 1
            if stale >= schedule.patience:
                lr *= schedule.lr_factor
                stale = 0
                if lr < schedule.min_lr:
                    break
    return params, history


def _config_to_dict(config: NetworkConfig) -> dict:
    out = {}
    for f in fields(config):
        v = getattr(config, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def _config_from_dict(d: dict) -> NetworkConfig:
    kwargs = dict(d)
    for key in ("embed_hidden", "readout_hidden"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return NetworkConfig(**kwargs)


def save_checkpoint(path, config: NetworkConfig,
                    params: dict[str, np.ndarray]) -> None:
    """Versioned text checkpoint: config plus all weights, 17-digit floats."""
    doc = {
        "format": "sogclab-checkpoint",
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": _config_to_dict(config),
        "params": {name: value for name, value in params.items()},
    }
    write_text(path, dumps(doc) + "\n")


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns (config, params)."""
    import json
    from pathlib import Path

    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="ascii"))
    except OSError as exc:
        raise OSError(f"failed reading {p}: {exc}") from exc
    if doc.get("format") != "sogclab-checkpoint":
        raise ValueError(f"{p} is not a checkpoint file")
    config = _config_from_dict(doc["config"])
    params = {
        name: np.asarray(value, dtype=np.float64)
        for name, value in doc["params"].items()
    }
    expected = _param_shapes(config)
    if set(params) != set(expected):
        raise ValueError("checkpoint parameters do not match its config")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(f"parameter {name} has shape {params[name].shape}, "
                             f"expected {shape}")
    return config, params
