"""Feed-forward network: initialization, forward pass, backpropagation and persistence."""
import logging
import struct
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import ContractViolation, DataError
from numerics import Matrix, SeededRng, as_matrix, matmul

logger = logging.getLogger(__name__)

ACTIVATIONS = ('linear', 'tanh', 'relu')
MODEL_MAGIC = b'CENC'
MODEL_VERSION = 1


def activate(kind: str, z: Matrix) -> Matrix:
    if kind == 'tanh':
        return np.tanh(z)
    if kind == 'relu':
        return np.maximum(z, 0.0)
    return z


def activation_derivative(kind: str, z: Matrix, a: Matrix) -> Matrix:
    """Derivative of the activation given pre-activation z and output a.

    The relu derivative at exactly 0 is 0.
    """
    if kind == 'tanh':
        return 1.0 - a * a
    if kind == 'relu':
        return (z > 0.0).astype(np.float64)
    return np.ones_like(z)


@dataclass(frozen=True)
class NetworkSpec:
    """Layer widths and per-layer activations of a mirrored network.

    Attributes:
        layer_widths: Widths from input to output, e.g. (784, 1000, 2, 1000, 784)
        activations: Activation applied after each weight layer
            (len(layer_widths) - 1 entries)
        bottleneck_index: Position in layer_widths of the embedding layer
    """
    layer_widths: Tuple[int, ...]
    activations: Tuple[str, ...]
    bottleneck_index: int

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, 'layer_widths', widths)
        object.__setattr__(self, 'activations', tuple(self.activations))
        if len(widths) < 3:
            raise ContractViolation(f"need input, bottleneck and output layers, got {widths}")
        if any(w <= 0 for w in widths):
            raise ContractViolation(f"layer widths must be positive, got {widths}")
        if widths[0] != widths[-1]:
            raise ContractViolation(f"input width {widths[0]} != output width {widths[-1]}")
        if widths != widths[::-1]:
            raise ContractViolation(f"widths must mirror about the bottleneck, got {widths}")
        if len(self.activations) != len(widths) - 1:
            raise ContractViolation(
                f"{len(self.activations)} activations for {len(widths) - 1} weight layers")
        unknown = [a for a in self.activations if a not in ACTIVATIONS]
        if unknown:
            raise ContractViolation(f"unknown activations {unknown}; choose from {ACTIVATIONS}")
        if not 0 < self.bottleneck_index < len(widths) - 1:
            raise ContractViolation(f"bottleneck index {self.bottleneck_index} out of range")

    @classmethod
    def symmetric(cls, n: int, hidden: Sequence[int], m: int, activation: str = 'tanh') -> 'NetworkSpec':
        """Build n -> hidden -> m -> reversed(hidden) -> n.

        Hidden layers use `activation`; the bottleneck and output are linear.
        """
        hidden = tuple(int(h) for h in hidden)
        widths = (n,) + hidden + (m,) + hidden[::-1] + (n,)
        encoder = (activation,) * len(hidden) + ('linear',)
        decoder = (activation,) * len(hidden) + ('linear',)
        return cls(widths, encoder + decoder, len(hidden) + 1)

    @classmethod
    def single_hidden(cls, n: int, width: int, activation: str = 'tanh') -> 'NetworkSpec':
        """n -> [width] -> n with a nonlinear hidden layer and a linear output."""
        return cls((n, width, n), (activation, 'linear'), 1)

    @property
    def n_inputs(self) -> int:
        return self.layer_widths[0]

    @property
    def n_layers(self) -> int:
        """Number of weight layers."""
        return len(self.layer_widths) - 1

    @property
    def bottleneck_width(self) -> int:
        return self.layer_widths[self.bottleneck_index]


@dataclass
class ModelParams:
    """Weights W_l (fan_in x fan_out), biases b_l and per-layer freeze flags."""
    weights: List[Matrix]
    biases: List[np.ndarray]
    frozen: List[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.frozen:
            self.frozen = [False] * len(self.weights)

    def copy(self) -> 'ModelParams':
        return ModelParams([w.copy() for w in self.weights],
                           [b.copy() for b in self.biases],
                           list(self.frozen))

    def check(self, spec: NetworkSpec):
        """Raise ContractViolation unless shapes chain-match `spec`."""
        if len(self.weights) != spec.n_layers or len(self.biases) != spec.n_layers:
            raise ContractViolation(
                f"{len(self.weights)} weight layers for a {spec.n_layers}-layer spec")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (spec.layer_widths[l], spec.layer_widths[l + 1])
            if w.shape != expected or b.shape != (expected[1],):
                raise ContractViolation(
                    f"layer {l}: weight {w.shape} / bias {b.shape}, expected {expected}")


@dataclass
class ForwardTrace:
    """Per-layer pre-activations and activations for one batch.

    `activations[0]` is the input batch; `activations[l + 1]` is the output
    of weight layer l.
    """
    pre_activations: List[Matrix]
    activations: List[Matrix]
    bottleneck_index: int

    @property
    def output(self) -> Matrix:
        return self.activations[-1]

    @property
    def bottleneck(self) -> Matrix:
        return self.activations[self.bottleneck_index]


def init_params(spec: NetworkSpec, rng: SeededRng) -> ModelParams:
    """Glorot-uniform weights and zero biases.

    Args:
        spec: Network topology
        rng: Seeded stream; layers are drawn in order

    Returns:
        Fresh, unfrozen parameters
    """
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        weights.append(glorot_uniform(fan_in, fan_out, rng))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights, biases)


def glorot_uniform(fan_in: int, fan_out: int, rng: SeededRng) -> Matrix:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def _check_batch(spec: NetworkSpec, batch: Matrix) -> Matrix:
    batch = as_matrix(batch, 'batch')
    if batch.shape[1] != spec.n_inputs:
        raise ContractViolation(f"batch has {batch.shape[1]} columns, network expects {spec.n_inputs}")
    return batch


def forward(params: ModelParams, spec: NetworkSpec, batch: Matrix,
            stop_at: Optional[int] = None) -> ForwardTrace:
    """Run the batch through the network, keeping every intermediate.

    Args:
        params: Network parameters
        spec: Network topology
        batch: Rows of input samples
        stop_at: Stop after this many weight layers (None runs all)

    Returns:
        ForwardTrace with pre- and post-activations per layer
    """
    batch = _check_batch(spec, batch)
    n_layers = spec.n_layers if stop_at is None else stop_at
    pre_activations, activations = [], [batch]
    a = batch
    for l in range(n_layers):
        z = matmul(a, params.weights[l]) + params.biases[l]
        a = activate(spec.activations[l], z)
        pre_activations.append(z)
        activations.append(a)
    return ForwardTrace(pre_activations, activations, spec.bottleneck_index)


def backward(params: ModelParams, spec: NetworkSpec, trace: ForwardTrace,
             output_delta: Matrix) -> Tuple[List[Matrix], List[np.ndarray]]:
    """Backpropagate dLoss/dOutput through the network.

    Args:
        params: Parameters used for the forward pass
        spec: Network topology
        trace: Forward trace of the batch
        output_delta: Gradient of the loss with respect to trace.output

    Returns:
        Tuple of (weight gradients, bias gradients); frozen layers get zeros
    """
    if output_delta.shape != trace.output.shape:
        raise ContractViolation(
            f"output delta {output_delta.shape} does not match output {trace.output.shape}")
    weight_grads: List[Optional[Matrix]] = [None] * spec.n_layers
    bias_grads: List[Optional[np.ndarray]] = [None] * spec.n_layers

    # Nothing below the lowest unfrozen layer needs a delta.
    unfrozen = [l for l in range(spec.n_layers) if not params.frozen[l]]
    lowest = unfrozen[0] if unfrozen else spec.n_layers

    delta = output_delta
    for l in reversed(range(spec.n_layers)):
        delta = delta * activation_derivative(
            spec.activations[l], trace.pre_activations[l], trace.activations[l + 1])
        if params.frozen[l]:
            weight_grads[l] = np.zeros_like(params.weights[l])
            bias_grads[l] = np.zeros_like(params.biases[l])
        else:
            weight_grads[l] = matmul(trace.activations[l].T, delta)
            bias_grads[l] = delta.sum(axis=0)
        if l > lowest:
            delta = matmul(delta, params.weights[l].T)
        elif l > 0:
            for below in range(l):
                weight_grads[below] = np.zeros_like(params.weights[below])
                bias_grads[below] = np.zeros_like(params.biases[below])
            break
    return weight_grads, bias_grads


def encode(params: ModelParams, spec: NetworkSpec, batch: Matrix) -> Matrix:
    """Bottleneck embedding y = g(x) of every row in the batch."""
    return forward(params, spec, batch, stop_at=spec.bottleneck_index).bottleneck


def save_model(params: ModelParams, spec: NetworkSpec, path: str):
    """Write the spec and parameters to a flat binary container.

    Layout: b'CENC', u32 version, u32 width count, u32 widths, u8 activation
    codes, u32 bottleneck index, then W_l and b_l in layer order as
    little-endian float64.
    """
    params.check(spec)
    widths = spec.layer_widths
    with open(path, 'wb') as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack('<II', MODEL_VERSION, len(widths)))
        f.write(struct.pack(f'<{len(widths)}I', *widths))
        f.write(bytes(ACTIVATIONS.index(a) for a in spec.activations))
        f.write(struct.pack('<I', spec.bottleneck_index))
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype='<f8').tobytes())
            f.write(np.ascontiguousarray(b, dtype='<f8').tobytes())


def load_model(path: str) -> Tuple[ModelParams, NetworkSpec]:
    """Read a container written by save_model, validating the shape chain."""
    with open(path, 'rb') as f:
        data = f.read()
    if data[:4] != MODEL_MAGIC:
        raise DataError(f"{path}: not a model file (bad magic {data[:4]!r})")
    try:
        version, count = struct.unpack_from('<II', data, 4)
        if version != MODEL_VERSION:
            raise DataError(f"{path}: unsupported model version {version}")
        offset = 12
        widths = struct.unpack_from(f'<{count}I', data, offset)
        offset += 4 * count
        codes = data[offset:offset + count - 1]
        offset += count - 1
        bottleneck, = struct.unpack_from('<I', data, offset)
        offset += 4
        spec = NetworkSpec(widths, tuple(ACTIVATIONS[c] for c in codes), bottleneck)
    except (struct.error, IndexError, ContractViolation) as e:
        raise DataError(f"{path}: corrupt model header ({e})") from None

    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        size = 8 * (fan_in * fan_out + fan_out)
        if offset + size > len(data):
            raise DataError(f"{path}: truncated parameters")
        w = np.frombuffer(data, dtype='<f8', count=fan_in * fan_out, offset=offset)
        offset += 8 * fan_in * fan_out
        b = np.frombuffer(data, dtype='<f8', count=fan_out, offset=offset)
        offset += 8 * fan_out
        weights.append(w.reshape(fan_in, fan_out).astype(np.float64))
        biases.append(b.astype(np.float64))
    if offset != len(data):
        raise DataError(f"{path}: {len(data) - offset} unexpected trailing bytes")
    params = ModelParams(weights, biases)
    params.check(spec)
    logger.debug("Loaded model %s with widths %s", path, widths)
    return params, spec
