"""Declarative network descriptions and a sequential network built from them."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import layers as L

__all__ = [
    "LayerSpec",
    "NetworkSpec",
    "conv",
    "pad",
    "maxpool",
    "relu",
    "fc",
    "softmax_output",
    "propagate_shapes",
    "count_params",
    "param_shapes",
    "tiny_vgg",
    "vgg16_descriptor",
    "Network",
    "gradient_check",
    "save_params",
    "load_params",
    "ModelFileError",
]

KINDS = ("conv", "pad", "maxpool", "relu", "fully_connected", "softmax_output")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    channels: int = 0  # conv output channels
    kernel: int = 0  # conv kernel size
    units: int = 0  # fully connected output units
    padding: int = 0  # zero padding on each side

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv" and (self.channels < 1 or self.kernel < 1):
            raise ValueError("conv layers need positive channels and kernel size")
        if self.kind == "fully_connected" and self.units < 1:
            raise ValueError("fully connected layers need a positive unit count")
        if self.kind == "pad" and self.padding < 1:
            raise ValueError("padding layers need a positive padding")


def conv(channels: int, kernel: int = 3) -> LayerSpec:
    return LayerSpec("conv", channels=channels, kernel=kernel)


def pad(padding: int = 1) -> LayerSpec:
    return LayerSpec("pad", padding=padding)


def maxpool() -> LayerSpec:
    return LayerSpec("maxpool")


def relu() -> LayerSpec:
    return LayerSpec("relu")


def fc(units: int) -> LayerSpec:
    return LayerSpec("fully_connected", units=units)


def softmax_output() -> LayerSpec:
    return LayerSpec("softmax_output")


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        propagate_shapes(self)

    @property
    def num_classes(self) -> int:
        return int(np.prod(propagate_shapes(self)[-1]))

    def fingerprint(self) -> bytes:
        """SHA-256 of the architecture (input shape and layers, not the seed)."""
        doc = {"input_shape": list(self.input_shape), "layers": [asdict(l) for l in self.layers]}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).digest()


def propagate_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Input shape followed by the output shape of every layer.

    The first fully connected layer flattens its input.
    """
    shape = tuple(spec.input_shape)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError(f"input shape must be (C, H, W), got {shape}")
    shapes = [shape]
    for i, layer in enumerate(spec.layers):
        if layer.kind == "conv":
            if len(shape) != 3:
                raise ValueError(f"layer {i}: conv after flattening")
            c, h, w = shape
            if layer.kernel > h or layer.kernel > w:
                raise ValueError(f"layer {i}: kernel {layer.kernel} larger than {h}x{w} input")
            shape = (layer.channels, h - layer.kernel + 1, w - layer.kernel + 1)
        elif layer.kind == "pad":
            if len(shape) != 3:
                raise ValueError(f"layer {i}: padding after flattening")
            c, h, w = shape
            shape = (c, h + 2 * layer.padding, w + 2 * layer.padding)
        elif layer.kind == "maxpool":
            if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
                raise ValueError(f"layer {i}: 2x2 pooling needs even spatial dims, got {shape}")
            shape = (shape[0], shape[1] // 2, shape[2] // 2)
        elif layer.kind == "fully_connected":
            shape = (layer.units,)
        elif layer.kind == "softmax_output":
            if len(shape) != 1 or shape[0] < 2:
                raise ValueError(f"layer {i}: softmax needs a flat input of >= 2 classes, got {shape}")
            if i != len(spec.layers) - 1:
                raise ValueError("softmax_output must be the last layer")
        shapes.append(shape)
    return shapes


def count_params(spec: NetworkSpec) -> int:
    total = 0
    shapes = propagate_shapes(spec)
    for layer, shape_in in zip(spec.layers, shapes):
        if layer.kind == "conv":
            total += (layer.kernel * layer.kernel * shape_in[0] + 1) * layer.channels
        elif layer.kind == "fully_connected":
            total += (int(np.prod(shape_in)) + 1) * layer.units
    return total


def tiny_vgg(seed: int = 0, input_size: int = 32, classes: int = 2) -> NetworkSpec:
    """Two conv-conv-pool blocks (8 and 16 channels), FC-32, FC-classes, softmax."""
    return NetworkSpec(
        input_shape=(1, input_size, input_size),
        layers=(
            conv(8), relu(), conv(8), relu(), maxpool(),
            conv(16), relu(), conv(16), relu(), maxpool(),
            fc(32), relu(), fc(classes), softmax_output(),
        ),
        seed=seed,
    )


def vgg16_descriptor() -> NetworkSpec:
    """Canonical VGG-16 (configuration D) for 3x224x224 input, 1000 classes."""
    blocks = ((64, 2), (128, 2), (256, 3), (512, 3), (512, 3))
    layers: list[LayerSpec] = []
    for channels, depth in blocks:
        for _ in range(depth):
            layers += [pad(1), conv(channels, 3), relu()]
        layers.append(maxpool())
    layers += [fc(4096), relu(), fc(4096), relu(), fc(1000), softmax_output()]
    return NetworkSpec(input_shape=(3, 224, 224), layers=tuple(layers))


def param_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Shapes of ``[W, b]`` for every weighted layer, in layer order."""
    out = []
    for layer, shape_in in zip(spec.layers, propagate_shapes(spec)):
        if layer.kind == "conv":
            out += [(layer.channels, shape_in[0], layer.kernel, layer.kernel), (layer.channels,)]
        elif layer.kind == "fully_connected":
            out += [(layer.units, int(np.prod(shape_in))), (layer.units,)]
    return out


class Network:
    """Sequential network holding float64 parameters for a :class:`NetworkSpec`.

    Parameters are stored per weighted layer as ``[W, b]`` pairs, in layer
    order.  ``params`` flattens them into a list of arrays.
    """

    def __init__(self, spec: NetworkSpec, params: list[np.ndarray] | None = None):
        self.spec = spec
        self.shapes = propagate_shapes(spec)
        self.params = params if params is not None else self._init_params(spec.seed)
        expected = self.param_shapes()
        if [p.shape for p in self.params] != expected:
            raise ValueError("parameter shapes do not match the network spec")
        self._cache: list = []
        # index of the first parameter used at or after each layer
        self._param_offsets = []
        p = 0
        for layer in spec.layers:
            self._param_offsets.append(p)
            if layer.kind in ("conv", "fully_connected"):
                p += 2
        self._param_offsets.append(p)

    def param_shapes(self) -> list[tuple[int, ...]]:
        return param_shapes(self.spec)

    def _init_params(self, seed: int) -> list[np.ndarray]:
        # He-uniform weights, zero biases
        rng = np.random.default_rng(seed)
        params = []
        shapes = self.param_shapes()
        for w_shape, b_shape in zip(shapes[::2], shapes[1::2]):
            fan_in = int(np.prod(w_shape[1:]))
            limit = np.sqrt(6.0 / fan_in)
            params.append(rng.uniform(-limit, limit, size=w_shape))
            params.append(np.zeros(b_shape))
        return params

    def copy(self) -> "Network":
        return Network(self.spec, [p.copy() for p in self.params])

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for a batch ``(N, C, H, W)``; the softmax layer is folded into the loss."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != tuple(self.spec.input_shape):
            raise ValueError(f"input batch shape {x.shape} does not match network input {self.spec.input_shape}")
        self._cache = []
        return self._run(x, 0, self._cache)

    def _run(self, x: np.ndarray, start: int, cache: list | None = None) -> np.ndarray:
        p = self._param_offsets[start]
        for layer in self.spec.layers[start:]:
            if cache is not None:
                cache.append(x)
            if layer.kind == "conv":
                x = L.conv2d_forward(x, self.params[p], self.params[p + 1])
                p += 2
            elif layer.kind == "fully_connected":
                x = L.fc_forward(x.reshape(x.shape[0], -1), self.params[p], self.params[p + 1])
                p += 2
            elif layer.kind == "relu":
                x = L.relu_forward(x)
            elif layer.kind == "maxpool":
                x = L.maxpool2_forward(x)
            elif layer.kind == "pad":
                x = L.zero_pad(x, layer.padding)
        return x

    def backward(self, dlogits: np.ndarray) -> list[np.ndarray]:
        """Parameter gradients given the gradient of the loss w.r.t. the logits."""
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        p = len(self.params)
        d = dlogits
        for layer, x in zip(reversed(self.spec.layers), reversed(self._cache)):
            if layer.kind == "conv":
                p -= 2
                d, grads[p], grads[p + 1] = L.conv2d_backward(d, x, self.params[p])
            elif layer.kind == "fully_connected":
                p -= 2
                flat = x.reshape(x.shape[0], -1)
                d, grads[p], grads[p + 1] = L.fc_backward(d, flat, self.params[p])
                d = d.reshape(x.shape)
            elif layer.kind == "relu":
                d = L.relu_backward(d, x)
            elif layer.kind == "maxpool":
                d = L.maxpool2_backward(d, x)
            elif layer.kind == "pad":
                d = L.zero_pad_backward(d, layer.padding)
        return grads

    def loss(self, x: np.ndarray, y) -> float:
        return L.softmax_cross_entropy(self.forward(x), y)[0]

    def loss_and_grads(self, x: np.ndarray, y) -> tuple[float, list[np.ndarray]]:
        loss, dlogits = L.softmax_cross_entropy(self.forward(x), y)
        return loss, self.backward(dlogits)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return L.softmax(self.forward(x))

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(x), axis=1)


def gradient_check(network: Network, sample, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference parameter gradients.

    ``sample`` is ``(x, label)`` with ``x`` of shape ``(C, H, W)`` or a batch.
    The relative error is ``|a - n| / max(|a|, |n|, 1e-12)``.
    """
    if not 1e-7 < epsilon < 1e-3:
        raise ValueError(f"epsilon must lie in (1e-7, 1e-3), got {epsilon}")
    x, y = sample
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == len(network.spec.input_shape):
        x = x[np.newaxis]
    y = np.atleast_1d(y)
    loss, grads = network.loss_and_grads(x, y)
    if not np.isfinite(loss):
        raise FloatingPointError("loss is not finite")
    inputs = list(network._cache)
    # parameter index -> layer that consumes it
    owner = [i for i, l in enumerate(network.spec.layers) if l.kind in ("conv", "fully_connected") for _ in (0, 1)]

    def loss_from(layer: int) -> float:
        return L.softmax_cross_entropy(network._run(inputs[layer], layer), y)[0]

    worst = 0.0
    for param, grad, layer in zip(network.params, grads, owner):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + epsilon
            plus = loss_from(layer)
            flat[i] = old - epsilon
            minus = loss_from(layer)
            flat[i] = old
            numeric = (plus - minus) / (2 * epsilon)
            a = gflat[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, err)
    return worst


class ModelFileError(ValueError):
    pass


MAGIC = b"HCLPARM1"


def save_params(path, network: Network) -> None:
    """Magic, 32-byte spec fingerprint, then every parameter as little-endian float64."""
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in network.params)
    Path(path).write_bytes(MAGIC + network.spec.fingerprint() + body)


def load_params(path, spec: NetworkSpec) -> Network:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ModelFileError(f"{path}: not a parameter file")
    offset = len(MAGIC)
    if data[offset:offset + 32] != spec.fingerprint():
        raise ModelFileError(f"{path}: parameters were saved for a different architecture")
    offset += 32
    shapes = param_shapes(spec)
    need = sum(int(np.prod(s)) for s in shapes) * 8
    if len(data) - offset != need:
        raise ModelFileError(f"{path}: expected {need} parameter bytes, found {len(data) - offset}")
    params = []
    for shape in shapes:
        n = int(np.prod(shape))
        params.append(np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64).reshape(shape))
        offset += n * 8
    return Network(spec, params)

