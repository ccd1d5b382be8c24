"""
Feature-to-embedding maps for both modalities.

A small affine/rectifier network stands in for each modality's feature
extractor plus its fully connected embedding layer. Outputs are projected onto
the shared sphere by ``l2_normalize_scale``.
"""

import copy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from voiceface.core.errors import DimensionMismatch, InvalidConfig
from voiceface.core.metric_space import MetricSpaceConfig, l2_normalize_scale

ACTIVATIONS = ("identity", "relu")
ANCHORING_MODES = ("voice", "face", "none")


@dataclass
class Layer:
    """One affine layer: ``y = x @ weight.T + bias``."""

    weight: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class EmbedderParams:
    """Parameters of one modality embedder."""

    layers: List[Layer]
    activation: str = "relu"
    frozen: bool = False

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def validate(self) -> tuple[bool, List[str]]:
        """
        Validate layer chaining and activation.

        Returns:
            tuple: (is_valid, list_of_errors)
        """
        errors = []
        if not self.layers:
            errors.append("embedder needs at least one layer")
        if self.activation not in ACTIVATIONS:
            errors.append(f"unknown activation: {self.activation}")
        for i, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                errors.append(f"layer {i}: bias shape {layer.bias.shape} does not match weight {layer.weight.shape}")
            if i > 0 and self.layers[i - 1].out_dim != layer.in_dim:
                errors.append(f"layer {i}: input {layer.in_dim} != previous output {self.layers[i - 1].out_dim}")
        return len(errors) == 0, errors

    def arrays(self) -> List[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] (views, not copies)."""
        flat = []
        for layer in self.layers:
            flat.extend([layer.weight, layer.bias])
        return flat

    def copy(self) -> "EmbedderParams":
        return copy.deepcopy(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "activation": self.activation,
            "frozen": self.frozen,
            "layers": [{"w": layer.weight.tolist(), "b": layer.bias.tolist()} for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EmbedderParams":
        layers = [
            Layer(np.asarray(item["w"], dtype=np.float64), np.asarray(item["b"], dtype=np.float64))
            for item in data["layers"]
        ]
        params = cls(layers=layers, activation=data.get("activation", "relu"), frozen=bool(data.get("frozen", False)))
        is_valid, errors = params.validate()
        if not is_valid:
            raise InvalidConfig(f"Invalid embedder parameters: {', '.join(errors)}")
        return params


@dataclass
class ModalityPair:
    """Voice and face embedders sharing one metric space."""

    voice: EmbedderParams
    face: EmbedderParams
    space: MetricSpaceConfig = field(default_factory=MetricSpaceConfig)

    def __post_init__(self):
        for name, params in (("voice", self.voice), ("face", self.face)):
            if params.out_dim != self.space.dim:
                raise DimensionMismatch(f"{name} embedder outputs {params.out_dim}, space dim is {self.space.dim}")

    def embedder(self, modality: str) -> EmbedderParams:
        if modality == "voice":
            return self.voice
        if modality == "face":
            return self.face
        raise ValueError(f"Unknown modality: {modality}")

    def copy(self) -> "ModalityPair":
        return ModalityPair(self.voice.copy(), self.face.copy(), self.space)

    def set_anchoring(self, mode: str):
        """Freeze the voice embedder, the face embedder, or neither."""
        if mode not in ANCHORING_MODES:
            raise InvalidConfig(f"Unknown anchoring mode: {mode}")
        self.voice.frozen = mode == "voice"
        self.face.frozen = mode == "face"

    def to_dict(self) -> Dict[str, Any]:
        return {"space": self.space.to_dict(), "voice": self.voice.to_dict(), "face": self.face.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModalityPair":
        return cls(
            voice=EmbedderParams.from_dict(data["voice"]),
            face=EmbedderParams.from_dict(data["face"]),
            space=MetricSpaceConfig.from_dict(data["space"]),
        )


def init_embedder(
    in_dim: int,
    hidden_dims: Sequence[int],
    out_dim: int,
    seed: int,
    activation: str = "relu",
    frozen: bool = False,
) -> EmbedderParams:
    """
    Create a deterministically initialized embedder.

    Weights and biases of each layer are uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``.

    Args:
        in_dim: Feature dimension
        hidden_dims: Widths of hidden layers (empty for a single affine layer)
        out_dim: Embedding dimension
        seed: Random seed
        activation: Activation between layers
        frozen: Whether training leaves these parameters untouched

    Returns:
        EmbedderParams
    """
    dims = [in_dim, *hidden_dims, out_dim]
    if any(int(d) < 1 for d in dims):
        raise InvalidConfig(f"all layer dimensions must be >= 1, got {dims}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        bias = rng.uniform(-bound, bound, size=fan_out)
        layers.append(Layer(weight, bias))
    params = EmbedderParams(layers=layers, activation=activation, frozen=frozen)
    is_valid, errors = params.validate()
    if not is_valid:
        raise InvalidConfig(", ".join(errors))
    return params


def init_modality_pair(
    voice_dim: int,
    face_dim: int,
    space: Optional[MetricSpaceConfig] = None,
    voice_hidden: Sequence[int] = (),
    face_hidden: Sequence[int] = (),
    activation: str = "relu",
    anchoring: str = "voice",
    seed: int = 0,
) -> ModalityPair:
    """Initialize both embedders; the face embedder uses ``seed + 1``."""
    space = space or MetricSpaceConfig()
    voice = init_embedder(voice_dim, voice_hidden, space.dim, seed, activation)
    face = init_embedder(face_dim, face_hidden, space.dim, seed + 1, activation)
    pair = ModalityPair(voice, face, space)
    pair.set_anchoring(anchoring)
    return pair


def forward(params: EmbedderParams, x: np.ndarray, keep_cache: bool = False):
    """
    Run the network before normalization.

    Args:
        params: Embedder parameters
        x: Features, shape (rows, in_dim)
        keep_cache: Also return layer inputs and pre-activations for backprop

    Returns:
        Output (rows, out_dim), or (output, cache) when keep_cache is set
    """
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if h.shape[1] != params.in_dim:
        raise DimensionMismatch(f"feature dimension {h.shape[1]} != embedder input {params.in_dim}")
    cache = []
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        pre = h @ layer.weight.T + layer.bias
        cache.append((h, pre))
        if i < last and params.activation == "relu":
            h = np.maximum(pre, 0.0)
        else:
            h = pre
    if keep_cache:
        return h, cache
    return h


def backward(params: EmbedderParams, cache, grad_out: np.ndarray) -> List[np.ndarray]:
    """
    Backpropagate a gradient w.r.t. the network output.

    Returns:
        Gradients aligned with ``params.arrays()``
    """
    grads: List[np.ndarray] = [None] * (2 * len(params.layers))
    delta = grad_out
    for i in range(len(params.layers) - 1, -1, -1):
        h_in, _ = cache[i]
        grads[2 * i] = delta.T @ h_in
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.layers[i].weight
            if params.activation == "relu":
                _, prev_pre = cache[i - 1]
                delta = delta * (prev_pre > 0.0)
    return grads


def normalize_backward(z: np.ndarray, grad_e: np.ndarray, space: MetricSpaceConfig) -> np.ndarray:
    """Gradient through ``e = s * z / ||z||`` given dL/de."""
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    u = z / norms
    radial = np.sum(u * grad_e, axis=1, keepdims=True)
    return space.scale * (grad_e - radial * u) / norms


def embed_batch(params: EmbedderParams, x: np.ndarray, space: MetricSpaceConfig) -> np.ndarray:
    """Embed a matrix of features, one embedding per row."""
    return l2_normalize_scale(forward(params, x), space)


def embed(params: EmbedderParams, x: np.ndarray, space: MetricSpaceConfig) -> np.ndarray:
    """
    Embed one feature vector.

    Args:
        params: Embedder parameters
        x: Feature vector (in_dim,)
        space: Metric space

    Returns:
        Embedding of norm ``space.scale``
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a single feature vector, got shape {x.shape}")
    return embed_batch(params, x[None, :], space)[0]
