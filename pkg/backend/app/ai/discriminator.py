"""
Discriminator D(m): fingerprint features, a sigmoid feedforward network (or a
logistic model), BCE loss and an Adam optimizer with L2 weight decay.
"""

import json
import logging
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from app.chem.fingerprints import DEFAULT_RADIUS, DEFAULT_WIDTH, Fingerprint, morgan_fp
from app.chem.graph import MoleculeGraph
from app.errors import DiscriminatorError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
BCE_EPS = 1e-12


class DiscriminatorConfig(BaseModel):
    architecture: Literal["mlp", "logistic", "none"] = "mlp"
    hidden: List[int] = Field(default_factory=lambda: [100, 10])
    learning_rate: float = Field(default=1e-3, gt=0)
    weight_decay: float = Field(default=1e-4, ge=0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = Field(default=256, ge=1)
    epochs: int = Field(default=10, ge=1)
    reference_size: int = Field(default=500, ge=1)
    labels: Literal["original", "flipped"] = "original"
    reinitialize: bool = False
    fp_radius: int = Field(default=DEFAULT_RADIUS, ge=0)
    fp_width: int = Field(default=DEFAULT_WIDTH, ge=1)

    @property
    def enabled(self) -> bool:
        return self.architecture != "none"

    @property
    def layer_widths(self) -> List[int]:
        return list(self.hidden) if self.architecture == "mlp" else []


def featurize(
    mol: Union[MoleculeGraph, Fingerprint], radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH
) -> np.ndarray:
    """Folded Morgan bits as a {0, 1} float vector"""
    fp = mol if isinstance(mol, Fingerprint) else morgan_fp(mol, radius, width)
    return fp.bits.astype(np.float64)


def featurize_many(
    items: Sequence[Union[MoleculeGraph, Fingerprint]], radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH
) -> np.ndarray:
    if not items:
        return np.zeros((0, width))
    return np.stack([featurize(item, radius, width) for item in items])


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so large |z| never overflows exp
    out = np.empty_like(z, dtype=np.float64)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


def bce(p: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(y * np.log(p + BCE_EPS) + (1.0 - y) * np.log(1.0 - p + BCE_EPS)))


class Adam:
    """Adam with bias correction; moments per parameter array"""

    def __init__(self, shapes: Sequence[Tuple[int, ...]], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(shape) for shape in shapes]
        self.v = [np.zeros(shape) for shape in shapes]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g ** 2
            m_hat = self.m[i] / (1 - self.beta1 ** self.t)
            v_hat = self.v[i] / (1 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class DiscriminatorModel:
    """Stack of affine + sigmoid layers ending in a single output unit"""

    def __init__(self, weights: List[np.ndarray], biases: List[np.ndarray], config: DiscriminatorConfig):
        if len(weights) != len(biases) or not weights:
            raise DiscriminatorError("model needs matching weight and bias lists")
        if weights[-1].shape[1] != 1:
            raise DiscriminatorError("output layer must have width 1")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.config = config
        self.optimizer = Adam(
            [p.shape for p in self.parameters()],
            lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2, eps=config.eps,
        )

    @classmethod
    def initialize(cls, input_width: int, config: DiscriminatorConfig, rng: np.random.Generator) -> "DiscriminatorModel":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases"""
        if not config.enabled:
            raise DiscriminatorError("architecture 'none' has no model")
        widths = [input_width] + config.layer_widths + [1]
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases, config)

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    def parameters(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases]

    def _activations(self, x: np.ndarray) -> List[np.ndarray]:
        if x.shape[-1] != self.input_width:
            raise DiscriminatorError(f"feature width {x.shape[-1]} does not match model input {self.input_width}")
        activations = [x]
        for w, b in zip(self.weights, self.biases):
            activations.append(sigmoid(activations[-1] @ w + b))
        return activations

    def forward(self, x: np.ndarray) -> Union[float, np.ndarray]:
        """D(m) for one feature vector (float) or a batch (array)"""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        out = self._activations(np.atleast_2d(x))[-1][:, 0]
        return float(out[0]) if single else out

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        return bce(self._activations(np.atleast_2d(x))[-1][:, 0], np.asarray(y, dtype=np.float64))

    def gradients(self, x: np.ndarray, y: np.ndarray) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
        """Mean BCE and its exact gradients (weight decay not included)"""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        activations = self._activations(x)
        p = activations[-1]
        n = x.shape[0]
        loss = bce(p[:, 0], y[:, 0])

        d_p = -(y / (p + BCE_EPS) - (1.0 - y) / (1.0 - p + BCE_EPS)) / n
        delta = d_p * p * (1.0 - p)
        grad_w: List[np.ndarray] = [np.zeros(0)] * len(self.weights)
        grad_b: List[np.ndarray] = [np.zeros(0)] * len(self.biases)
        for layer in reversed(range(len(self.weights))):
            grad_w[layer] = activations[layer].T @ delta
            grad_b[layer] = delta.sum(axis=0)
            if layer > 0:
                a = activations[layer]
                delta = (delta @ self.weights[layer].T) * a * (1.0 - a)
        return loss, grad_w, grad_b

    def train_step(self, x: np.ndarray, y: np.ndarray) -> float:
        """One Adam update on a batch; returns the loss before the update"""
        if len(y) == 0:
            raise DiscriminatorError("empty training batch")
        loss, grad_w, grad_b = self.gradients(x, y)
        if not np.isfinite(loss):
            raise DiscriminatorError(f"non-finite discriminator loss {loss}")
        decay = self.config.weight_decay
        grad_w = [g + decay * w for g, w in zip(grad_w, self.weights)]
        self.optimizer.step(self.parameters(), [*grad_w, *grad_b])
        return loss

    def save(self, path: Union[str, Path]) -> None:
        arrays = {
            "format_version": np.array(CHECKPOINT_VERSION),
            "config": np.array(self.config.model_dump_json()),
            "step": np.array(self.optimizer.t),
        }
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
        for i, (m, v) in enumerate(zip(self.optimizer.m, self.optimizer.v)):
            arrays[f"adam_m{i}"] = m
            arrays[f"adam_v{i}"] = v
        with open(path, "wb") as handle:
            np.savez(handle, **arrays)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DiscriminatorModel":
        try:
            data = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise DiscriminatorError(f"cannot read checkpoint {path}: {exc}") from exc
        with data:
            version = int(data["format_version"])
            if version != CHECKPOINT_VERSION:
                raise DiscriminatorError(f"checkpoint {path} has format version {version}")
            config = DiscriminatorConfig(**json.loads(str(data["config"])))
            layers = sum(1 for key in data.files if key.startswith("w"))
            model = cls(
                [data[f"w{i}"] for i in range(layers)],
                [data[f"b{i}"] for i in range(layers)],
                config,
            )
            model.optimizer.t = int(data["step"])
            count = len(model.optimizer.m)
            model.optimizer.m = [data[f"adam_m{i}"] for i in range(count)]
            model.optimizer.v = [data[f"adam_v{i}"] for i in range(count)]
        return model


def make_labels(n_reference: int, n_population: int, convention: str) -> np.ndarray:
    """Reference = 1 and population = 0 under 'original'; reversed when 'flipped'"""
    labels = np.concatenate([np.ones(n_reference), np.zeros(n_population)])
    if convention == "flipped":
        labels = 1.0 - labels
    elif convention != "original":
        raise DiscriminatorError(f"unknown label convention {convention!r}")
    return labels


def stratified_batches(labels: np.ndarray, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Shuffled index batches in which each class keeps its overall share"""
    n_batches = max(1, int(np.ceil(len(labels) / batch_size)))
    per_class = [
        np.array_split(rng.permutation(np.flatnonzero(labels == value)), n_batches)
        for value in np.unique(labels)
    ]
    return [rng.permutation(np.concatenate([chunks[k] for chunks in per_class])) for k in range(n_batches)]


def train_generation(
    model: DiscriminatorModel,
    reference: Sequence[Union[MoleculeGraph, Fingerprint]],
    population: Sequence[Union[MoleculeGraph, Fingerprint]],
    rng: np.random.Generator,
    convention: Optional[str] = None,
    epochs: Optional[int] = None,
    batch_size: Optional[int] = None,
) -> float:
    """Continue training on reference vs population; returns the last epoch's mean loss"""
    if not reference or not population:
        raise DiscriminatorError("discriminator training needs reference and population molecules")
    config = model.config
    convention = convention or config.labels
    epochs = epochs or config.epochs
    batch_size = batch_size or config.batch_size

    x = np.concatenate([
        featurize_many(reference, config.fp_radius, config.fp_width),
        featurize_many(population, config.fp_radius, config.fp_width),
    ])
    y = make_labels(len(reference), len(population), convention)

    epoch_loss = float("nan")
    for _ in range(epochs):
        losses = [model.train_step(x[batch], y[batch]) for batch in stratified_batches(y, batch_size, rng)]
        epoch_loss = float(np.mean(losses))
    logger.debug(f"[Discriminator] Trained {epochs} epochs on {len(y)} molecules - loss: {epoch_loss:.4f}")
    return epoch_loss
