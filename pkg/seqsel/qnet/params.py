from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, Tuple

import numpy as np

from seqsel.errors import ContractError


ARCHS = {"d3qn", "ddqn"}

HIDDEN_LAYERS = 3
PRELU_INIT = 0.25


def param_shapes(arch: str, n: int, k: int, hidden: int) -> Dict[str, Tuple[int, ...]]:
    """Tensor shapes in manifest order; weights are (out, in)."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    fan_in = 2 * n
    for i in range(1, HIDDEN_LAYERS + 1):
        shapes[f"w{i}"] = (hidden, fan_in)
        shapes[f"b{i}"] = (hidden,)
        shapes[f"p{i}"] = (hidden,)
        fan_in = hidden
    if arch == "d3qn":
        shapes.update(wv=(1, hidden), bv=(1,), wa=(n + k, hidden), ba=(n + k,))
    else:
        shapes.update(wo=(n + k, hidden), bo=(n + k,))
    return shapes


@dataclass
class QNetParams:
    arch: str
    n_features: int
    n_classes: int
    hidden: int
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ContractError(f"arch must be one of {sorted(ARCHS)}, got {self.arch!r}")
        expected = self.expected_shapes()
        if set(self.tensors) != set(expected):
            raise ContractError(f"{self.arch} parameters need tensors {list(expected)}")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ContractError(f"tensor {name} has shape {self.tensors[name].shape}, expected {shape}")
        self.tensors = {name: self.tensors[name] for name in expected}

    @property
    def input_dim(self) -> int:
        return 2 * self.n_features

    @property
    def action_dim(self) -> int:
        return self.n_features + self.n_classes

    @property
    def dtype(self) -> np.dtype:
        return self.tensors["w1"].dtype

    def expected_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return param_shapes(self.arch, self.n_features, self.n_classes, self.hidden)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.tensors.items())

    def n_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def with_tensors(self, tensors: Dict[str, np.ndarray]) -> "QNetParams":
        return QNetParams(
            arch=self.arch,
            n_features=self.n_features,
            n_classes=self.n_classes,
            hidden=self.hidden,
            tensors=tensors,
        )

    def copy(self) -> "QNetParams":
        return self.with_tensors({name: t.copy() for name, t in self.tensors.items()})

    def same_layout(self, other: "QNetParams") -> bool:
        return (
            self.arch == other.arch
            and self.n_features == other.n_features
            and self.n_classes == other.n_classes
            and self.hidden == other.hidden
        )


def init_params(
    n: int,
    k: int,
    arch: str = "d3qn",
    seed: int = 0,
    hidden: int = 128,
    dtype=np.float32,
) -> QNetParams:
    """Fan-in scaled uniform weights, zero biases, PReLU slopes at 0.25."""
    if n < 1 or k < 1:
        raise ContractError("n and k must both be at least 1")
    if arch not in ARCHS:
        raise ContractError(f"arch must be one of {sorted(ARCHS)}, got {arch!r}")

    rng = np.random.default_rng(seed)
    tensors: Dict[str, np.ndarray] = {}
    for name, shape in param_shapes(arch, n, k, hidden).items():
        if name.startswith("w"):
            bound = np.sqrt(6.0 / shape[1])
            tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        elif name.startswith("p"):
            tensors[name] = np.full(shape, PRELU_INIT, dtype=dtype)
        else:
            tensors[name] = np.zeros(shape, dtype=dtype)

    return QNetParams(arch=arch, n_features=n, n_classes=k, hidden=hidden, tensors=tensors)
