from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NormalDist:
    """Gaussian feature noise; also used for label-independent nuisance columns."""
    mean: float = 0.0
    std: float = 1.0

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=size)


@dataclass(frozen=True)
class MarginUniformDist:
    """Uniform on [-bound, -margin] U [margin, bound], so the sign is never ambiguous."""
    bound: float = 1.0
    margin: float = 0.1

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        magnitude = rng.uniform(self.margin, self.bound, size=size)
        sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
        return sign * magnitude
