from __future__ import annotations

import numpy as np

from seqsel.data.distributions import MarginUniformDist, NormalDist
from seqsel.data.models import CategoryMap, Dataset, SynthSpec


INFORMATIVE_DIST = MarginUniformDist(bound=1.0, margin=0.1)
NUISANCE_DIST = NormalDist(0.0, 1.0)


def apply_rule(informative: np.ndarray, rule: str, n_classes: int) -> np.ndarray:
    """Labels for rows of informative-feature values (rows x arity)."""
    positive = (np.asarray(informative) > 0).astype(np.int64)
    if rule == "SIGN":
        return positive[:, 0]
    if rule == "XOR_SIGN":
        if n_classes == 2:
            return positive.sum(axis=1) % 2
        return positive.sum(axis=1)
    raise ValueError(f"unknown rule {rule!r}")


def synth_generate(spec: SynthSpec, seed: int) -> Dataset:
    spec.validate()
    rng = np.random.default_rng(seed)

    features = NUISANCE_DIST.sample(rng, size=(spec.n_samples, spec.n_features))
    informative = INFORMATIVE_DIST.sample(rng, size=(spec.n_samples, len(spec.informative_indices)))
    labels = apply_rule(informative, spec.rule, spec.n_classes)

    if spec.noise_std > 0:
        informative = informative + NormalDist(0.0, spec.noise_std).sample(rng, size=informative.shape)
    features[:, spec.informative_indices] = informative

    names = spec.feature_names or [f"f{i}" for i in range(spec.n_features)]
    return Dataset(
        features=features,
        labels=labels,
        n_classes=spec.n_classes,
        feature_names=list(names),
        class_names=[str(c) for c in range(spec.n_classes)],
    )


def planted_category_map(spec: SynthSpec) -> CategoryMap:
    """First category holds the informative features; the rest is split into contiguous blocks."""
    informative = frozenset(spec.informative_indices)
    rest = [i for i in range(spec.n_features) if i not in informative]
    categories = [("informative", informative)]

    n_blocks = min(max(spec.n_categories - 1, 0), len(rest))
    for b, block in enumerate(np.array_split(np.array(rest, dtype=np.int64), n_blocks) if n_blocks else []):
        categories.append((f"block_{b + 1}", frozenset(int(i) for i in block)))
    return CategoryMap(categories=tuple(categories))
