import numpy as np
import pytest

from seqsel.data.models import SynthSpec
from seqsel.data.preprocessing import zscore_apply, zscore_fit
from seqsel.data.synth import synth_generate


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sign_spec():
    return SynthSpec(
        n_features=6,
        n_classes=2,
        informative_indices=[2],
        rule="SIGN",
        n_samples=120,
        n_categories=3,
    )


@pytest.fixture
def sign_dataset(sign_spec):
    raw = synth_generate(sign_spec, seed=7)
    return zscore_apply(raw, zscore_fit(raw))


@pytest.fixture
def three_class_dataset():
    spec = SynthSpec(
        n_features=5,
        n_classes=3,
        informative_indices=[0, 3],
        rule="XOR_SIGN",
        n_samples=150,
    )
    raw = synth_generate(spec, seed=11)
    return zscore_apply(raw, zscore_fit(raw))
