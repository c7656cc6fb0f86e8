import numpy as np
import pytest

from fuselens import SyntheticSpec, generate_synthetic

# Fixture where the few-shot classifier is strictly better on base, the
# zero-shot one strictly better on novel, and the entropy ID scores separate
# the two splits perfectly (asserted where a test relies on it).
ORACLE_SPEC = SyntheticSpec(
    n_base_classes=12,
    n_novel_classes=12,
    dim=16,
    per_class_count=50,
    noise_scale=0.1,
    temperature=0.25,
    seed=123,
)

# Small bundle for CLI round-trips where runtime matters more than margins.
SMALL_SPEC = SyntheticSpec(
    n_base_classes=4,
    n_novel_classes=4,
    dim=8,
    per_class_count=5,
    temperature=0.25,
    seed=11,
)


@pytest.fixture(scope="session")
def oracle_bundle():
    return generate_synthetic(ORACLE_SPEC)


@pytest.fixture(scope="session")
def small_bundle():
    return generate_synthetic(SMALL_SPEC)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
