"""Shared fixtures: small synthetic datasets and embedders."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from voiceface.core.dataset import IdentityRecord, VoiceFaceDataset  # noqa: E402
from voiceface.core.embedder import init_modality_pair  # noqa: E402
from voiceface.core.metric_space import MetricSpaceConfig  # noqa: E402
from voiceface.services.synthetic_generator import GeneratorConfig, generate  # noqa: E402


@pytest.fixture
def small_config():
    return GeneratorConfig(
        num_identities=12,
        latent_dim=4,
        voice_dim=6,
        face_dim=5,
        voices_per_identity=4,
        faces_per_identity=4,
        seed=3,
    )


@pytest.fixture
def small_dataset(small_config):
    return generate(small_config)


@pytest.fixture
def small_space():
    return MetricSpaceConfig(dim=4, scale=8.0)


@pytest.fixture
def small_pair(small_space):
    return init_modality_pair(6, 5, small_space, voice_hidden=[7], face_hidden=[], seed=1)


def make_dataset(num_identities, voice_dim=3, face_dim=3, samples=3, seed=0):
    """Random identities with alternating genders."""
    rng = np.random.default_rng(seed)
    records = [
        IdentityRecord(
            id=f"p{i}",
            gender="male" if i % 2 == 0 else "female",
            population="en",
            voices=rng.standard_normal((samples, voice_dim)),
            faces=rng.standard_normal((samples, face_dim)),
        )
        for i in range(num_identities)
    ]
    return VoiceFaceDataset(records)
