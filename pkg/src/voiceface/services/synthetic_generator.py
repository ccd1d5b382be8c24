"""
Synthetic voice/face feature generator.

Each identity owns a Gaussian latent vector. Voice and face latents mix a
shared part with a private part (``rho`` is the shared fraction of variance),
get a gender shift on their first coordinate and are mapped to feature space
by per-population linear projections. Samples add isotropic noise.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Tuple
import logging

import numpy as np

from voiceface.core.dataset import GENDERS, IdentityRecord, VoiceFaceDataset
from voiceface.core.errors import InvalidConfig

# Stream tags mixed into seeds so projection, population and identity draws never collide.
_PROJECTION_STREAM = 0
_IDENTITY_STREAM = 1
_POPULATION_STREAM = 2


@dataclass
class GeneratorConfig:
    """Synthetic dataset shape and statistics."""

    num_identities: int = 200
    latent_dim: int = 16
    voice_dim: int = 64
    face_dim: int = 64
    noise_sigma: float = 0.1
    rho: float = 1.0
    gender_offset: float = 1.0
    populations: List[Tuple[str, float]] = field(default_factory=lambda: [("en", 0.0)])
    voices_per_identity: int = 10
    faces_per_identity: int = 10
    seed: int = 0

    def validate(self) -> tuple[bool, List[str]]:
        """
        Validate generator settings.

        Returns:
            tuple: (is_valid, list_of_errors)
        """
        errors = []
        if self.num_identities < 2:
            errors.append("num_identities must be >= 2")
        for name in ("latent_dim", "voice_dim", "face_dim"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be >= 1")
        if self.noise_sigma < 0:
            errors.append("noise_sigma must be >= 0")
        if not 0.0 <= self.rho <= 1.0:
            errors.append("rho must lie in [0, 1]")
        if not self.populations:
            errors.append("at least one population is required")
        for label, sigma in self.populations:
            if sigma < 0:
                errors.append(f"population {label}: perturbation sigma must be >= 0")
        if len({label for label, _ in self.populations}) != len(self.populations):
            errors.append("population labels must be unique")
        if self.voices_per_identity < 1 or self.faces_per_identity < 1:
            errors.append("samples per identity must be >= 1")
        return len(errors) == 0, errors

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["populations"] = [[label, sigma] for label, sigma in self.populations]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneratorConfig":
        data = dict(data)
        if "populations" in data:
            data["populations"] = [(str(label), float(sigma)) for label, sigma in data["populations"]]
        try:
            return cls(**data)
        except TypeError as e:
            raise InvalidConfig(f"Invalid generator section: {e}") from e


class SyntheticGenerator:
    """Deterministic generator; every draw derives from ``(seed, stream, index)``."""

    def __init__(self, cfg: GeneratorConfig):
        is_valid, errors = cfg.validate()
        if not is_valid:
            raise InvalidConfig(f"Invalid generator configuration: {', '.join(errors)}")
        self.cfg = cfg
        self.logger = logging.getLogger(__name__)
        rng = np.random.default_rng([cfg.seed, _PROJECTION_STREAM])
        scale = 1.0 / np.sqrt(cfg.latent_dim)
        self._base = {
            "voice": rng.standard_normal((cfg.voice_dim, cfg.latent_dim)) * scale,
            "face": rng.standard_normal((cfg.face_dim, cfg.latent_dim)) * scale,
        }
        self._projections: Dict[str, Dict[str, np.ndarray]] = {}
        for p, (label, sigma) in enumerate(cfg.populations):
            prng = np.random.default_rng([cfg.seed, _POPULATION_STREAM, p])
            self._projections[label] = {
                modality: base + sigma * scale * prng.standard_normal(base.shape)
                for modality, base in self._base.items()
            }

    def projections(self, population: str) -> Dict[str, np.ndarray]:
        """Voice and face projection matrices (features x latent) of a population."""
        return self._projections[population]

    def _identity(self, i: int) -> IdentityRecord:
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, _IDENTITY_STREAM, i])
        gender = GENDERS[i % 2]
        population = cfg.populations[i % len(cfg.populations)][0]
        shift = cfg.gender_offset if gender == "male" else -cfg.gender_offset

        shared = rng.standard_normal(cfg.latent_dim)
        samples = {}
        for modality, count in (("voice", cfg.voices_per_identity), ("face", cfg.faces_per_identity)):
            private = rng.standard_normal(cfg.latent_dim)
            latent = np.sqrt(cfg.rho) * shared + np.sqrt(1.0 - cfg.rho) * private
            latent[0] += shift
            projection = self._projections[population][modality]
            clean = projection @ latent
            noise = rng.standard_normal((count, projection.shape[0]))
            samples[modality] = clean[None, :] + cfg.noise_sigma * noise

        return IdentityRecord(
            id=f"id{i:05d}",
            gender=gender,
            population=population,
            voices=samples["voice"],
            faces=samples["face"],
        )

    def generate(self) -> VoiceFaceDataset:
        """Generate the full dataset."""
        records = [self._identity(i) for i in range(self.cfg.num_identities)]
        dataset = VoiceFaceDataset(records)
        counts = dataset.sample_counts()
        self.logger.info(
            f"Generated {counts['identities']} identities "
            f"({counts['voices']} voices, {counts['faces']} faces, rho={self.cfg.rho})"
        )
        return dataset


def generate(cfg: GeneratorConfig) -> VoiceFaceDataset:
    """
    Generate a synthetic dataset.

    Raises:
        InvalidConfig: for invalid settings (e.g. fewer than two identities)
    """
    return SyntheticGenerator(cfg).generate()
