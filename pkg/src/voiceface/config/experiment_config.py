"""
Experiment configuration mapping and validation.
"""

from typing import Any, Dict, List, Optional
from pathlib import Path
import copy
import json

from voiceface.core.errors import ArtifactIOError, InvalidConfig, VoiceFaceError
from voiceface.core.metric_space import MetricSpaceConfig
from voiceface.core.sampling import SamplerConfig
from voiceface.core.training import TrainingConfig
from voiceface.services.synthetic_generator import GeneratorConfig

DEFAULT_SECTIONS: Dict[str, Dict[str, Any]] = {
    "generator": {
        "num_identities": 200,
        "latent_dim": 16,
        "voice_dim": 64,
        "face_dim": 64,
        "noise_sigma": 0.1,
        "rho": 1.0,
        "gender_offset": 1.0,
        "populations": [["en", 0.0]],
        "voices_per_identity": 10,
        "faces_per_identity": 10,
        "seed": None,
    },
    "embedders": {
        "dim": 128,
        "scale": 128.0,
        "voice_hidden": [],
        "face_hidden": [],
        "activation": "relu",
        "anchoring": "voice",
        "seed": None,
    },
    "training": {
        "margin": 1.0,
        "optimizer": "adam",
        "lr_schedule": None,
        "total_steps": 2000,
        "reduction": "sum",
        "lr_multipliers": {},
        "pretrain_steps": 0,
        "log_every": 100,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "seed": None,
    },
    "sampler": {
        "b": 4,
        "q": 4,
        "r": 8,
        "gender_balance": "off",
        "seed": None,
    },
    "evaluation": {
        "task": "match",
        "n": 2,
        "num_instances": 10000,
        "stratify_gender": False,
        "balance_gender": False,
        "direction": "voice_to_face",
        "protocol": "random_tuples",
        "batch_b": 4,
        "batch_q": 4,
        "batch_r": 8,
        "batch_steps": 1000,
        "batch_gender_balance": "three_to_one",
        "gallery_identities": 100,
        "faces_per_identity": 5,
        "queries_per_identity": 40,
        "chance_seeds": 50,
        "m_f": 1,
        "m_v": 1,
        "joint_task": "match",
        "repeats": 10,
        "low_accuracy_threshold": 0.6,
        "seed": None,
    },
    "paths": {
        "dataset": None,
        "checkpoint": None,
        "loss_history": None,
        "report_json": None,
        "report_csv": None,
    },
}

TOP_LEVEL_KEYS = set(DEFAULT_SECTIONS) | {"seed"}


class ExperimentConfig:
    """One experiment: generator, embedders, training, sampler, evaluation and paths."""

    def __init__(self, config_data: Optional[Dict[str, Any]] = None):
        config_data = config_data or {}
        self.config_data = copy.deepcopy(config_data)
        self.seed = int(config_data.get("seed", 0))
        self.sections: Dict[str, Dict[str, Any]] = {}
        for name, defaults in DEFAULT_SECTIONS.items():
            section = copy.deepcopy(defaults)
            given = config_data.get(name) or {}
            if isinstance(given, dict):
                section.update(copy.deepcopy(given))
            self.sections[name] = section

    def section_seed(self, name: str) -> int:
        """Section seed, falling back to the global seed."""
        seed = self.sections[name].get("seed")
        return self.seed if seed is None else int(seed)

    def validate(self) -> tuple[bool, List[str]]:
        """
        Validate experiment configuration.

        Returns:
            tuple: (is_valid, list_of_errors)
        """
        errors = []

        for key in sorted(set(self.config_data) - TOP_LEVEL_KEYS):
            errors.append(f"Unknown top-level key: {key}")
        for name, defaults in DEFAULT_SECTIONS.items():
            given = self.config_data.get(name) or {}
            if not isinstance(given, dict):
                errors.append(f"Section {name} must be an object")
                continue
            for key in sorted(set(given) - set(defaults)):
                errors.append(f"Unknown key in {name}: {key}")
        if errors:
            return False, errors

        builders = {
            "generator": self.generator_config,
            "embedders": self.metric_space,
            "training": self.training_config,
            "sampler": self.sampler_config,
        }
        for name, build in builders.items():
            try:
                built = build()
            except (TypeError, ValueError, VoiceFaceError) as e:
                errors.append(f"{name}: {e}")
                continue
            if hasattr(built, "validate"):
                is_valid, section_errors = built.validate()
                errors.extend(f"{name}: {message}" for message in section_errors)

        embedders = self.sections["embedders"]
        if embedders["anchoring"] not in ("voice", "face", "none"):
            errors.append("embedders: anchoring must be voice, face or none")
        if embedders["activation"] not in ("identity", "relu"):
            errors.append("embedders: activation must be identity or relu")

        evaluation = self.sections["evaluation"]
        if evaluation["task"] not in ("match", "retrieve", "joint", "individual"):
            errors.append(f"evaluation: unknown task {evaluation['task']}")
        if evaluation["n"] < 2:
            errors.append("evaluation: n must be >= 2")
        if evaluation["num_instances"] < 1:
            errors.append("evaluation: num_instances must be >= 1")
        if evaluation["m_f"] < 1 or evaluation["m_v"] < 1:
            errors.append("evaluation: m_f and m_v must be >= 1")
        if evaluation["joint_task"] not in ("match", "retrieve"):
            errors.append("evaluation: joint_task must be match or retrieve")
        if evaluation["direction"] not in ("voice_to_face", "face_to_voice"):
            errors.append("evaluation: direction must be voice_to_face or face_to_voice")
        if evaluation["protocol"] not in ("random_tuples", "identity_batches"):
            errors.append("evaluation: protocol must be random_tuples or identity_batches")
        elif evaluation["protocol"] == "identity_batches":
            if evaluation["n"] != 2:
                errors.append("evaluation: identity_batches protocol scores 1:2 matching only")
            if evaluation["batch_steps"] < 1:
                errors.append("evaluation: batch_steps must be >= 1")
            _, batch_errors = self.batch_sampler_config().validate()
            errors.extend(f"evaluation: batch {message}" for message in batch_errors)

        is_valid = len(errors) == 0
        return is_valid, errors

    def generator_config(self) -> GeneratorConfig:
        section = dict(self.sections["generator"])
        section["seed"] = self.section_seed("generator")
        return GeneratorConfig.from_dict(section)

    def metric_space(self) -> MetricSpaceConfig:
        section = self.sections["embedders"]
        return MetricSpaceConfig(dim=int(section["dim"]), scale=float(section["scale"]))

    def embedder_settings(self) -> Dict[str, Any]:
        """Keyword arguments for ``init_modality_pair`` (minus feature dims)."""
        section = self.sections["embedders"]
        return {
            "space": self.metric_space(),
            "voice_hidden": list(section["voice_hidden"]),
            "face_hidden": list(section["face_hidden"]),
            "activation": section["activation"],
            "anchoring": section["anchoring"],
            "seed": self.section_seed("embedders"),
        }

    def training_config(self) -> TrainingConfig:
        section = dict(self.sections["training"])
        section["seed"] = self.section_seed("training")
        if section["lr_schedule"] is not None:
            section["lr_schedule"] = [(until, lr) for until, lr in section["lr_schedule"]]
        return TrainingConfig(**section)

    def sampler_config(self) -> SamplerConfig:
        section = dict(self.sections["sampler"])
        section["seed"] = self.section_seed("sampler")
        return SamplerConfig(**section)

    def batch_sampler_config(self) -> SamplerConfig:
        """Identity-batch layout for the identity_batches matching protocol."""
        evaluation = self.sections["evaluation"]
        return SamplerConfig(
            b=evaluation["batch_b"],
            q=evaluation["batch_q"],
            r=evaluation["batch_r"],
            gender_balance=evaluation["batch_gender_balance"],
            seed=self.section_seed("evaluation"),
        )

    def evaluation_settings(self) -> Dict[str, Any]:
        section = dict(self.sections["evaluation"])
        section["seed"] = self.section_seed("evaluation")
        return section

    def path(self, key: str) -> Optional[Path]:
        value = self.sections["paths"].get(key)
        return Path(value) if value else None

    def with_overrides(self, seed: Optional[int] = None, **sections: Dict[str, Any]) -> "ExperimentConfig":
        """
        Copy with command-line overrides applied; ``None`` values are skipped.

        Args:
            seed: Global seed override
            **sections: Per-section key/value overrides

        Returns:
            Validated ExperimentConfig
        """
        data = copy.deepcopy(self.to_dict())
        if seed is not None:
            data["seed"] = seed
        for name, values in sections.items():
            data.setdefault(name, {})
            data[name].update({k: v for k, v in values.items() if v is not None})
        return ExperimentConfig.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (all sections, defaults filled in)."""
        data: Dict[str, Any] = {"seed": self.seed}
        data.update(copy.deepcopy(self.sections))
        return data

    @classmethod
    def from_file(cls, file_path: Path) -> "ExperimentConfig":
        """
        Load experiment configuration from file.

        Args:
            file_path: Path to configuration file

        Returns:
            ExperimentConfig instance
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                config_data = json.load(f)
        except OSError as e:
            raise ArtifactIOError(f"Cannot read config {file_path}: {e}") from e
        except json.JSONDecodeError as e:
            raise InvalidConfig(f"Config {file_path} is not valid JSON: {e.msg}") from e
        if not isinstance(config_data, dict):
            raise InvalidConfig(f"Config {file_path} must be a JSON object")
        return cls.from_dict(config_data)

    @classmethod
    def from_dict(cls, config_data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Create experiment configuration from dictionary.

        Raises:
            InvalidConfig: on unknown keys or out-of-range values
        """
        config = cls(config_data)
        is_valid, errors = config.validate()
        if not is_valid:
            raise InvalidConfig("Invalid experiment configuration: " + "; ".join(errors))
        return config

    def __str__(self) -> str:
        """String representation."""
        training = self.sections["training"]
        return f"ExperimentConfig(seed={self.seed}, steps={training['total_steps']})"

    def __repr__(self) -> str:
        """String representation."""
        return self.__str__()
