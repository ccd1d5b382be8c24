import json
import logging
from pathlib import Path

import pytest

from voiceface.config.experiment_config import ExperimentConfig
from voiceface.config.settings import Settings
from voiceface.core.errors import ArtifactIOError, InvalidConfig
from voiceface.utils.logging_utils import setup_logging

REPO_CONFIGS = Path(__file__).parent.parent / "configs"
ENV_KEYS = ("LOG_LEVEL", "LOG_FORMAT", "LOG_FILE", "CONFIG_DIRECTORY", "RESULTS_DIRECTORY")


@pytest.fixture
def clean_env(monkeypatch):
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    return monkeypatch


class TestSettings:
    def test_defaults(self, tmp_path, clean_env):
        settings = Settings(base_path=tmp_path)
        assert settings.log_level == "INFO"
        assert settings.log_file is None
        assert settings.config_directory == tmp_path / "configs"
        assert settings.validate_configuration() == (True, [])

    def test_dotenv_file(self, tmp_path, clean_env):
        (tmp_path / ".env").write_text("LOG_LEVEL=debug\nRESULTS_DIRECTORY=out\n", encoding="utf-8")
        settings = Settings(base_path=tmp_path)
        assert settings.log_level == "DEBUG"
        assert settings.results_directory == tmp_path / "out"

    def test_environment_wins_over_dotenv(self, tmp_path, clean_env):
        (tmp_path / ".env").write_text("LOG_LEVEL=DEBUG\n", encoding="utf-8")
        clean_env.setenv("LOG_LEVEL", "WARNING")
        assert Settings(base_path=tmp_path).log_level == "WARNING"

    def test_invalid_log_level(self, tmp_path, clean_env):
        clean_env.setenv("LOG_LEVEL", "LOUD")
        is_valid, errors = Settings(base_path=tmp_path).validate_configuration()
        assert not is_valid
        assert "LOG_LEVEL" in errors[0]

    def test_results_path_is_a_file(self, tmp_path, clean_env):
        (tmp_path / "results").write_text("", encoding="utf-8")
        is_valid, _ = Settings(base_path=tmp_path).validate_configuration()
        assert not is_valid

    def test_paths(self, tmp_path, clean_env):
        settings = Settings(base_path=tmp_path)
        assert settings.get_config_path("quick") == tmp_path / "configs" / "quick.json"
        assert settings.get_config_path("quick.json") == tmp_path / "configs" / "quick.json"
        report = settings.get_report_file_path("evaluation", "match.json")
        assert report == tmp_path / "results" / "reports" / "evaluation" / "match.json"
        assert report.parent.is_dir()


class TestExperimentConfig:
    def test_defaults(self):
        config = ExperimentConfig.from_dict({})
        assert config.seed == 0
        assert config.metric_space().dim == 128
        assert config.sampler_config().triplets_per_batch() == 3072
        assert config.evaluation_settings()["m_f"] == 1
        assert config.path("dataset") is None

    @pytest.mark.parametrize("name", ["default", "quick", "joint_retrieval"])
    def test_repository_configs_are_valid(self, name):
        config = ExperimentConfig.from_file(REPO_CONFIGS / f"{name}.json")
        assert config.validate() == (True, [])

    def test_section_seeds_fall_back_to_global(self):
        config = ExperimentConfig.from_dict({"seed": 5, "sampler": {"seed": 9}})
        assert config.sampler_config().seed == 9
        assert config.training_config().seed == 5
        assert config.generator_config().seed == 5
        assert config.embedder_settings()["seed"] == 5

    def test_batch_matching_layout(self):
        config = ExperimentConfig.from_dict({"seed": 5, "evaluation": {"protocol": "identity_batches", "batch_r": 2}})
        layout = config.batch_sampler_config()
        assert (layout.b, layout.q, layout.r, layout.gender_balance, layout.seed) == (4, 4, 2, "three_to_one", 5)
        assert layout.triplets_per_batch() == 4 * 3 * 4 * 4

    @pytest.mark.parametrize(
        "data",
        [
            {"colour": "red"},
            {"training": {"learning_rate": 0.1}},
            {"generator": {"num_identities": 1}},
            {"training": {"margin": -1.0}},
            {"sampler": {"b": 1}},
            {"embedders": {"anchoring": "both"}},
            {"evaluation": {"task": "classify"}},
            {"evaluation": {"n": 1}},
            {"evaluation": {"m_v": 0}},
            {"generator": "lots"},
            {"sampler": {"seed": -3}},
            {"evaluation": {"protocol": "sequential"}},
            {"evaluation": {"protocol": "identity_batches", "n": 4}},
            {"evaluation": {"protocol": "identity_batches", "batch_steps": 0}},
            {"evaluation": {"protocol": "identity_batches", "batch_b": 6}},
        ],
    )
    def test_invalid(self, data):
        with pytest.raises(InvalidConfig):
            ExperimentConfig.from_dict(data)

    def test_lr_schedule_from_json(self):
        config = ExperimentConfig.from_dict({"training": {"lr_schedule": [[1000, 1e-3], [None, 1e-4]]}})
        assert config.training_config().lr_schedule == [(1000, 1e-3), (None, 1e-4)]

    def test_overrides(self):
        base = ExperimentConfig.from_dict({"seed": 1, "training": {"total_steps": 50}})
        changed = base.with_overrides(seed=3, training={"total_steps": 7, "margin": None})
        assert changed.seed == 3
        assert changed.training_config().total_steps == 7
        assert changed.training_config().margin == 1.0
        assert base.training_config().total_steps == 50

    def test_overrides_are_validated(self):
        with pytest.raises(InvalidConfig):
            ExperimentConfig.from_dict({}).with_overrides(sampler={"b": 0})

    def test_file_errors(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            ExperimentConfig.from_file(tmp_path / "absent.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{", encoding="utf-8")
        with pytest.raises(InvalidConfig):
            ExperimentConfig.from_file(broken)
        listed = tmp_path / "list.json"
        listed.write_text(json.dumps([1, 2]), encoding="utf-8")
        with pytest.raises(InvalidConfig):
            ExperimentConfig.from_file(listed)

    def test_round_trip(self):
        config = ExperimentConfig.from_dict({"seed": 4, "generator": {"rho": 0.5}})
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again.to_dict() == config.to_dict()
        assert str(again) == "ExperimentConfig(seed=4, steps=2000)"


class TestLogging:
    @pytest.fixture(autouse=True)
    def restore_root(self):
        root = logging.getLogger()
        handlers, level = list(root.handlers), root.level
        yield
        for handler in list(root.handlers):
            root.removeHandler(handler)
            handler.close()
        for handler in handlers:
            root.addHandler(handler)
        root.setLevel(level)

    def test_setup_with_file(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        logger = setup_logging("debug", log_file=log_file, console_output=False)
        assert logger.level == logging.DEBUG
        assert len(logger.handlers) == 1
        logging.getLogger("voiceface.test").debug("hello")
        logger.handlers[0].flush()
        assert "hello" in log_file.read_text(encoding="utf-8")

    def test_setup_replaces_handlers(self):
        setup_logging("INFO")
        setup_logging("WARNING")
        root = logging.getLogger()
        assert len(root.handlers) == 1
        assert root.level == logging.WARNING

    def test_unknown_level(self):
        with pytest.raises(ValueError):
            setup_logging("LOUD")
