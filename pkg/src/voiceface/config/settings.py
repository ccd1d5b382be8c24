"""
Runtime settings.
Handles environment variables and default locations. Nothing here changes
numerical results; experiments are fully described by their config file and seed.
"""

import os
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings:
    """Application settings management."""

    def __init__(self, base_path: Optional[Path] = None):
        # Base paths
        self.base_path = Path(base_path) if base_path else Path(__file__).parent.parent.parent.parent

        self._load_env()

        # Directory paths
        self.config_directory = self.base_path / os.getenv("CONFIG_DIRECTORY", "configs")
        self.results_directory = self.base_path / os.getenv("RESULTS_DIRECTORY", "results")

        # Logging configuration
        self.log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        self.log_format = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        self.log_file = os.getenv("LOG_FILE") or None

    def _load_env(self):
        """Load environment variables from .env file."""
        env_path = self.base_path / ".env"
        if env_path.exists():
            load_dotenv(env_path)

    def validate_configuration(self) -> tuple[bool, list[str]]:
        """
        Validate configuration settings.

        Returns:
            tuple: (is_valid, list_of_errors)
        """
        errors = []

        if self.log_level not in LOG_LEVELS:
            errors.append(f"LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")

        if self.results_directory.exists() and not self.results_directory.is_dir():
            errors.append(f"Results path is not a directory: {self.results_directory}")

        is_valid = len(errors) == 0
        return is_valid, errors

    def get_config_path(self, name: str) -> Path:
        """
        Resolve a named experiment config (``quick`` -> ``configs/quick.json``).

        Args:
            name: Config name or file name

        Returns:
            Path to the config file
        """
        filename = name if name.endswith(".json") else f"{name}.json"
        return self.config_directory / filename

    def get_report_file_path(self, report_type: str, filename: str) -> Path:
        """
        Get report file path.

        Args:
            report_type: Type of report (evaluation, confidence, segments)
            filename: Report filename

        Returns:
            Path to report file
        """
        report_dir = self.results_directory / "reports" / report_type
        report_dir.mkdir(parents=True, exist_ok=True)
        return report_dir / filename

    def __str__(self) -> str:
        """String representation of settings."""
        return f"Settings(log_level={self.log_level}, results_dir={self.results_directory})"
