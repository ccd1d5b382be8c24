"""
Evaluation task factory.
Registry of task classes keyed by the ``--task`` name.
"""

from typing import Any, Dict, Optional
import logging

from voiceface.tools.individual_task import IndividualTask
from voiceface.tools.joint_task import JointTask
from voiceface.tools.matching_task import MatchingTask
from voiceface.tools.retrieval_task import RetrievalTask


class TaskFactory:
    """Factory for creating evaluation tasks."""

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings
        self.logger = logging.getLogger(__name__)

        # Task registry
        self._tasks = {
            "match": MatchingTask,
            "retrieve": RetrievalTask,
            "joint": JointTask,
            "individual": IndividualTask,
        }

    def create_task(self, task_type: str) -> Optional[object]:
        """
        Create a task instance by type.

        Args:
            task_type: Type of task to create

        Returns:
            Task instance or None if the type is unknown
        """
        if task_type not in self._tasks:
            self.logger.error(f"Unknown task type: {task_type}")
            return None
        return self._tasks[task_type](self.settings)

    def get_available_tasks(self) -> Dict[str, str]:
        """
        Get list of available tasks.

        Returns:
            Dictionary of task types and descriptions
        """
        return {name: (cls.__doc__ or "").strip() for name, cls in self._tasks.items()}

    def validate_task_parameters(self, task_type: str) -> tuple[bool, list[str]]:
        """
        Validate the factory settings for one task.

        Args:
            task_type: Type of task

        Returns:
            Tuple of (is_valid, errors)
        """
        task = self.create_task(task_type)
        if not task:
            return False, [f"Invalid task type: {task_type}"]
        return task.validate_parameters(self.settings)

    def is_task_available(self, task_type: str) -> bool:
        return task_type in self._tasks
