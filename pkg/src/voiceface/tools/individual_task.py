"""
Per-identity 1:2 accuracy, used to find identities the model fails on.
"""

from typing import Any, Dict
import logging

from voiceface.core.dataset import VoiceFaceDataset
from voiceface.core.embedder import ModalityPair
from voiceface.core.evaluation import EvaluationReport, individual_test_all, low_accuracy_identities


class IndividualTask:
    """Individual test for every identity of the dataset."""

    name = "individual"

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings
        self.logger = logging.getLogger(__name__)

    def run(self, dataset: VoiceFaceDataset, pair: ModalityPair) -> EvaluationReport:
        s = self.settings
        per_identity = individual_test_all(dataset, pair, repeats=s["repeats"], seed=s["seed"])
        low = low_accuracy_identities(per_identity, s["low_accuracy_threshold"])
        if low:
            self.logger.warning(f"{len(low)} identit(ies) below {s['low_accuracy_threshold']}: {', '.join(low[:10])}")
        return EvaluationReport(
            task=self.name,
            per_identity_accuracy=per_identity,
            parameters={
                "repeats": s["repeats"],
                "seed": s["seed"],
                "low_accuracy_threshold": s["low_accuracy_threshold"],
                "low_accuracy_identities": low,
            },
        )

    def validate_parameters(self, parameters: Dict[str, Any]) -> tuple[bool, list[str]]:
        errors = []
        if parameters.get("repeats", 0) < 1:
            errors.append("repeats must be >= 1")
        if not 0.0 <= parameters.get("low_accuracy_threshold", -1.0) <= 1.0:
            errors.append("low_accuracy_threshold must lie in [0, 1]")
        return len(errors) == 0, errors
