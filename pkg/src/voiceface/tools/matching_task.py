"""
1:n matching evaluation task.
"""

from typing import Any, Dict
import logging

from voiceface.core.dataset import VoiceFaceDataset
from voiceface.core.embedder import ModalityPair
from voiceface.core.evaluation import (
    DIRECTIONS,
    MATCHING_PROTOCOLS,
    EvaluationReport,
    MatchingResult,
    evaluate_matching,
    evaluate_matching_batches,
)
from voiceface.core.sampling import SamplerConfig


class MatchingTask:
    """Voice-to-face (or face-to-voice) 1:n matching."""

    name = "match"

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings
        self.logger = logging.getLogger(__name__)

    def _run_batches(self, dataset: VoiceFaceDataset, pair: ModalityPair) -> MatchingResult:
        s = self.settings
        return evaluate_matching_batches(
            dataset,
            pair,
            b=s["batch_b"],
            q=s["batch_q"],
            r=s["batch_r"],
            steps=s["batch_steps"],
            seed=s["seed"],
            gender_balance=s["batch_gender_balance"],
            direction=s["direction"],
        )

    def run(self, dataset: VoiceFaceDataset, pair: ModalityPair) -> EvaluationReport:
        s = self.settings
        protocol = s.get("protocol", "random_tuples")
        if protocol == "identity_batches":
            result = self._run_batches(dataset, pair)
        else:
            result = evaluate_matching(
                dataset,
                pair,
                n=s["n"],
                num_instances=s["num_instances"],
                seed=s["seed"],
                stratify_gender=s["stratify_gender"],
                balance_gender=s["balance_gender"],
                direction=s["direction"],
            )
        self.logger.info(f"1:{result.n} matching accuracy {result.accuracy:.4f} over {result.num_instances} instances")
        parameters = {
            "n": result.n,
            "num_instances": result.num_instances,
            "num_identities": result.num_identities,
            "direction": s["direction"],
            "protocol": protocol,
            "seed": s["seed"],
        }
        if protocol == "identity_batches":
            parameters.update({
                "b": s["batch_b"],
                "q": s["batch_q"],
                "r": s["batch_r"],
                "steps": s["batch_steps"],
                "gender_balance": s["batch_gender_balance"],
            })
        else:
            parameters["balance_gender"] = s["balance_gender"]
        return EvaluationReport(
            task=self.name,
            accuracy_1n={result.n: result.accuracy},
            accuracy_by_gender=result.accuracy_by_gender,
            confidence_T=result.confidence_T,
            parameters=parameters,
        )

    def validate_parameters(self, parameters: Dict[str, Any]) -> tuple[bool, list[str]]:
        """
        Validate task parameters.

        Args:
            parameters: Evaluation settings

        Returns:
            Tuple of (is_valid, errors)
        """
        errors = []
        if parameters.get("n", 0) < 2:
            errors.append("n must be >= 2")
        if parameters.get("num_instances", 0) < 1:
            errors.append("num_instances must be >= 1")
        if parameters.get("direction") not in DIRECTIONS:
            errors.append(f"direction must be one of {sorted(DIRECTIONS)}")
        if parameters.get("balance_gender") and parameters.get("n", 0) > 4:
            errors.append("gender-balanced matching supports n <= 4")
        protocol = parameters.get("protocol", "random_tuples")
        if protocol not in MATCHING_PROTOCOLS:
            errors.append(f"protocol must be one of {MATCHING_PROTOCOLS}")
        elif protocol == "identity_batches":
            if parameters.get("n") != 2:
                errors.append("identity_batches protocol scores 1:2 matching only")
            if parameters.get("batch_steps", 0) < 1:
                errors.append("batch_steps must be >= 1")
            layout = SamplerConfig(
                b=parameters.get("batch_b", 0),
                q=parameters.get("batch_q", 0),
                r=parameters.get("batch_r", 0),
                gender_balance=parameters.get("batch_gender_balance", "off"),
            )
            errors.extend(f"batch {message}" for message in layout.validate()[1])
        return len(errors) == 0, errors
