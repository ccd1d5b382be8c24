"""
Voice-to-face retrieval task scored by mAP.
"""

from typing import Any, Dict
import logging

from voiceface.core.dataset import VoiceFaceDataset
from voiceface.core.embedder import ModalityPair
from voiceface.core.evaluation import EvaluationReport, evaluate_retrieval


def retrieval_kwargs(settings: Dict[str, Any]) -> Dict[str, Any]:
    """Gallery layout arguments shared by plain and joint retrieval."""
    return {
        "num_identities": settings["gallery_identities"],
        "faces_per_identity": settings["faces_per_identity"],
        "queries_per_identity": settings["queries_per_identity"],
        "chance_seeds": settings["chance_seeds"],
    }


class RetrievalTask:
    """Rank a face gallery for each voice query."""

    name = "retrieve"

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings
        self.logger = logging.getLogger(__name__)

    def run(self, dataset: VoiceFaceDataset, pair: ModalityPair) -> EvaluationReport:
        s = self.settings
        result = evaluate_retrieval(dataset, pair, seed=s["seed"], **retrieval_kwargs(s))
        self.logger.info(
            f"Retrieval mAP {result.map_score:.4f} (chance {result.chance_map}) "
            f"over {result.num_queries} queries, gallery of {result.gallery_size}"
        )
        return EvaluationReport(
            task=self.name,
            map_score=result.map_score,
            chance_map=result.chance_map,
            parameters={
                "gallery_size": result.gallery_size,
                "num_queries": result.num_queries,
                "seed": s["seed"],
                **retrieval_kwargs(s),
            },
        )

    def validate_parameters(self, parameters: Dict[str, Any]) -> tuple[bool, list[str]]:
        errors = []
        for key in ("gallery_identities", "faces_per_identity", "queries_per_identity"):
            if parameters.get(key, 0) < 1:
                errors.append(f"{key} must be >= 1")
        if parameters.get("chance_seeds", 0) < 0:
            errors.append("chance_seeds must be >= 0")
        return len(errors) == 0, errors
