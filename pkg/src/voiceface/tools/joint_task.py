"""
Joint matching/retrieval task: identities represented by averaged embeddings.
"""

from typing import Any, Dict
import logging

from voiceface.core.dataset import VoiceFaceDataset
from voiceface.core.embedder import ModalityPair
from voiceface.core.evaluation import EvaluationReport, MatchingResult, evaluate_joint
from voiceface.tools.retrieval_task import retrieval_kwargs


class JointTask:
    """Matching or retrieval over joint embeddings of m_f faces and m_v voices."""

    name = "joint"

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings
        self.logger = logging.getLogger(__name__)

    def run(self, dataset: VoiceFaceDataset, pair: ModalityPair) -> EvaluationReport:
        s = self.settings
        extra = retrieval_kwargs(s) if s["joint_task"] == "retrieve" else {}
        result = evaluate_joint(
            dataset,
            pair,
            m_f=s["m_f"],
            m_v=s["m_v"],
            task=s["joint_task"],
            n=s["n"],
            num_instances=s["num_instances"],
            seed=s["seed"],
            **extra,
        )
        self.logger.info(f"Joint {s['joint_task']} (m_f={s['m_f']}, m_v={s['m_v']}): {result.metric:.4f}")
        report = EvaluationReport(
            task=self.name,
            parameters={"joint_task": s["joint_task"], "m_f": s["m_f"], "m_v": s["m_v"], "seed": s["seed"]},
        )
        if isinstance(result, MatchingResult):
            report.accuracy_1n = {result.n: result.accuracy}
            report.confidence_T = result.confidence_T
            report.parameters.update({"n": result.n, "num_instances": result.num_instances})
        else:
            report.map_score = result.map_score
            report.chance_map = result.chance_map
            report.parameters.update({"gallery_size": result.gallery_size, "num_queries": result.num_queries})
        return report

    def validate_parameters(self, parameters: Dict[str, Any]) -> tuple[bool, list[str]]:
        errors = []
        if parameters.get("m_f", 0) < 1 or parameters.get("m_v", 0) < 1:
            errors.append("m_f and m_v must be >= 1")
        if parameters.get("joint_task") not in ("match", "retrieve"):
            errors.append("joint_task must be match or retrieve")
        if parameters.get("joint_task") == "retrieve" and parameters.get("m_f", 1) > parameters.get("faces_per_identity", 0):
            errors.append("m_f cannot exceed faces_per_identity")
        return len(errors) == 0, errors
