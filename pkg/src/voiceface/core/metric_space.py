"""
Shared L2-constrained embedding space.

Embeddings live on a hypersphere of radius ``scale``. Similarity is the inner
product, distance is Euclidean; on the sphere both induce the same ranking.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from voiceface.core.errors import DimensionMismatch, InvalidConfig, ZeroVector

EPSILON = 1e-12
DEFAULT_SCALE = 128.0
DEFAULT_DIM = 128


@dataclass(frozen=True)
class MetricSpaceConfig:
    """Dimensionality and radius of the shared embedding space."""

    dim: int = DEFAULT_DIM
    scale: float = DEFAULT_SCALE

    def validate(self) -> tuple[bool, List[str]]:
        """
        Validate space parameters.

        Returns:
            tuple: (is_valid, list_of_errors)
        """
        errors = []
        if not isinstance(self.dim, int) or self.dim < 1:
            errors.append(f"dim must be a positive integer, got {self.dim}")
        if not self.scale > 0:
            errors.append(f"scale must be positive, got {self.scale}")
        return len(errors) == 0, errors

    def __post_init__(self):
        is_valid, errors = self.validate()
        if not is_valid:
            raise InvalidConfig("; ".join(errors))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "scale": self.scale}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricSpaceConfig":
        return cls(dim=int(data["dim"]), scale=float(data["scale"]))


def l2_normalize_scale(z: np.ndarray, cfg: MetricSpaceConfig) -> np.ndarray:
    """
    Project onto the sphere of radius ``cfg.scale``.

    Accepts a single vector or a matrix of row vectors.

    Args:
        z: Vector (dim,) or matrix (rows, dim)
        cfg: Metric space configuration

    Returns:
        ``s * z / ||z||`` row-wise, as float64

    Raises:
        ZeroVector: if any row has norm <= 1e-12
    """
    z = np.asarray(z, dtype=np.float64)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norms <= EPSILON):
        raise ZeroVector("cannot normalize a zero-norm embedder output")
    return cfg.scale * z / norms


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(f"dimension {a.shape[-1]} != {b.shape[-1]}")


def inner_product_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product of two embeddings."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_dims(a, b)
    return float(np.dot(a, b))


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two embeddings."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_dims(a, b)
    return float(np.linalg.norm(a - b))


def similarity_matrix(queries: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Inner products between every query row and every candidate row."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    _check_dims(queries, candidates)
    return queries @ candidates.T


def best_match(query: np.ndarray, candidates: np.ndarray) -> int:
    """Index of the most similar candidate; ties go to the lowest index."""
    scores = similarity_matrix(query, candidates)[0]
    return int(np.argmax(scores))


def nearest_by_distance(query: np.ndarray, candidates: np.ndarray) -> int:
    """Index of the closest candidate; ties go to the lowest index."""
    query = np.asarray(query, dtype=np.float64)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    _check_dims(query, candidates)
    return int(np.argmin(np.linalg.norm(candidates - query, axis=1)))


def rank_by_similarity(query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Candidate indices by descending similarity, ties in ascending index order."""
    scores = similarity_matrix(query, candidates)[0]
    return np.argsort(-scores, kind="stable")
