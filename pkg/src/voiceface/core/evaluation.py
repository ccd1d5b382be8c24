"""
Matching and retrieval evaluation protocols.

All protocols embed every sample of the dataset once, then draw test
instances from a seeded generator. Similarity is the inner product in the
shared space; argmax ties resolve to the lowest candidate index.
"""

from dataclasses import dataclass, field
from typing import Any, Collection, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from voiceface.core.confidence import TestDesign, confidence_T, significant
from voiceface.core.dataset import GENDERS, IdentityRecord, VoiceFaceDataset
from voiceface.core.embedder import EmbedderParams, ModalityPair, embed_batch
from voiceface.core.errors import InsufficientData, InvalidArgs, NoRelevantItems
from voiceface.core.metric_space import MetricSpaceConfig, l2_normalize_scale, rank_by_similarity
from voiceface.core.sampling import IdentitySampler, SamplerConfig

DIRECTIONS = {
    "voice_to_face": ("voice", "face"),
    "face_to_voice": ("face", "voice"),
}
SPLIT_MODES = ("unseen_unheard", "seen_heard")
MATCHING_PROTOCOLS = ("random_tuples", "identity_batches")

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Joint embeddings
# ---------------------------------------------------------------------------


def _joint(embeddings: np.ndarray, space: MetricSpaceConfig) -> np.ndarray:
    """Mean of row embeddings re-projected to the sphere; a single row is returned as is."""
    if embeddings.shape[0] == 1:
        return embeddings[0]
    return l2_normalize_scale(embeddings.mean(axis=0), space)


def joint_embedding(vectors: np.ndarray, params: EmbedderParams, space: MetricSpaceConfig) -> np.ndarray:
    """
    Represent several samples of one identity by one embedding.

    Args:
        vectors: Feature vectors, shape (k, in_dim) with k >= 1
        params: Embedder for the vectors' modality
        space: Metric space

    Returns:
        Normalized mean of the k embeddings

    Raises:
        ZeroVector: if the embeddings cancel out
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if vectors.shape[0] == 0:
        raise InsufficientData("joint embedding needs at least one vector")
    return _joint(embed_batch(params, vectors, space), space)


@dataclass
class EmbeddedDataset:
    """Per-identity embedding matrices for both modalities."""

    voices: List[np.ndarray]
    faces: List[np.ndarray]

    def of(self, modality: str) -> List[np.ndarray]:
        return self.voices if modality == "voice" else self.faces


def embed_dataset(dataset: VoiceFaceDataset, pair: ModalityPair) -> EmbeddedDataset:
    """Embed every sample once; parameters are only read."""
    result = {}
    for modality in ("voice", "face"):
        blocks = [record.samples(modality) for record in dataset]
        counts = [block.shape[0] for block in blocks]
        non_empty = [block for block in blocks if block.shape[0]]
        if non_empty:
            embedded = embed_batch(pair.embedder(modality), np.concatenate(non_empty), pair.space)
        else:
            embedded = np.zeros((0, pair.space.dim))
        result[modality] = np.split(embedded, np.cumsum(counts)[:-1]) if counts else []
    return EmbeddedDataset(voices=result["voice"], faces=result["face"])


def _draw_rows(rng: np.random.Generator, pool_size: int, k: int) -> np.ndarray:
    """k row indices, without replacement when the pool allows it."""
    if pool_size == 0:
        raise InsufficientData("identity has no samples in the required modality")
    return rng.choice(pool_size, size=k, replace=pool_size < k)


# ---------------------------------------------------------------------------
# 1:n matching
# ---------------------------------------------------------------------------


@dataclass
class MatchingInstance:
    """
    One query against n candidates, exactly one of which shares its identity.

    ``query`` and each candidate are row matrices; several rows form a joint
    embedding.
    """

    query: np.ndarray
    candidates: List[np.ndarray]
    true_index: int
    query_id: str = ""
    candidate_ids: List[str] = field(default_factory=list)
    direction: str = "voice_to_face"

    @property
    def n(self) -> int:
        return len(self.candidates)


def predict_index(query_embedding: np.ndarray, candidate_embeddings: np.ndarray) -> int:
    """Argmax of inner-product similarity with lowest-index tie-breaking."""
    return int(np.argmax(candidate_embeddings @ query_embedding))


def match_1n(instance: MatchingInstance, pair: ModalityPair) -> int:
    """
    Predict which candidate shares the query's identity.

    Args:
        instance: Matching instance (n >= 2)
        pair: Embedders

    Returns:
        Predicted candidate index
    """
    if instance.n < 2:
        raise InvalidArgs("1:n matching needs at least two candidates")
    query_modality, candidate_modality = DIRECTIONS[instance.direction]
    query = joint_embedding(instance.query, pair.embedder(query_modality), pair.space)
    candidates = np.stack([
        joint_embedding(c, pair.embedder(candidate_modality), pair.space) for c in instance.candidates
    ])
    return predict_index(query, candidates)


@dataclass
class MatchingResult:
    """Outcome of a 1:n matching evaluation."""

    n: int
    accuracy: float
    num_instances: int
    accuracy_by_gender: Dict[str, float] = field(default_factory=dict)
    confidence_T: Optional[float] = None
    num_identities: int = 0

    @property
    def metric(self) -> float:
        return self.accuracy


class _MatchingSampler:
    """Draws matching instances as identity/row indices over an embedded dataset."""

    def __init__(
        self,
        dataset: VoiceFaceDataset,
        embedded: EmbeddedDataset,
        space: MetricSpaceConfig,
        direction: str,
        m_query: int,
        m_candidate: int,
    ):
        if direction not in DIRECTIONS:
            raise InvalidArgs(f"Unknown direction: {direction}")
        self.dataset = dataset
        self.space = space
        self.query_modality, self.candidate_modality = DIRECTIONS[direction]
        self.query_pool = embedded.of(self.query_modality)
        self.candidate_pool = embedded.of(self.candidate_modality)
        self.m_query = m_query
        self.m_candidate = m_candidate

    def usable(self, indices: Sequence[int]) -> List[int]:
        return [
            i for i in indices
            if self.query_pool[i].shape[0] > 0 and self.candidate_pool[i].shape[0] > 0
        ]

    def query_embedding(self, rng: np.random.Generator, identity: int) -> np.ndarray:
        pool = self.query_pool[identity]
        return _joint(pool[_draw_rows(rng, pool.shape[0], self.m_query)], self.space)

    def candidate_embedding(self, rng: np.random.Generator, identity: int) -> np.ndarray:
        pool = self.candidate_pool[identity]
        return _joint(pool[_draw_rows(rng, pool.shape[0], self.m_candidate)], self.space)

    def is_correct(self, rng: np.random.Generator, identities: np.ndarray) -> bool:
        """identities: candidate identity indices; a random one of them is the query identity."""
        true_index = int(rng.integers(len(identities)))
        query = self.query_embedding(rng, int(identities[true_index]))
        candidates = np.stack([self.candidate_embedding(rng, int(i)) for i in identities])
        return predict_index(query, candidates) == true_index


def _balanced_identities(
    rng: np.random.Generator, by_gender: Dict[str, List[int]], instance: int, n: int
) -> np.ndarray:
    """n identities out of a 3:1 gender batch of four; the majority gender alternates."""
    majority_gender = GENDERS[instance % 2]
    minority_gender = GENDERS[1 - instance % 2]
    batch = np.concatenate([
        rng.choice(by_gender[majority_gender], size=3, replace=False),
        rng.choice(by_gender[minority_gender], size=1, replace=False),
    ])
    return batch[rng.choice(4, size=n, replace=False)]


def _run_matching(
    sampler: _MatchingSampler,
    pool: List[int],
    n: int,
    num_instances: int,
    rng: np.random.Generator,
    by_gender: Optional[Dict[str, List[int]]] = None,
) -> float:
    correct = 0
    for instance in range(num_instances):
        if by_gender is not None:
            identities = _balanced_identities(rng, by_gender, instance, n)
        else:
            identities = rng.choice(pool, size=n, replace=False)
        correct += sampler.is_correct(rng, identities)
    return correct / num_instances if num_instances else 0.0


def _matching(
    dataset: VoiceFaceDataset,
    pair: ModalityPair,
    n: int,
    num_instances: int,
    seed: int,
    stratify_gender: bool,
    balance_gender: bool,
    direction: str,
    m_query: int,
    m_candidate: int,
    embedded: Optional[EmbeddedDataset] = None,
) -> MatchingResult:
    if n < 2:
        raise InvalidArgs("1:n matching needs n >= 2")
    embedded = embedded or embed_dataset(dataset, pair)
    sampler = _MatchingSampler(dataset, embedded, pair.space, direction, m_query, m_candidate)
    pool = sampler.usable(range(len(dataset)))
    if len(pool) < n:
        raise InsufficientData(f"1:{n} matching needs >= {n} identities with both modalities, found {len(pool)}")

    by_gender = {g: [i for i in pool if dataset[i].gender == g] for g in GENDERS}
    balanced = None
    if balance_gender:
        if n > 4:
            raise InvalidArgs("gender-balanced instances come from batches of four identities; n must be <= 4")
        if len(by_gender["male"]) < 3 or len(by_gender["female"]) < 3:
            raise InsufficientData("gender-balanced matching needs >= 3 identities of each gender")
        balanced = by_gender

    accuracy = _run_matching(sampler, pool, n, num_instances, np.random.default_rng(seed), balanced)
    result = MatchingResult(n=n, accuracy=accuracy, num_instances=num_instances, num_identities=len(pool))

    if stratify_gender:
        for offset, gender in enumerate(GENDERS, start=1):
            members = by_gender[gender]
            if len(members) < n:
                logger.warning(f"Skipping {gender}-only matching: {len(members)} identities < {n}")
                continue
            rng = np.random.default_rng([seed, offset])
            result.accuracy_by_gender[gender] = _run_matching(sampler, members, n, num_instances, rng)

    if n == 2 and num_instances >= 1:
        result.confidence_T = significant(confidence_T(TestDesign.random_tuples(len(pool), num_instances)))
    return result


def evaluate_matching(
    dataset: VoiceFaceDataset,
    pair: ModalityPair,
    n: int = 2,
    num_instances: int = 10000,
    seed: int = 0,
    stratify_gender: bool = False,
    balance_gender: bool = False,
    direction: str = "voice_to_face",
) -> MatchingResult:
    """
    1:n matching accuracy over sampled instances.

    Args:
        dataset: Test identities
        pair: Embedders (read only)
        n: Candidates per instance
        num_instances: Instances to draw
        seed: Random seed
        stratify_gender: Also report accuracy with same-gender candidates, per gender
        balance_gender: Draw candidates from 3:1 gender batches of four identities
        direction: "voice_to_face" or "face_to_voice"

    Returns:
        MatchingResult (with confidence T for n = 2)
    """
    return _matching(dataset, pair, n, num_instances, seed, stratify_gender, balance_gender, direction, 1, 1)


def evaluate_matching_batches(
    dataset: VoiceFaceDataset,
    pair: ModalityPair,
    b: int = 4,
    q: int = 4,
    r: int = 8,
    steps: int = 1000,
    seed: int = 0,
    gender_balance: str = "three_to_one",
    direction: str = "voice_to_face",
) -> MatchingResult:
    """
    1:2 matching over every triplet of ``steps`` identity batches.

    A triplet counts as correct when the query is strictly more similar to
    the positive candidate than to the negative one.

    Args:
        dataset: Test identities
        pair: Embedders (read only)
        b, q, r: Identities per batch, queries and candidates per identity
        steps: Batches to draw
        seed: Random seed
        gender_balance: "three_to_one" or "off"
        direction: "voice_to_face" or "face_to_voice"

    Returns:
        MatchingResult with n = 2 and confidence T of the batch design
    """
    if direction not in DIRECTIONS:
        raise InvalidArgs(f"Unknown direction: {direction}")
    if steps < 1:
        raise InvalidArgs("identity-batch matching needs steps >= 1")
    query_modality, candidate_modality = DIRECTIONS[direction]
    sampler = IdentitySampler(
        dataset,
        SamplerConfig(b=b, q=q, r=r, gender_balance=gender_balance, seed=seed),
        anchor_modality=query_modality,
        candidate_modality=candidate_modality,
    )
    query_params = pair.embedder(query_modality)
    candidate_params = pair.embedder(candidate_modality)

    correct = total = 0
    for _ in range(steps):
        batch = sampler.sample_batch()
        queries = embed_batch(query_params, batch.anchor_features, pair.space)
        candidates = embed_batch(candidate_params, batch.candidate_features, pair.space)
        similarity = queries @ candidates.T
        positive = similarity[batch.anchor_index, batch.positive_index]
        negative = similarity[batch.anchor_index, batch.negative_index]
        correct += int(np.count_nonzero(positive > negative))
        total += len(batch)

    design = TestDesign.identity_batches(sampler.num_identities, b, q, r, steps)
    logger.debug(f"Identity-batch matching: {correct}/{total} triplets correct")
    return MatchingResult(
        n=2,
        accuracy=correct / total,
        num_instances=total,
        confidence_T=significant(confidence_T(design)),
        num_identities=sampler.num_identities,
    )


# ---------------------------------------------------------------------------
# Retrieval and mAP
# ---------------------------------------------------------------------------


@dataclass
class RetrievalGallery:
    """
    Face gallery and voice queries. Each item is a row matrix; several rows
    form a joint embedding.
    """

    face_items: List[np.ndarray]
    face_ids: List[str]
    query_items: List[np.ndarray]
    query_ids: List[str]

    @property
    def size(self) -> int:
        return len(self.face_items)

    def gallery_embeddings(self, pair: ModalityPair) -> np.ndarray:
        return np.stack([joint_embedding(item, pair.face, pair.space) for item in self.face_items])

    def query_embeddings(self, pair: ModalityPair) -> np.ndarray:
        return np.stack([joint_embedding(item, pair.voice, pair.space) for item in self.query_items])


def build_retrieval_gallery(
    dataset: VoiceFaceDataset,
    num_identities: int = 100,
    faces_per_identity: int = 5,
    queries_per_identity: int = 40,
    seed: int = 0,
    m_f: int = 1,
    m_v: int = 1,
) -> RetrievalGallery:
    """
    Build the retrieval layout: ``faces_per_identity // m_f`` gallery items and
    ``queries_per_identity`` queries per selected identity.
    """
    if m_f < 1 or m_v < 1:
        raise InvalidArgs("m_f and m_v must be >= 1")
    if m_f > faces_per_identity:
        raise InvalidArgs(f"m_f={m_f} exceeds faces_per_identity={faces_per_identity}")
    usable = [i for i, r in enumerate(dataset.records) if r.num_voices > 0 and r.num_faces > 0]
    if len(usable) < num_identities:
        raise InsufficientData(f"retrieval needs {num_identities} identities, found {len(usable)}")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(usable, size=num_identities, replace=False)
    items_per_identity = faces_per_identity // m_f
    gallery = RetrievalGallery([], [], [], [])
    for idx in chosen:
        record: IdentityRecord = dataset[int(idx)]
        if record.num_faces < faces_per_identity:
            logger.warning(f"Identity {record.id} has {record.num_faces} face(s) < {faces_per_identity}; sampling with replacement")
        rows = _draw_rows(rng, record.num_faces, faces_per_identity)
        for item in range(items_per_identity):
            gallery.face_items.append(record.faces[rows[item * m_f:(item + 1) * m_f]])
            gallery.face_ids.append(record.id)
        for _ in range(queries_per_identity):
            gallery.query_items.append(record.voices[_draw_rows(rng, record.num_voices, m_v)])
            gallery.query_ids.append(record.id)
    return gallery


def retrieve(query_voice: np.ndarray, gallery: RetrievalGallery, pair: ModalityPair) -> np.ndarray:
    """
    Rank gallery items for one voice query.

    Returns:
        Gallery indices by descending similarity, ties in ascending index order
    """
    if gallery.size == 0:
        raise InsufficientData("retrieval gallery is empty")
    query = joint_embedding(query_voice, pair.voice, pair.space)
    return rank_by_similarity(query, gallery.gallery_embeddings(pair))


def average_precision(ranked_relevance: np.ndarray) -> float:
    """Mean of precision@k over the ranks k holding relevant items."""
    ranked_relevance = np.asarray(ranked_relevance, dtype=bool)
    total = int(ranked_relevance.sum())
    if total == 0:
        raise NoRelevantItems("query has no relevant items")
    hits = np.cumsum(ranked_relevance)
    ranks = np.arange(1, ranked_relevance.size + 1)
    return float(np.sum((hits / ranks)[ranked_relevance]) / total)


def _map_from_matrix(relevance: np.ndarray) -> float:
    """mAP for a (queries, ranks) boolean matrix of ranked relevance."""
    totals = relevance.sum(axis=1)
    if np.any(totals == 0):
        raise NoRelevantItems("every query needs at least one relevant item")
    hits = np.cumsum(relevance, axis=1)
    precision = hits / np.arange(1, relevance.shape[1] + 1)
    ap = np.sum(precision * relevance, axis=1) / totals
    return float(np.mean(ap))


def mean_average_precision(rankings: Sequence[Sequence[int]], relevant: Sequence[Collection[int]]) -> float:
    """
    Mean average precision over queries.

    Args:
        rankings: Ranked gallery indices per query
        relevant: Relevant gallery indices per query

    Returns:
        mAP in [0, 1]
    """
    if len(rankings) != len(relevant):
        raise InvalidArgs("rankings and relevance labels differ in length")
    if not rankings:
        raise NoRelevantItems("no queries to score")
    scores = []
    for ranking, labels in zip(rankings, relevant):
        labels = set(int(i) for i in labels)
        scores.append(average_precision(np.array([int(i) in labels for i in ranking], dtype=bool)))
    return float(np.mean(scores))


def random_ranking_map(
    num_identities: int = 100,
    items_per_identity: int = 5,
    queries_per_identity: int = 40,
    seeds: Sequence[int] = tuple(range(50)),
) -> Tuple[float, float]:
    """
    Monte-Carlo mAP of uniformly random rankings for a gallery layout.

    Returns:
        (mean over seeds, standard deviation over seeds)
    """
    gallery_ids = np.repeat(np.arange(num_identities), items_per_identity)
    query_ids = np.repeat(np.arange(num_identities), queries_per_identity)
    values = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        ranking = np.argsort(rng.random((query_ids.size, gallery_ids.size)), axis=1)
        values.append(_map_from_matrix(gallery_ids[ranking] == query_ids[:, None]))
    return float(np.mean(values)), float(np.std(values))


@dataclass
class RetrievalResult:
    """Outcome of a retrieval evaluation."""

    map_score: float
    chance_map: Optional[float]
    num_queries: int
    gallery_size: int

    @property
    def metric(self) -> float:
        return self.map_score


def evaluate_retrieval(
    dataset: VoiceFaceDataset,
    pair: ModalityPair,
    num_identities: int = 100,
    faces_per_identity: int = 5,
    queries_per_identity: int = 40,
    seed: int = 0,
    m_f: int = 1,
    m_v: int = 1,
    chance_seeds: int = 50,
) -> RetrievalResult:
    """Voice-to-face retrieval mAP plus the random-ranking baseline for the same layout."""
    gallery = build_retrieval_gallery(
        dataset, num_identities, faces_per_identity, queries_per_identity, seed, m_f, m_v
    )
    similarities = gallery.query_embeddings(pair) @ gallery.gallery_embeddings(pair).T
    rankings = np.argsort(-similarities, axis=1, kind="stable")
    face_ids = np.array(gallery.face_ids)
    query_ids = np.array(gallery.query_ids)
    map_score = _map_from_matrix(face_ids[rankings] == query_ids[:, None])
    chance = None
    if chance_seeds > 0:
        chance, _ = random_ranking_map(
            num_identities, faces_per_identity // m_f, queries_per_identity, tuple(range(chance_seeds))
        )
    return RetrievalResult(map_score, chance, len(query_ids), gallery.size)


# ---------------------------------------------------------------------------
# Joint evaluation, individual test, splits
# ---------------------------------------------------------------------------


def evaluate_joint(
    dataset: VoiceFaceDataset,
    pair: ModalityPair,
    m_f: int,
    m_v: int,
    task: str = "match",
    n: int = 2,
    num_instances: int = 10000,
    seed: int = 0,
    **retrieval_kwargs: Any,
):
    """
    Matching or retrieval with identities represented by joint embeddings.

    With ``m_f = m_v = 1`` the result equals the single-sample protocol under
    the same seed.

    Returns:
        MatchingResult or RetrievalResult; ``.metric`` holds accuracy or mAP
    """
    if m_f < 1 or m_v < 1:
        raise InvalidArgs("m_f and m_v must be >= 1")
    if task == "match":
        return _matching(dataset, pair, n, num_instances, seed, False, False, "voice_to_face", m_v, m_f)
    if task == "retrieve":
        return evaluate_retrieval(dataset, pair, seed=seed, m_f=m_f, m_v=m_v, **retrieval_kwargs)
    raise InvalidArgs(f"Unknown joint task: {task}")


def _individual(
    dataset: VoiceFaceDataset,
    embedded: EmbeddedDataset,
    target: int,
    repeats: int,
    rng: np.random.Generator,
) -> float:
    voices, faces = embedded.voices, embedded.faces
    correct = total = 0
    for other in range(len(dataset)):
        if other == target or faces[other].shape[0] == 0:
            continue
        for _ in range(repeats):
            query = voices[target][_draw_rows(rng, voices[target].shape[0], 1)[0]]
            own = faces[target][_draw_rows(rng, faces[target].shape[0], 1)[0]]
            foreign = faces[other][_draw_rows(rng, faces[other].shape[0], 1)[0]]
            true_index = int(rng.integers(2))
            candidates = np.stack([own, foreign] if true_index == 0 else [foreign, own])
            correct += predict_index(query, candidates) == true_index
            total += 1
    return correct / total if total else 0.0


def individual_test(
    dataset: VoiceFaceDataset, pair: ModalityPair, target_id: str, repeats: int = 10, seed: int = 0
) -> float:
    """
    1:2 accuracy of one target identity against every other identity.

    Args:
        dataset: Test identities (>= 2)
        pair: Embedders
        target_id: Identity whose voice is the query
        repeats: Instances per (target, other) pairing
        seed: Random seed

    Returns:
        Mean accuracy over all pairings
    """
    dataset.require(2)
    target = dataset.index_of(target_id)
    embedded = embed_dataset(dataset, pair)
    rng = np.random.default_rng([seed, target])
    return _individual(dataset, embedded, target, repeats, rng)


def individual_test_all(
    dataset: VoiceFaceDataset, pair: ModalityPair, repeats: int = 10, seed: int = 0
) -> Dict[str, float]:
    """Individual accuracy for every identity (same per-target seeds as ``individual_test``)."""
    dataset.require(2)
    embedded = embed_dataset(dataset, pair)
    return {
        record.id: _individual(dataset, embedded, i, repeats, np.random.default_rng([seed, i]))
        for i, record in enumerate(dataset.records)
    }


def low_accuracy_identities(per_identity: Dict[str, float], threshold: float = 0.6) -> List[str]:
    """Identities whose individual accuracy falls below ``threshold``, worst first."""
    below = [(acc, identity) for identity, acc in per_identity.items() if acc < threshold]
    return [identity for _, identity in sorted(below)]


def split_dataset(
    dataset: VoiceFaceDataset, mode: str = "unseen_unheard", fraction: float = 0.8, seed: int = 0
) -> Tuple[VoiceFaceDataset, VoiceFaceDataset]:
    """
    Split into train and test sets.

    Args:
        dataset: Full dataset
        mode: "unseen_unheard" (disjoint identities) or "seen_heard"
            (shared identities, disjoint samples)
        fraction: Share of identities (or of each identity's samples) for training
        seed: Random seed

    Returns:
        (train, test)
    """
    if mode not in SPLIT_MODES:
        raise InvalidArgs(f"Unknown split mode: {mode}")
    if not 0.0 < fraction < 1.0:
        raise InvalidArgs("fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)

    if mode == "unseen_unheard":
        if len(dataset) < 2:
            raise InsufficientData("identity split needs >= 2 identities")
        n_train = min(max(int(round(fraction * len(dataset))), 1), len(dataset) - 1)
        order = rng.permutation(len(dataset))
        train_idx = sorted(order[:n_train].tolist())
        test_idx = sorted(order[n_train:].tolist())
        return (
            VoiceFaceDataset([dataset[i] for i in train_idx]),
            VoiceFaceDataset([dataset[i] for i in test_idx]),
        )

    train_records, test_records = [], []
    for record in dataset:
        if record.num_voices < 2 or record.num_faces < 2:
            raise InsufficientData(f"seen_heard split needs >= 2 voices and faces for identity {record.id}")
        parts = {}
        for modality in ("voice", "face"):
            samples = record.samples(modality)
            k = min(max(int(round(fraction * samples.shape[0])), 1), samples.shape[0] - 1)
            order = rng.permutation(samples.shape[0])
            parts[modality] = (samples[np.sort(order[:k])], samples[np.sort(order[k:])])
        train_records.append(IdentityRecord(record.id, record.gender, record.population, parts["voice"][0], parts["face"][0]))
        test_records.append(IdentityRecord(record.id, record.gender, record.population, parts["voice"][1], parts["face"][1]))
    return VoiceFaceDataset(train_records), VoiceFaceDataset(test_records)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class EvaluationReport:
    """Metrics of one evaluation run."""

    task: str
    accuracy_1n: Dict[int, float] = field(default_factory=dict)
    map_score: Optional[float] = None
    chance_map: Optional[float] = None
    accuracy_by_gender: Dict[str, float] = field(default_factory=dict)
    per_identity_accuracy: Dict[str, float] = field(default_factory=dict)
    confidence_T: Optional[float] = None
    parameters: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> tuple[bool, List[str]]:
        errors = []
        values = list(self.accuracy_1n.values()) + list(self.accuracy_by_gender.values())
        values += list(self.per_identity_accuracy.values())
        if any(not 0.0 <= v <= 1.0 for v in values):
            errors.append("accuracies must lie in [0, 1]")
        for name, value in (("mAP", self.map_score), ("chance mAP", self.chance_map)):
            if value is not None and not 0.0 <= value <= 1.0:
                errors.append(f"{name} must lie in [0, 1]")
        return len(errors) == 0, errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "accuracy_1n": {str(n): acc for n, acc in sorted(self.accuracy_1n.items())},
            "map_score": self.map_score,
            "chance_map": self.chance_map,
            "accuracy_by_gender": dict(self.accuracy_by_gender),
            "per_identity_accuracy": dict(self.per_identity_accuracy),
            "confidence_T": self.confidence_T,
            "parameters": dict(self.parameters),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvaluationReport":
        return cls(
            task=data["task"],
            accuracy_1n={int(n): acc for n, acc in data.get("accuracy_1n", {}).items()},
            map_score=data.get("map_score"),
            chance_map=data.get("chance_map"),
            accuracy_by_gender=dict(data.get("accuracy_by_gender", {})),
            per_identity_accuracy=dict(data.get("per_identity_accuracy", {})),
            confidence_T=data.get("confidence_T"),
            parameters=dict(data.get("parameters", {})),
        )

    def to_rows(self) -> List[Tuple[str, str, Any]]:
        """Flat (metric, key, value) rows for CSV output."""
        rows = [("accuracy_1n", str(n), acc) for n, acc in sorted(self.accuracy_1n.items())]
        if self.map_score is not None:
            rows.append(("map", "", self.map_score))
        if self.chance_map is not None:
            rows.append(("chance_map", "", self.chance_map))
        rows += [("accuracy_by_gender", g, acc) for g, acc in self.accuracy_by_gender.items()]
        rows += [("per_identity_accuracy", i, acc) for i, acc in self.per_identity_accuracy.items()]
        if self.confidence_T is not None:
            rows.append(("confidence_T", "", self.confidence_T))
        return rows
