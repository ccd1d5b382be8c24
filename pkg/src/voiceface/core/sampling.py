"""
Identity-based triplet batch construction and random tuple mining.

Identity-based ("online") sampling first draws ``b`` identities, then ``q``
anchors and ``r`` candidates per identity, and forms every
(anchor, positive, negative) combination in the batch: ``b(b-1)qr^2``
triplets. Random tuple ("offline") mining draws each triplet independently.
"""

from dataclasses import dataclass
from typing import Iterator, List, Set, Tuple
import logging

import numpy as np

from voiceface.core.dataset import GENDERS, VoiceFaceDataset
from voiceface.core.errors import InsufficientData, InvalidConfig

GENDER_BALANCE_MODES = ("off", "three_to_one")


@dataclass(frozen=True)
class Triplet:
    """One anchor/positive/negative triple of feature vectors."""

    anchor_voice: np.ndarray
    positive_face: np.ndarray
    negative_face: np.ndarray
    anchor_id: str
    negative_id: str


@dataclass
class TripletBatch:
    """
    Triplets stored as indices into shared anchor and candidate matrices.

    Each anchor and candidate row is embedded once per step no matter how
    many triplets reference it.
    """

    anchor_features: np.ndarray
    candidate_features: np.ndarray
    anchor_ids: List[str]
    candidate_ids: List[str]
    anchor_index: np.ndarray
    positive_index: np.ndarray
    negative_index: np.ndarray
    anchor_modality: str = "voice"
    candidate_modality: str = "face"

    def __len__(self) -> int:
        return int(self.anchor_index.shape[0])

    @property
    def triplet_anchor_ids(self) -> List[str]:
        return [self.anchor_ids[i] for i in self.anchor_index]

    @property
    def triplet_negative_ids(self) -> List[str]:
        return [self.candidate_ids[i] for i in self.negative_index]

    def identities(self) -> List[str]:
        """Identities in the batch, in first-seen order."""
        seen = dict.fromkeys(self.anchor_ids)
        return list(seen)

    def iter_triplets(self) -> Iterator[Triplet]:
        for a, p, n in zip(self.anchor_index, self.positive_index, self.negative_index):
            yield Triplet(
                anchor_voice=self.anchor_features[a],
                positive_face=self.candidate_features[p],
                negative_face=self.candidate_features[n],
                anchor_id=self.anchor_ids[a],
                negative_id=self.candidate_ids[n],
            )

    @classmethod
    def from_triplets(cls, triplets: List[Triplet]) -> "TripletBatch":
        """Pack independent triplets; every triplet gets its own rows."""
        if not triplets:
            raise InsufficientData("cannot build a batch from zero triplets")
        count = len(triplets)
        anchors = np.stack([t.anchor_voice for t in triplets]).astype(np.float64)
        candidates = np.concatenate([
            np.stack([t.positive_face for t in triplets]),
            np.stack([t.negative_face for t in triplets]),
        ]).astype(np.float64)
        candidate_ids = [t.anchor_id for t in triplets] + [t.negative_id for t in triplets]
        return cls(
            anchor_features=anchors,
            candidate_features=candidates,
            anchor_ids=[t.anchor_id for t in triplets],
            candidate_ids=candidate_ids,
            anchor_index=np.arange(count),
            positive_index=np.arange(count),
            negative_index=np.arange(count, 2 * count),
        )


@dataclass
class SamplerConfig:
    """Identity batch layout: ``b`` identities, ``q`` anchors and ``r`` candidates each."""

    b: int = 4
    q: int = 4
    r: int = 8
    gender_balance: str = "off"
    seed: int = 0

    def validate(self) -> tuple[bool, List[str]]:
        errors = []
        if self.b < 2:
            errors.append("b (identities per batch) must be >= 2")
        if self.q < 1 or self.r < 1:
            errors.append("q and r must be >= 1")
        if self.gender_balance not in GENDER_BALANCE_MODES:
            errors.append(f"gender_balance must be one of {GENDER_BALANCE_MODES}")
        elif self.gender_balance == "three_to_one" and self.b % 4 != 0:
            errors.append("three_to_one gender balance needs b divisible by 4")
        if self.seed < 0:
            errors.append("seed must be >= 0")
        return len(errors) == 0, errors

    def triplets_per_batch(self) -> int:
        return self.b * (self.b - 1) * self.q * self.r ** 2


class IdentitySampler:
    """Seeded identity-batch sampler. One instance per training or evaluation loop."""

    def __init__(
        self,
        dataset: VoiceFaceDataset,
        cfg: SamplerConfig,
        anchor_modality: str = "voice",
        candidate_modality: str = "face",
    ):
        is_valid, errors = cfg.validate()
        if not is_valid:
            raise InvalidConfig(f"Invalid sampler configuration: {', '.join(errors)}")
        self.dataset = dataset
        self.cfg = cfg
        self.anchor_modality = anchor_modality
        self.candidate_modality = candidate_modality
        self.logger = logging.getLogger(__name__)
        self.rng = np.random.default_rng(cfg.seed)
        self.batches_drawn = 0
        self._warned: Set[Tuple[str, str]] = set()
        self._usable = [
            i for i, r in enumerate(dataset.records)
            if r.samples(anchor_modality).shape[0] > 0 and r.samples(candidate_modality).shape[0] > 0
        ]
        if len(self._usable) < cfg.b:
            raise InsufficientData(f"need >= {cfg.b} identities with both modalities, found {len(self._usable)}")
        self._gender_offset = 0
        if cfg.gender_balance == "three_to_one":
            by_gender = {g: [i for i in self._usable if dataset[i].gender == g] for g in GENDERS}
            majority = 3 * cfg.b // 4
            for gender, members in by_gender.items():
                if len(members) < majority:
                    raise InsufficientData(
                        f"three_to_one balance needs >= {majority} {gender} identities, found {len(members)}"
                    )
            self._by_gender = by_gender
            self._gender_offset = int(self.rng.integers(2))

    @property
    def num_identities(self) -> int:
        """Identities that have samples in both sampled modalities."""
        return len(self._usable)

    def _select_identities(self) -> np.ndarray:
        cfg = self.cfg
        if cfg.gender_balance == "off":
            return self.rng.choice(self._usable, size=cfg.b, replace=False)
        majority_gender = GENDERS[(self._gender_offset + self.batches_drawn) % 2]
        minority_gender = GENDERS[1 - GENDERS.index(majority_gender)]
        majority = 3 * cfg.b // 4
        chosen_major = self.rng.choice(self._by_gender[majority_gender], size=majority, replace=False)
        chosen_minor = self.rng.choice(self._by_gender[minority_gender], size=cfg.b - majority, replace=False)
        return self.rng.permutation(np.concatenate([chosen_major, chosen_minor]))

    def _draw_rows(self, identity: str, modality: str, pool_size: int, k: int) -> np.ndarray:
        if pool_size >= k:
            return self.rng.choice(pool_size, size=k, replace=False)
        if (identity, modality) not in self._warned:
            self._warned.add((identity, modality))
            self.logger.warning(
                f"Identity {identity} has {pool_size} {modality} sample(s) < {k}; sampling with replacement"
            )
        return self.rng.choice(pool_size, size=k, replace=True)

    def sample_batch(self) -> TripletBatch:
        """Draw the next identity batch and enumerate all of its triplets."""
        cfg = self.cfg
        chosen = self._select_identities()
        anchor_rows, candidate_rows = [], []
        anchor_ids, candidate_ids = [], []
        for idx in chosen:
            record = self.dataset[int(idx)]
            anchors = record.samples(self.anchor_modality)
            candidates = record.samples(self.candidate_modality)
            anchor_rows.append(anchors[self._draw_rows(record.id, self.anchor_modality, anchors.shape[0], cfg.q)])
            candidate_rows.append(
                candidates[self._draw_rows(record.id, self.candidate_modality, candidates.shape[0], cfg.r)]
            )
            anchor_ids.extend([record.id] * cfg.q)
            candidate_ids.extend([record.id] * cfg.r)
        self.batches_drawn += 1

        anchor_owner = np.repeat(np.arange(cfg.b), cfg.q)
        candidate_owner = np.repeat(np.arange(cfg.b), cfg.r)
        parts = []
        for slot in range(cfg.b):
            grid = np.meshgrid(
                np.flatnonzero(anchor_owner == slot),
                np.flatnonzero(candidate_owner == slot),
                np.flatnonzero(candidate_owner != slot),
                indexing="ij",
            )
            parts.append(np.stack([g.ravel() for g in grid]))
        index = np.concatenate(parts, axis=1)
        return TripletBatch(
            anchor_features=np.concatenate(anchor_rows).astype(np.float64),
            candidate_features=np.concatenate(candidate_rows).astype(np.float64),
            anchor_ids=anchor_ids,
            candidate_ids=candidate_ids,
            anchor_index=index[0],
            positive_index=index[1],
            negative_index=index[2],
            anchor_modality=self.anchor_modality,
            candidate_modality=self.candidate_modality,
        )


def sample_batch(dataset: VoiceFaceDataset, cfg: SamplerConfig) -> TripletBatch:
    """Draw a single identity batch with a fresh sampler seeded from ``cfg.seed``."""
    return IdentitySampler(dataset, cfg).sample_batch()


def sample_identity_pairs(num_identities: int, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw ``n`` ordered identity pairs (A, B), A != B, uniformly.

    Each ordered pair has probability ``1 / (N (N - 1))``.
    """
    if num_identities < 2:
        raise InsufficientData("random tuple mining needs >= 2 identities")
    anchors = rng.integers(num_identities, size=n)
    others = rng.integers(num_identities - 1, size=n)
    negatives = others + (others >= anchors)
    return anchors, negatives


def mine_random_tuples(
    dataset: VoiceFaceDataset, n: int, seed: int, chunk_size: int = 4096
) -> Iterator[Triplet]:
    """
    Stream ``n`` independent triplets (offline mining).

    Args:
        dataset: Source dataset
        n: Number of triplets
        seed: Random seed
        chunk_size: Draws are vectorised per chunk; part of the reproducibility key

    Returns:
        Iterator of Triplet
    """
    dataset.require(2)
    records = [r for r in dataset.records if r.num_voices > 0 and r.num_faces > 0]
    if len(records) < 2:
        raise InsufficientData("random tuple mining needs >= 2 identities with both modalities")

    def _stream() -> Iterator[Triplet]:
        rng = np.random.default_rng(seed)
        remaining = n
        while remaining > 0:
            count = min(chunk_size, remaining)
            anchors, negatives = sample_identity_pairs(len(records), count, rng)
            # one uniform draw per role, mapped onto each identity's pool size
            draws = rng.random((count, 3))
            for k in range(count):
                a, b = records[anchors[k]], records[negatives[k]]
                yield Triplet(
                    anchor_voice=a.voices[int(draws[k, 0] * a.num_voices)],
                    positive_face=a.faces[int(draws[k, 1] * a.num_faces)],
                    negative_face=b.faces[int(draws[k, 2] * b.num_faces)],
                    anchor_id=a.id,
                    negative_id=b.id,
                )
            remaining -= count

    return _stream()
