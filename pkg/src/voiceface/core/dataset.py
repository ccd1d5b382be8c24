"""
In-memory voice/face dataset organised by identity.
"""

from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from voiceface.core.errors import DimensionMismatch, InsufficientData, UnknownIdentity

GENDERS = ("male", "female")


@dataclass(frozen=True, eq=False)
class IdentityRecord:
    """All samples of one identity. ``voices`` and ``faces`` hold one sample per row."""

    id: str
    gender: str
    population: str
    voices: np.ndarray
    faces: np.ndarray

    @property
    def num_voices(self) -> int:
        return self.voices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def samples(self, modality: str) -> np.ndarray:
        if modality == "voice":
            return self.voices
        if modality == "face":
            return self.faces
        raise ValueError(f"Unknown modality: {modality}")


class VoiceFaceDataset:
    """Ordered collection of identity records."""

    def __init__(self, records: Sequence[IdentityRecord]):
        self.records: List[IdentityRecord] = list(records)
        self._index: Dict[str, int] = {}
        for i, record in enumerate(self.records):
            if record.id in self._index:
                raise ValueError(f"Duplicate identity: {record.id}")
            if record.gender not in GENDERS:
                raise ValueError(f"Identity {record.id}: unknown gender {record.gender}")
            self._index[record.id] = i
        self._check_dims()

    def _check_dims(self):
        voice_dims = {r.voices.shape[1] for r in self.records if r.num_voices}
        face_dims = {r.faces.shape[1] for r in self.records if r.num_faces}
        if len(voice_dims) > 1 or len(face_dims) > 1:
            raise DimensionMismatch(f"inconsistent feature dims: voice {voice_dims}, face {face_dims}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[IdentityRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> IdentityRecord:
        return self.records[i]

    @property
    def ids(self) -> List[str]:
        return [r.id for r in self.records]

    @property
    def voice_dim(self) -> int:
        return next(r.voices.shape[1] for r in self.records if r.num_voices)

    @property
    def face_dim(self) -> int:
        return next(r.faces.shape[1] for r in self.records if r.num_faces)

    def get(self, identity: str) -> IdentityRecord:
        if identity not in self._index:
            raise UnknownIdentity(f"Unknown identity: {identity}")
        return self.records[self._index[identity]]

    def index_of(self, identity: str) -> int:
        if identity not in self._index:
            raise UnknownIdentity(f"Unknown identity: {identity}")
        return self._index[identity]

    def indices_by_gender(self) -> Dict[str, List[int]]:
        groups = {g: [] for g in GENDERS}
        for i, record in enumerate(self.records):
            groups[record.gender].append(i)
        return groups

    def subset(self, identities: Sequence[str]) -> "VoiceFaceDataset":
        return VoiceFaceDataset([self.get(i) for i in identities])

    def filter_population(self, population: str) -> "VoiceFaceDataset":
        return VoiceFaceDataset([r for r in self.records if r.population == population])

    def populations(self) -> List[str]:
        return sorted({r.population for r in self.records})

    def replace_record(self, identity: str, voices: Optional[np.ndarray] = None, faces: Optional[np.ndarray] = None) -> "VoiceFaceDataset":
        """Copy of the dataset with one identity's samples swapped out."""
        records = list(self.records)
        i = self.index_of(identity)
        changes = {}
        if voices is not None:
            changes["voices"] = np.asarray(voices, dtype=np.float64)
        if faces is not None:
            changes["faces"] = np.asarray(faces, dtype=np.float64)
        records[i] = replace(records[i], **changes)
        return VoiceFaceDataset(records)

    def sample_counts(self) -> Dict[str, int]:
        return {
            "identities": len(self.records),
            "voices": sum(r.num_voices for r in self.records),
            "faces": sum(r.num_faces for r in self.records),
        }

    def require(self, min_identities: int, min_voices: int = 1, min_faces: int = 1):
        """Raise InsufficientData unless enough usable identities exist."""
        usable = [r for r in self.records if r.num_voices >= min_voices and r.num_faces >= min_faces]
        if len(usable) < min_identities:
            raise InsufficientData(
                f"need {min_identities} identities with >= {min_voices} voice(s) and >= {min_faces} face(s), "
                f"found {len(usable)}"
            )
