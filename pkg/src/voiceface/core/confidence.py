"""
Test-confidence coefficient for sampled matching tests.

For ``N`` test identities and ``n`` test triplets, a fixed ordered identity
pair is expected to be covered ``K = n / (N (N - 1))`` times, and the
confidence coefficient is ``T = N ln K``. Identity-batch tests of ``steps``
batches of ``b`` identities give ``n = steps * b (b - 1) q r^2`` and the same
expression for K.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional
import math

import numpy as np

from voiceface.core.errors import InvalidArgs
from voiceface.core.sampling import sample_identity_pairs

REGIMES = ("random_tuples", "identity_batches")


@dataclass(frozen=True)
class TestDesign:
    """How many identities a matching test covers and how many triplets it draws."""

    __test__ = False

    num_identities: int
    num_triplets: int
    regime: str = "random_tuples"
    b: Optional[int] = None
    q: Optional[int] = None
    r: Optional[int] = None
    steps: Optional[int] = None

    def validate(self) -> tuple[bool, List[str]]:
        errors = []
        if self.num_identities < 2:
            errors.append("N must be >= 2")
        if self.num_triplets < 1:
            errors.append("n must be >= 1")
        if self.regime not in REGIMES:
            errors.append(f"regime must be one of {REGIMES}")
        if self.regime == "identity_batches":
            if None in (self.b, self.q, self.r, self.steps):
                errors.append("identity_batches needs b, q, r and steps")
            elif self.num_triplets != self.steps * self.triplets_per_step():
                errors.append("n must equal steps * b(b-1)qr^2")
        return len(errors) == 0, errors

    def __post_init__(self):
        is_valid, errors = self.validate()
        if not is_valid:
            raise InvalidArgs(f"Invalid test design: {', '.join(errors)}")

    def triplets_per_step(self) -> Optional[int]:
        if None in (self.b, self.q, self.r):
            return None
        return self.b * (self.b - 1) * self.q * self.r ** 2

    @classmethod
    def random_tuples(cls, num_identities: int, num_triplets: int) -> "TestDesign":
        return cls(num_identities, num_triplets)

    @classmethod
    def identity_batches(cls, num_identities: int, b: int, q: int, r: int, steps: int) -> "TestDesign":
        return cls(num_identities, steps * b * (b - 1) * q * r ** 2, "identity_batches", b, q, r, steps)


def pair_coverage_K(design: TestDesign) -> float:
    """Expected number of test triplets involving one fixed ordered identity pair."""
    n_id = design.num_identities
    return design.num_triplets / (n_id * (n_id - 1))


def confidence_T(design: TestDesign) -> float:
    """``T = N ln K``; negative when pairs are covered less than once on average."""
    return design.num_identities * math.log(pair_coverage_K(design))


def significant(value: float, digits: int = 4) -> float:
    """Round to ``digits`` significant figures."""
    if value == 0 or not math.isfinite(value):
        return value
    return float(f"{value:.{digits}g}")


def required_triplets(num_identities: int, target_T: float) -> int:
    """Smallest triplet count whose design reaches ``target_T``."""
    if num_identities < 2:
        raise InvalidArgs("N must be >= 2")
    exact = num_identities * (num_identities - 1) * math.exp(target_T / num_identities)
    return max(1, math.ceil(exact))


def steps_for_target(num_identities: int, target_T: float, b: int, q: int, r: int) -> int:
    """Identity-batch steps needed to reach ``target_T``."""
    per_step = b * (b - 1) * q * r ** 2
    return max(1, math.ceil(required_triplets(num_identities, target_T) / per_step))


def design_summary(design: TestDesign) -> Dict[str, float]:
    """Row of N, n, K, T (4 significant figures) and, for batch designs, triplets per step."""
    row = {
        "N": design.num_identities,
        "n": design.num_triplets,
        "K": significant(pair_coverage_K(design)),
        "T": significant(confidence_T(design)),
    }
    if design.regime == "identity_batches":
        row["triplets_per_step"] = design.triplets_per_step()
        row["steps"] = design.steps
    return row


def simulate_pair_coverage(num_identities: int, num_triplets: int, seed: int, pair=(0, 1)) -> int:
    """Count how often one ordered pair appears among simulated random tuples."""
    rng = np.random.default_rng(seed)
    anchors, negatives = sample_identity_pairs(num_identities, num_triplets, rng)
    return int(np.sum((anchors == pair[0]) & (negatives == pair[1])))
