"""
Voice-anchored triplet-loss training.

For a triplet <v_i, f_i, f_j> the loss term is
``max(d(e_v(v_i), e_f(f_i)) - d(e_v(v_i), e_f(f_j)) + m, 0)``; gradients are
derived analytically and flow only into embedders that are not frozen.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from voiceface.core.dataset import VoiceFaceDataset
from voiceface.core.embedder import ModalityPair, backward, forward, normalize_backward
from voiceface.core.errors import InvalidConfig
from voiceface.core.metric_space import l2_normalize_scale
from voiceface.core.optimizers import create_optimizer
from voiceface.core.sampling import IdentitySampler, SamplerConfig, TripletBatch

# Reference schedule: (until_step, learning_rate) over 70k steps; None means "after".
REFERENCE_TOTAL_STEPS = 70000
REFERENCE_SCHEDULE = ((20000, 1e-3), (40000, 1e-4), (60000, 1e-5), (None, 1e-6))

REDUCTIONS = ("sum", "mean")

GradientSet = Dict[str, List[np.ndarray]]


def default_lr_schedule(total_steps: int) -> List[Tuple[Optional[int], float]]:
    """Reference step schedule with boundaries rescaled to ``total_steps``."""
    schedule = []
    for until, lr in REFERENCE_SCHEDULE:
        if until is None:
            schedule.append((None, lr))
        else:
            schedule.append((int(round(until * total_steps / REFERENCE_TOTAL_STEPS)), lr))
    return schedule


@dataclass
class TrainingConfig:
    """Optimization settings for cross-modal training."""

    margin: float = 1.0
    optimizer: str = "adam"
    lr_schedule: Optional[List[Tuple[Optional[int], float]]] = None
    total_steps: int = 2000
    reduction: str = "sum"
    lr_multipliers: Dict[str, float] = field(default_factory=dict)
    pretrain_steps: int = 0
    log_every: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self) -> tuple[bool, List[str]]:
        errors = []
        if self.margin < 0:
            errors.append("margin must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            errors.append(f"unknown optimizer: {self.optimizer}")
        if self.total_steps < 0 or self.pretrain_steps < 0:
            errors.append("step counts must be >= 0")
        if self.reduction not in REDUCTIONS:
            errors.append(f"reduction must be one of {REDUCTIONS}")
        if self.lr_schedule is not None:
            if not self.lr_schedule:
                errors.append("lr_schedule must not be empty")
            for until, lr in self.lr_schedule:
                if lr < 0:
                    errors.append("learning rates must be >= 0")
                if until is not None and until < 0:
                    errors.append("schedule boundaries must be >= 0")
        for group, factor in self.lr_multipliers.items():
            if factor < 0:
                errors.append(f"lr multiplier for {group} must be >= 0")
        if self.seed < 0:
            errors.append("seed must be >= 0")
        return len(errors) == 0, errors

    def schedule(self) -> List[Tuple[Optional[int], float]]:
        if self.lr_schedule is None:
            return default_lr_schedule(self.total_steps)
        return [(None if until is None else int(until), float(lr)) for until, lr in self.lr_schedule]

    def learning_rate_at(self, step: int) -> float:
        """Learning rate for a zero-based step: the first entry whose boundary lies above it."""
        schedule = self.schedule()
        for until, lr in schedule:
            if until is None or step < until:
                return lr
        return schedule[-1][1]


@dataclass
class TrainingResult:
    """Trained embedders plus one (step, loss, learning_rate) row per step."""

    pair: ModalityPair
    history: List[Tuple[int, float, float]] = field(default_factory=list)
    pretrain_history: List[Tuple[int, float, float]] = field(default_factory=list)

    @property
    def losses(self) -> List[float]:
        return [loss for _, loss, _ in self.history]


def _distances(batch: TripletBatch, pair: ModalityPair):
    """Forward both embedders once and gather per-triplet distances."""
    space = pair.space
    anchor_params = pair.embedder(batch.anchor_modality)
    candidate_params = pair.embedder(batch.candidate_modality)
    z_anchor, cache_anchor = forward(anchor_params, batch.anchor_features, keep_cache=True)
    z_candidate, cache_candidate = forward(candidate_params, batch.candidate_features, keep_cache=True)
    e_anchor = l2_normalize_scale(z_anchor, space)
    e_candidate = l2_normalize_scale(z_candidate, space)

    anchors = e_anchor[batch.anchor_index]
    diff_pos = anchors - e_candidate[batch.positive_index]
    diff_neg = anchors - e_candidate[batch.negative_index]
    d_pos = np.linalg.norm(diff_pos, axis=1)
    d_neg = np.linalg.norm(diff_neg, axis=1)
    state = {
        "z_anchor": z_anchor,
        "z_candidate": z_candidate,
        "cache_anchor": cache_anchor,
        "cache_candidate": cache_candidate,
        "diff_pos": diff_pos,
        "diff_neg": diff_neg,
    }
    return d_pos, d_neg, state


def _reduce(terms: np.ndarray, reduction: str) -> float:
    if reduction == "mean":
        return float(np.mean(terms)) if terms.size else 0.0
    return float(np.sum(terms))


def triplet_loss(batch: TripletBatch, pair: ModalityPair, m: float, reduction: str = "sum") -> float:
    """
    Hinge triplet loss over a batch.

    Args:
        batch: Triplets to score
        pair: Voice and face embedders
        m: Margin
        reduction: "sum" (default) or "mean"

    Returns:
        Non-negative loss value
    """
    d_pos, d_neg, _ = _distances(batch, pair)
    return _reduce(np.maximum(d_pos - d_neg + m, 0.0), reduction)


def _loss_and_gradients(batch: TripletBatch, pair: ModalityPair, m: float, reduction: str, include_frozen: bool):
    d_pos, d_neg, state = _distances(batch, pair)
    hinge = d_pos - d_neg + m
    loss = _reduce(np.maximum(hinge, 0.0), reduction)

    # strict inequality: the breakpoint itself gets a zero subgradient
    active = (hinge > 0.0).astype(np.float64)
    if reduction == "mean" and len(batch):
        active /= len(batch)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit_pos = np.where(d_pos[:, None] > 0.0, state["diff_pos"] / d_pos[:, None], 0.0)
        unit_neg = np.where(d_neg[:, None] > 0.0, state["diff_neg"] / d_neg[:, None], 0.0)

    grad_anchor = np.zeros_like(state["z_anchor"])
    grad_candidate = np.zeros_like(state["z_candidate"])
    np.add.at(grad_anchor, batch.anchor_index, active[:, None] * (unit_pos - unit_neg))
    np.add.at(grad_candidate, batch.positive_index, -active[:, None] * unit_pos)
    np.add.at(grad_candidate, batch.negative_index, active[:, None] * unit_neg)

    gradients: GradientSet = {}
    roles = (
        (batch.anchor_modality, state["z_anchor"], state["cache_anchor"], grad_anchor),
        (batch.candidate_modality, state["z_candidate"], state["cache_candidate"], grad_candidate),
    )
    for modality, z, cache, grad_e in roles:
        params = pair.embedder(modality)
        if params.frozen and not include_frozen:
            continue
        grads = backward(params, cache, normalize_backward(z, grad_e, pair.space))
        if modality in gradients:
            gradients[modality] = [g0 + g1 for g0, g1 in zip(gradients[modality], grads)]
        else:
            gradients[modality] = grads
    return loss, gradients


def loss_gradients(batch: TripletBatch, pair: ModalityPair, m: float, reduction: str = "sum") -> GradientSet:
    """
    Exact gradient of ``triplet_loss`` for every trainable embedder.

    Returns:
        Mapping modality -> gradients aligned with ``EmbedderParams.arrays()``;
        frozen embedders have no entry
    """
    _, gradients = _loss_and_gradients(batch, pair, m, reduction, include_frozen=False)
    return gradients


def parameter_groups(pair: ModalityPair, modality: str) -> List[str]:
    """Learning-rate group of each array: ``<modality>.backbone`` or ``<modality>.fc`` (last layer)."""
    layers = pair.embedder(modality).layers
    groups = []
    for i in range(len(layers)):
        group = f"{modality}.fc" if i == len(layers) - 1 else f"{modality}.backbone"
        groups.extend([group, group])
    return groups


class Trainer:
    """Single-writer training loop over identity batches."""

    def __init__(self, training_cfg: TrainingConfig, sampler_cfg: SamplerConfig):
        is_valid, errors = training_cfg.validate()
        if not is_valid:
            raise InvalidConfig(f"Invalid training configuration: {', '.join(errors)}")
        self.training_cfg = training_cfg
        self.sampler_cfg = sampler_cfg
        self.logger = logging.getLogger(__name__)

    def stream_seed(self, stream: int) -> int:
        """Seed of one batch stream, mixed from the sampler seed, the training seed and the stream index."""
        entropy = [self.sampler_cfg.seed, self.training_cfg.seed, stream]
        return int(np.random.SeedSequence(entropy).generate_state(1)[0])

    def _new_optimizer(self):
        cfg = self.training_cfg
        if cfg.optimizer == "adam":
            return create_optimizer("adam", beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
        return create_optimizer(cfg.optimizer)

    def _apply(self, optimizer, pair: ModalityPair, gradients: GradientSet, lr: float):
        keys, params, grads, lrs = [], [], [], []
        for modality, modality_grads in gradients.items():
            arrays = pair.embedder(modality).arrays()
            groups = parameter_groups(pair, modality)
            for i, (param, grad, group) in enumerate(zip(arrays, modality_grads, groups)):
                keys.append((modality, i))
                params.append(param)
                grads.append(grad)
                lrs.append(lr * self.training_cfg.lr_multipliers.get(group, 1.0))
        optimizer.step(keys, params, grads, lrs)

    def _run(
        self,
        sampler: IdentitySampler,
        pair: ModalityPair,
        steps: int,
        include_frozen: bool,
        label: str,
    ) -> List[Tuple[int, float, float]]:
        cfg = self.training_cfg
        optimizer = self._new_optimizer()
        history = []
        for step in range(steps):
            batch = sampler.sample_batch()
            lr = cfg.learning_rate_at(step)
            loss, gradients = _loss_and_gradients(batch, pair, cfg.margin, cfg.reduction, include_frozen)
            self._apply(optimizer, pair, gradients, lr)
            history.append((step, loss, lr))
            if cfg.log_every and (step % cfg.log_every == 0 or step == steps - 1):
                self.logger.info(f"[{label}] step {step + 1}/{steps} loss={loss:.4f} lr={lr:g}")
        return history

    def pretrain_unimodal(self, dataset: VoiceFaceDataset, pair: ModalityPair, steps: int) -> List[Tuple[int, float, float]]:
        """
        Warm-start each embedder with within-modality triplets.

        Frozen flags are ignored here; they only govern cross-modal training.

        Returns:
            Combined history, voice steps first then face steps
        """
        history = []
        for offset, modality in enumerate(("voice", "face")):
            sampler_cfg = replace(self.sampler_cfg, seed=self.stream_seed(1 + offset))
            sampler = IdentitySampler(dataset, sampler_cfg, anchor_modality=modality, candidate_modality=modality)
            self.logger.info(f"Pre-training {modality} embedder for {steps} step(s)")
            history.extend(self._run(sampler, pair, steps, include_frozen=True, label=f"pretrain-{modality}"))
        return history

    def train(self, dataset: VoiceFaceDataset, pair: ModalityPair) -> TrainingResult:
        """
        Train a copy of ``pair``; the input is left untouched.

        Args:
            dataset: Training identities
            pair: Initial embedders (frozen flags decide what moves)

        Returns:
            TrainingResult with the trained pair and loss history
        """
        dataset.require(2)
        trained = pair.copy()
        result = TrainingResult(pair=trained)
        if self.training_cfg.total_steps == 0 and self.training_cfg.pretrain_steps == 0:
            return result
        if self.training_cfg.pretrain_steps > 0:
            result.pretrain_history = self.pretrain_unimodal(dataset, trained, self.training_cfg.pretrain_steps)
        sampler = IdentitySampler(dataset, replace(self.sampler_cfg, seed=self.stream_seed(0)))
        self.logger.info(
            f"Training for {self.training_cfg.total_steps} step(s), "
            f"{self.sampler_cfg.triplets_per_batch()} triplets per batch, "
            f"voice frozen={trained.voice.frozen}, face frozen={trained.face.frozen}"
        )
        result.history = self._run(sampler, trained, self.training_cfg.total_steps, include_frozen=False, label="train")
        return result


def train(
    dataset: VoiceFaceDataset,
    pair: ModalityPair,
    sampler_cfg: SamplerConfig,
    training_cfg: TrainingConfig,
) -> TrainingResult:
    """Convenience wrapper around ``Trainer(...).train``."""
    return Trainer(training_cfg, sampler_cfg).train(dataset, pair)


def batch_mean_loss(history: Sequence[Tuple[int, float, float]], first: int, last: int) -> float:
    """Mean loss over history rows ``[first, last)``."""
    rows = [loss for _, loss, _ in history[first:last]]
    return float(np.mean(rows)) if rows else float("nan")
