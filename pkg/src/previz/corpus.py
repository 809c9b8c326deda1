"""Synthetic ranking corpus and the training/evaluation harness.

There is no professional footage here: positives are enumerated proposals
that pass smoothness and framing gates, negatives are the same shots with
per-frame camera noise.  Labels for the class heads come from the generator
tags, so negatives keep the shot type of their source.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import ShotFeatures, extract_features
from .proposals import DEFAULT_ENUMERATION, EnumerationConfig, enumerate_camera_proposals
from .ranker import (Adam, RankerConfig, RankerModel, TrainSample,
                     auc_score, forward, train_step)
from .scene import AssetRegistry
from .scripts import Angle, Movement, Scale, ScriptLine, parse_script_file
from .shots import ShotProposal, perturb_negative, simulate_shot
from .story import propose_story

MOVEMENT_INDEX = {m.value: i for i, m in enumerate(Movement)}
SCALE_INDEX = {s.value: i for i, s in enumerate(Scale)}
ANGLE_INDEX = {a.value: i for i, a in enumerate(Angle)}


@dataclass(frozen=True)
class CorpusConfig:
    scene_id: str = "apartment"
    n_positive: int = 500
    n_negative: int = 500
    jerk_gate: float = 0.02
    center_gate: float = 0.15
    sigma_pos: float = 0.05
    sigma_rot: float = 0.03
    per_line_cap: int = 200
    render_size: tuple[int, int] = (320, 180)
    story_n: int = 3
    story_m: int = 3
    seed: int = 0


@dataclass
class LabeledShot:
    proposal: ShotProposal
    features: ShotFeatures
    label: int
    movement: int
    scale: int
    angle: int

    def sample(self) -> TrainSample:
        return TrainSample(view_a=self.features.view_a, view_b=self.features.view_b,
                           label=self.label, movement=self.movement,
                           scale=self.scale, angle=self.angle)


def _class_labels(tag) -> tuple[int, int, int]:
    return (MOVEMENT_INDEX.get(tag.movement, 0),
            SCALE_INDEX.get(tag.scale, 1),
            ANGLE_INDEX.get(tag.angle, 0))


def even_subsample(items: list, cap: int) -> list:
    """Deterministic, order-preserving, evenly spaced subsample."""
    if len(items) <= cap:
        return list(items)
    idx = np.floor(np.linspace(0, len(items) - 1, cap) + 0.5).astype(int)
    return [items[i] for i in sorted(set(int(i) for i in idx))]


def line_shot_pool(line: ScriptLine, registry: AssetRegistry, scene,
                   cfg: CorpusConfig,
                   enum_cfg: EnumerationConfig = DEFAULT_ENUMERATION
                   ) -> list[ShotProposal]:
    """All capped (story x camera) shots for one script line, metrics only."""
    stories = propose_story(line.story, scene, registry, N=cfg.story_n, M=cfg.story_m)
    pairs = []
    for si, s in enumerate(stories):
        for ci, c in enumerate(enumerate_camera_proposals(line.camera, s, enum_cfg)):
            pairs.append((si, ci, s, c))
    pairs = even_subsample(pairs, cfg.per_line_cap)
    shots = []
    for si, ci, s, c in pairs:
        shot_id = f"{line.index:02d}:{si:02d}:{ci:03d}"
        shots.append(simulate_shot(scene, s, c, cfg.render_size, shot_id=shot_id))
    return shots


def passes_gates(shot: ShotProposal, cfg: CorpusConfig) -> bool:
    return (shot.metrics.jerk <= cfg.jerk_gate
            and float(np.mean(shot.metrics.center_offset)) < cfg.center_gate)


def build_corpus(registry: AssetRegistry, script_text: str, cfg: CorpusConfig,
                 extra_negatives: int = 0,
                 enum_cfg: EnumerationConfig = DEFAULT_ENUMERATION):
    """Gated positives, paired perturbed negatives and an optional extra
    negative pool (for top-decile evaluation), all with features attached."""
    scene = registry.scene(cfg.scene_id)
    lines = parse_script_file(script_text)
    gated: list[ShotProposal] = []
    for line in lines:
        for shot in line_shot_pool(line, registry, scene, cfg, enum_cfg):
            if passes_gates(shot, cfg):
                gated.append(shot)
    if len(gated) < cfg.n_positive:
        raise ValueError(f"only {len(gated)} gated positives; need {cfg.n_positive}")
    positives_raw = even_subsample(gated, cfg.n_positive)

    def labeled(shot: ShotProposal, label: int) -> LabeledShot:
        movement, scale, angle = _class_labels(shot.camera.tag)
        return LabeledShot(shot, extract_features(shot), label, movement, scale, angle)

    positives = [labeled(s, 1) for s in positives_raw]

    def negative_of(source: ShotProposal, seed: int) -> LabeledShot:
        noisy = perturb_negative(source.camera, cfg.sigma_pos, cfg.sigma_rot,
                                 seed=seed, source_id=source.id)
        shot = simulate_shot(source.scene, source.story, noisy, cfg.render_size,
                             shot_id=f"{source.id}:neg{seed}")
        return labeled(shot, 0)

    negatives = [negative_of(positives_raw[i % len(positives_raw)], cfg.seed + 1000 + i)
                 for i in range(cfg.n_negative)]
    extras = [negative_of(positives_raw[i % len(positives_raw)], cfg.seed + 100_000 + i)
              for i in range(extra_negatives)]
    return positives, negatives, extras


def split_corpus(shots: list[LabeledShot], holdout_frac: float, seed: int):
    """Deterministic shuffle split into (train, holdout)."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(shots))
    n_hold = int(round(len(shots) * holdout_frac))
    hold_idx = set(int(i) for i in order[:n_hold])
    train = [s for i, s in enumerate(shots) if i not in hold_idx]
    hold = [s for i, s in enumerate(shots) if i in hold_idx]
    return train, hold


@dataclass
class EpochLog:
    epoch: int
    binary: float
    classes: float
    contrastive: float
    total: float


def train_ranker(samples: list[TrainSample], model_cfg: RankerConfig,
                 epochs: int = 60, batch_size: int = 128, lr: float = 1e-3,
                 seed: int = 0, log_path: str | Path | None = None
                 ) -> tuple[RankerModel, list[EpochLog]]:
    """Seeded single-threaded training loop over the composite objective."""
    model = RankerModel.initialize(model_cfg, seed=seed)
    optimizer = Adam(lr=lr)
    rng = np.random.default_rng(seed)
    logs: list[EpochLog] = []
    for epoch in range(epochs):
        order = rng.permutation(len(samples))
        sums = np.zeros(3)
        n_batches = 0
        for start in range(0, len(samples), batch_size):
            batch = [samples[int(i)] for i in order[start:start + batch_size]]
            if len(batch) < 2:
                continue
            breakdown = train_step(model, batch, optimizer)
            sums += (breakdown.binary, breakdown.classes, breakdown.contrastive)
            n_batches += 1
        mean = sums / max(n_batches, 1)
        logs.append(EpochLog(epoch, float(mean[0]), float(mean[1]), float(mean[2]),
                             float(mean.sum())))
    if log_path is not None:
        lines = ["epoch\tloss_binary\tloss_class\tloss_contrastive\tloss_total"]
        lines += [f"{e.epoch}\t{e.binary:.6f}\t{e.classes:.6f}\t{e.contrastive:.6f}"
                  f"\t{e.total:.6f}" for e in logs]
        Path(log_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return model, logs


def score_shots(model: RankerModel, shots: list[LabeledShot]) -> np.ndarray:
    return np.array([float(forward(model, s.features.view_a).p_b) for s in shots])


@dataclass
class EvalReport:
    auc: float
    top_decile_recall: float
    n_positive: int
    n_pool: int

    def to_dict(self) -> dict:
        return {"auc": self.auc, "top_decile_recall": self.top_decile_recall,
                "n_positive": self.n_positive, "n_pool": self.n_pool}


def evaluate_ranking(model: RankerModel, positives: list[LabeledShot],
                     negatives: list[LabeledShot]) -> EvalReport:
    """Held-out AUC plus the share of positives landing in the top decile of
    the mixed pool (scores sorted descending, ties by jerk then id)."""
    pos_scores = score_shots(model, positives)
    neg_scores = score_shots(model, negatives)
    auc = auc_score(pos_scores, neg_scores)
    pool = [(s, 1, shot) for s, shot in zip(pos_scores, positives)]
    pool += [(s, 0, shot) for s, shot in zip(neg_scores, negatives)]
    pool.sort(key=lambda row: (-row[0], row[2].proposal.metrics.jerk, row[2].proposal.id))
    top_k = max(1, int(np.ceil(0.1 * len(pool))))
    in_top = sum(label for _, label, _ in pool[:top_k])
    return EvalReport(auc=float(auc),
                      top_decile_recall=float(in_top / max(len(positives), 1)),
                      n_positive=len(positives), n_pool=len(pool))
