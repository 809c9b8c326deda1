"""Learned shot ranking.

A compact multilayer perceptron encodes the 8 per-frame feature vectors and
mean-pools them into one embedding per shot.  On top of the embedding sit a
binary quality head, three shot-type heads (movement / scale / angle) and a
normalized projection used by a momentum-dictionary contrastive objective:
the key encoder is a slowly trailing copy of the query encoder and a FIFO
queue of past keys provides the negatives.  Everything is plain numpy with
hand-written gradients so they can be checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_DIM, FRAME_SLOTS

CHECKPOINT_VERSION = 1
_EPS = 1e-7

# Parameters shared by the query and key encoders (momentum-updated).
_SHARED = ("W1", "b1", "W2", "b2", "Wp", "bp")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class RankerConfig:
    input_dim: int = FEATURE_DIM
    frame_slots: int = FRAME_SLOTS
    hidden_dim: int = 128
    embed_dim: int = 128
    proj_dim: int = 64
    movement_classes: int = 11
    scale_classes: int = 3
    angle_classes: int = 3
    queue_size: int = 6553
    temperature: float = 0.07
    momentum: float = 0.999

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class TrainSample:
    view_a: np.ndarray         # (F, input_dim)
    view_b: np.ndarray         # (F, input_dim)
    label: int                 # 1 good / 0 perturbed
    movement: int
    scale: int
    angle: int


class RankerModel:
    def __init__(self, cfg: RankerConfig, params: dict[str, np.ndarray],
                 key_params: dict[str, np.ndarray], queue: np.ndarray,
                 queue_ptr: int = 0):
        self.cfg = cfg
        self.params = params
        self.key_params = key_params
        self.queue = queue
        self.queue_ptr = queue_ptr

    @classmethod
    def initialize(cls, cfg: RankerConfig, seed: int = 0,
                   zero_heads: bool = False) -> "RankerModel":
        rng = np.random.default_rng(seed)

        def dense(n_in, n_out):
            scale = np.sqrt(2.0 / (n_in + n_out))
            return rng.normal(0.0, scale, size=(n_in, n_out))

        params = {
            "W1": dense(cfg.input_dim, cfg.hidden_dim),
            "b1": np.zeros(cfg.hidden_dim),
            "W2": dense(cfg.hidden_dim, cfg.embed_dim),
            "b2": np.zeros(cfg.embed_dim),
            "Wp": dense(cfg.embed_dim, cfg.proj_dim),
            "bp": np.zeros(cfg.proj_dim),
            "wb": np.zeros(cfg.embed_dim) if zero_heads else dense(cfg.embed_dim, 1)[:, 0],
            "bb": np.zeros(1),
            "Wm": np.zeros((cfg.embed_dim, cfg.movement_classes)) if zero_heads
                  else dense(cfg.embed_dim, cfg.movement_classes),
            "bm": np.zeros(cfg.movement_classes),
            "Ws": np.zeros((cfg.embed_dim, cfg.scale_classes)) if zero_heads
                  else dense(cfg.embed_dim, cfg.scale_classes),
            "bs": np.zeros(cfg.scale_classes),
            "Wa": np.zeros((cfg.embed_dim, cfg.angle_classes)) if zero_heads
                  else dense(cfg.embed_dim, cfg.angle_classes),
            "ba": np.zeros(cfg.angle_classes),
        }
        key_params = {k: params[k].copy() for k in _SHARED}
        queue = rng.normal(0.0, 1.0, size=(cfg.queue_size, cfg.proj_dim))
        queue /= np.linalg.norm(queue, axis=1, keepdims=True)
        return cls(cfg, params, key_params, queue)

    def n_params(self) -> int:
        return sum(int(np.prod(p.shape)) for p in self.params.values())

    def queue_snapshot(self) -> np.ndarray:
        """Dictionary keys ordered oldest to newest."""
        return np.roll(self.queue, -self.queue_ptr, axis=0)

    def enqueue(self, keys: np.ndarray):
        """FIFO insert: new keys overwrite the oldest slots."""
        K = self.cfg.queue_size
        keys = keys / np.linalg.norm(keys, axis=1, keepdims=True)
        for row in keys:
            self.queue[self.queue_ptr] = row
            self.queue_ptr = (self.queue_ptr + 1) % K

    def momentum_update(self, m: float | None = None):
        m = self.cfg.momentum if m is None else m
        for k in _SHARED:
            self.key_params[k] = m * self.key_params[k] + (1.0 - m) * self.params[k]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def encode(params: dict, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """Frame-wise MLP, temporal mean pool, then one more nonlinearity."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    h = np.tanh(x @ params["W1"] + params["b1"])
    pooled = h.mean(axis=1)
    emb = np.tanh(pooled @ params["W2"] + params["b2"])
    cache = {"x": x, "h": h, "pooled": pooled, "emb": emb}
    return (emb[0] if single else emb), cache


def project(params: dict, emb: np.ndarray) -> tuple[np.ndarray, dict]:
    v = emb @ params["Wp"] + params["bp"]
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    norm = np.where(norm == 0.0, 1.0, norm)
    z = v / norm
    return z, {"v": v, "norm": norm, "z": z}


@dataclass
class ForwardOut:
    p_b: np.ndarray
    movement_probs: np.ndarray
    scale_probs: np.ndarray
    angle_probs: np.ndarray
    z: np.ndarray
    cache: dict = field(repr=False, default_factory=dict)


def forward(model: RankerModel, features: np.ndarray) -> ForwardOut:
    """Run the query tower on a (B, F, input_dim) batch (or a single shot)."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    p = model.params
    emb, enc_cache = encode(p, x)
    logit_b = emb @ p["wb"] + p["bb"][0]
    p_b = 1.0 / (1.0 + np.exp(-logit_b))
    movement = _softmax(emb @ p["Wm"] + p["bm"])
    scale = _softmax(emb @ p["Ws"] + p["bs"])
    angle = _softmax(emb @ p["Wa"] + p["ba"])
    z, proj_cache = project(p, emb)
    cache = {"enc": enc_cache, "proj": proj_cache, "emb": emb, "p_b": p_b,
             "movement": movement, "scale": scale, "angle": angle}
    if single:
        return ForwardOut(p_b[0], movement[0], scale[0], angle[0], z[0], cache)
    return ForwardOut(p_b, movement, scale, angle, z, cache)


def loss_binary(p_b: np.ndarray, y: np.ndarray) -> float:
    """Standard binary cross-entropy, probabilities clamped away from 0/1."""
    p = np.clip(np.atleast_1d(np.asarray(p_b, dtype=float)), _EPS, 1.0 - _EPS)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


def loss_class(movement_probs, scale_probs, angle_probs, labels) -> float:
    """Sum of the three per-head cross-entropies (each a batch mean)."""
    total = 0.0
    for probs, idx in zip((movement_probs, scale_probs, angle_probs), range(3)):
        probs = np.atleast_2d(np.asarray(probs, dtype=float))
        lab = np.atleast_2d(np.asarray(labels, dtype=int))[:, idx] \
            if np.asarray(labels).ndim > 1 else np.atleast_1d(np.asarray(labels))[idx:idx + 1]
        picked = np.clip(probs[np.arange(len(probs)), lab], _EPS, 1.0)
        total += float(np.mean(-np.log(picked)))
    return total


def loss_contrastive(z_q: np.ndarray, z_plus: np.ndarray, queue: np.ndarray,
                     tau: float) -> float:
    """Dictionary InfoNCE.  The denominator holds exactly K terms: the
    positive pair plus the K-1 newest dictionary entries (the oldest entry,
    which is next to be evicted, is dropped)."""
    z_q = np.atleast_2d(np.asarray(z_q, dtype=float))
    z_plus = np.atleast_2d(np.asarray(z_plus, dtype=float))
    negs = np.asarray(queue, dtype=float)[1:]
    logits = np.concatenate([
        np.sum(z_q * z_plus, axis=1, keepdims=True), z_q @ negs.T], axis=1) / tau
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(np.mean(-log_probs[:, 0]))


@dataclass
class LossBreakdown:
    binary: float
    classes: float
    contrastive: float

    @property
    def total(self) -> float:
        return self.binary + self.classes + self.contrastive


def _batch_arrays(batch: list[TrainSample]):
    x_a = np.stack([s.view_a for s in batch]).astype(float)
    x_b = np.stack([s.view_b for s in batch]).astype(float)
    y = np.array([s.label for s in batch], dtype=float)
    labels = np.array([[s.movement, s.scale, s.angle] for s in batch], dtype=int)
    return x_a, x_b, y, labels


def loss_and_grads(model: RankerModel, batch: list[TrainSample]
                   ) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    """Composite loss and analytic gradients for one batch.

    Keys come from the momentum tower on the second view and, like the queue,
    receive no gradient.
    """
    cfg = model.cfg
    x_a, x_b, y, labels = _batch_arrays(batch)
    B = len(batch)
    p = model.params

    out = forward(model, x_a)
    cache = out.cache
    emb = cache["emb"]

    k_emb, _ = encode(model.key_params, x_b)
    z_plus, _ = project(model.key_params, np.atleast_2d(k_emb))

    negs = model.queue_snapshot()[1:]
    tau = cfg.temperature
    z_q = np.atleast_2d(out.z)
    logits_q = np.concatenate([
        np.sum(z_q * z_plus, axis=1, keepdims=True), z_q @ negs.T], axis=1) / tau
    shifted = logits_q - logits_q.max(axis=1, keepdims=True)
    soft = np.exp(shifted)
    soft /= soft.sum(axis=1, keepdims=True)
    l_q = float(np.mean(-(shifted[:, 0] - np.log(np.exp(shifted).sum(axis=1)))))

    p_b = np.atleast_1d(out.p_b)
    l_b = loss_binary(p_b, y)
    l_c = loss_class(out.movement_probs, out.scale_probs, out.angle_probs, labels)

    grads = {k: np.zeros_like(v) for k, v in p.items()}
    d_emb = np.zeros_like(emb)

    # Binary head (gradient passes nothing where the probability clamps).
    active = (p_b > _EPS) & (p_b < 1.0 - _EPS)
    d_logit_b = np.where(active, p_b - y, 0.0) / B
    grads["wb"] = emb.T @ d_logit_b
    grads["bb"] = np.array([d_logit_b.sum()])
    d_emb += np.outer(d_logit_b, p["wb"])

    # Class heads.
    for probs, (w_key, b_key), col in (
            (np.atleast_2d(out.movement_probs), ("Wm", "bm"), 0),
            (np.atleast_2d(out.scale_probs), ("Ws", "bs"), 1),
            (np.atleast_2d(out.angle_probs), ("Wa", "ba"), 2)):
        d_logits = probs.copy()
        d_logits[np.arange(B), labels[:, col]] -= 1.0
        d_logits /= B
        grads[w_key] = emb.T @ d_logits
        grads[b_key] = d_logits.sum(axis=0)
        d_emb += d_logits @ p[w_key].T

    # Contrastive head through the normalized projection.
    d_logits_q = soft.copy()
    d_logits_q[:, 0] -= 1.0
    d_logits_q /= B * tau
    d_z = d_logits_q[:, :1] * z_plus + d_logits_q[:, 1:] @ negs
    proj = cache["proj"]
    z = proj["z"]
    d_v = (d_z - np.sum(d_z * z, axis=1, keepdims=True) * z) / proj["norm"]
    grads["Wp"] = emb.T @ d_v
    grads["bp"] = d_v.sum(axis=0)
    d_emb += d_v @ p["Wp"].T

    # Shared encoder.
    enc = cache["enc"]
    d_e_pre = d_emb * (1.0 - emb ** 2)
    grads["W2"] = enc["pooled"].T @ d_e_pre
    grads["b2"] = d_e_pre.sum(axis=0)
    d_pooled = d_e_pre @ p["W2"].T
    F = enc["h"].shape[1]
    d_h = np.repeat(d_pooled[:, None, :], F, axis=1) / F
    d_h_pre = d_h * (1.0 - enc["h"] ** 2)
    x_flat = enc["x"].reshape(-1, enc["x"].shape[-1])
    grads["W1"] = x_flat.T @ d_h_pre.reshape(-1, d_h_pre.shape[-1])
    grads["b1"] = d_h_pre.sum(axis=(0, 1))

    breakdown = LossBreakdown(binary=l_b, classes=l_c, contrastive=l_q)
    cache["z_plus"] = z_plus
    return breakdown, grads


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1 ** self.t)
            v_hat = self.v[k] / (1 - self.beta2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_step(model: RankerModel, batch: list[TrainSample], optimizer: Adam
               ) -> LossBreakdown:
    """One optimization step: query-tower gradients, momentum update of the
    key tower, FIFO enqueue of this batch's keys."""
    breakdown, grads = loss_and_grads(model, batch)
    if not np.isfinite(breakdown.total):
        raise TrainingDiverged(
            f"non-finite loss: binary={breakdown.binary} classes={breakdown.classes} "
            f"contrastive={breakdown.contrastive} at step {optimizer.t + 1}")
    optimizer.step(model.params, grads)
    model.momentum_update()
    x_b = np.stack([s.view_b for s in batch]).astype(float)
    k_emb, _ = encode(model.key_params, x_b)
    keys, _ = project(model.key_params, np.atleast_2d(k_emb))
    model.enqueue(keys)
    return breakdown


def order_proposals(proposals: list) -> list:
    """Descending score; ties break toward lower camera jerk, then lower id."""
    return sorted(proposals, key=lambda p: (-p.score, p.metrics.jerk, p.id))


def rank_shots(model: RankerModel, proposals: list, features: list | None = None) -> list:
    """Score every proposal with the binary head and return them in rank
    order (a permutation of the input; scores are written back)."""
    from .features import extract_features

    if features is None:
        features = [extract_features(p) for p in proposals]
    for prop, feats in zip(proposals, features):
        out = forward(model, feats.view_a)
        prop.score = float(out.p_b)
    return order_proposals(proposals)


def save_checkpoint(model: RankerModel, path):
    arrays = {f"q_{k}": v for k, v in model.params.items()}
    arrays.update({f"k_{k}": v for k, v in model.key_params.items()})
    arrays["queue"] = model.queue
    meta = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "config": model.cfg.to_dict(),
        "queue_ptr": model.queue_ptr,
        "shapes": {k: list(v.shape) for k, v in model.params.items()},
    }
    arrays["meta_json"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> RankerModel:
    data = np.load(path)
    meta = json.loads(bytes(data["meta_json"]).decode())
    if meta.get("checkpoint_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('checkpoint_version')}")
    cfg = RankerConfig(**meta["config"])
    params = {k[2:]: data[k].copy() for k in data.files if k.startswith("q_")}
    for name, shape in meta["shapes"].items():
        if list(params[name].shape) != shape:
            raise ValueError(f"checkpoint parameter {name} has shape "
                             f"{params[name].shape}, manifest says {shape}")
    key_params = {k[2:]: data[k].copy() for k in data.files if k.startswith("k_")}
    return RankerModel(cfg, params, key_params, data["queue"].copy(),
                       int(meta["queue_ptr"]))


def auc_score(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Probability a positive outranks a negative (rank-sum form)."""
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    all_scores = np.concatenate([pos, neg])
    order = np.argsort(all_scores, kind="mergesort")
    ranks = np.empty(len(all_scores))
    ranks[order] = np.arange(1, len(all_scores) + 1)
    # average ties
    sorted_scores = all_scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    r_pos = ranks[:len(pos)].sum()
    n_pos, n_neg = len(pos), len(neg)
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
