"""Noise-contrastive training of the vector/matrix parameters.

A positive example is a sampled path; its score runs through 2l matrix
slots (alternating plain and inverse maps).  Noise keeps the "target"
slots j < i and redraws everything from a uniformly chosen slot i on
(fields slot-by-slot from the field unigram, the end word from the word
unigram, slot parity preserved).  A step updates only the start query
vector, the two positive-path maps straddling the noise boundary, the
noise map at the boundary, and the two answer vectors; touched maps also
receive the inverse-consistency and orthogonality regularizer gradients.
Per-parameter gradients whose norm exceeds the clip threshold are
rescaled to it.

Gradients are taken per slot occurrence: a map repeated in an unselected
slot is held constant there.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .errors import EmptyCorpus, NonFiniteGradient
from .model import ModelParams, identity_maps, init_params
from .trees import DcsTree, FieldId, Word, enumerate_paths
from .vocab import PathSample, Vocabulary, sample_paths

MODES = ("full", "no_matrix", "no_inverse")
MAT_LR_WARN = 0.0005


@dataclass
class TrainConfig:
    dim: int = 100
    lr_vec: float = 0.1
    lr_mat: float = 0.0005
    gamma: float = 0.001
    kappa: float = 0.0001
    noise_per_example: int = 1
    clip_norm_vec: float = 1.0
    clip_norm_mat: float = 0.1
    epochs: int = 5
    seed: int = 1
    workers: int = 1
    mode: str = "full"
    lr_schedule: str = "linear"  # decay to 10% of initial, or "constant"
    total_steps: int | None = None  # filled in by train() for the decay

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.lr_schedule not in ("linear", "constant"):
            raise ValueError("lr_schedule must be linear or constant")
        if self.gamma < 0 or self.kappa < 0:
            raise ValueError("regularizer weights must be >= 0")
        if self.noise_per_example < 1:
            raise ValueError("need at least one noise example")
        if self.lr_mat > MAT_LR_WARN:
            warnings.warn(
                f"matrix learning rate {self.lr_mat} above {MAT_LR_WARN}; training may diverge",
                stacklevel=2,
            )


@dataclass(frozen=True)
class NoisedExample:
    """Replacement index i in [2, 2l], the redrawn fields for slots j >= i
    (in slot order), and the redrawn end word."""

    i: int
    fields: tuple[FieldId, ...]
    word: Word

    def __post_init__(self):
        if self.i < 2:
            raise ValueError("replacement index starts at 2")


def make_noise(
    path: PathSample, vocab: Vocabulary, rng: np.random.Generator, k: int = 1
) -> list[NoisedExample]:
    hi = 2 * len(path.hops)
    out = []
    for _ in range(k):
        i = int(rng.integers(2, hi + 1))
        fields = tuple(vocab.unigram_draw_field(rng) for _ in range(hi - i + 1))
        out.append(NoisedExample(i, fields, vocab.unigram_draw_word(rng)))
    return out


def _pos_slots(params: ModelParams, path: PathSample) -> list[tuple[int, bool]]:
    # (field id, is_inverse) per slot; slot 2t holds M[near], 2t+1 Minv[far]
    slots = []
    for near, far in path.hops:
        slots.append((params.field_id(near), False))
        slots.append((params.field_id(far), True))
    return slots


def _slot_mat(params: ModelParams, fid: int, inv: bool) -> np.ndarray:
    return params.Minv[fid] if inv else params.M[fid]


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def _softplus(x: float) -> float:
    # log(1 + e^x), stable on both tails
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def nce_loss(params: ModelParams, pos: PathSample, noises: list[NoisedExample]) -> float:
    """-log sigmoid(s+) - sum over noises of log sigmoid(-s-)."""
    s_pos, s_negs = _scores(params, pos, noises)
    return _softplus(-s_pos) + sum(_softplus(s) for s in s_negs)


def _scores(params, pos, noises):
    slots = _pos_slots(params, pos)
    v = params.V[params.word_id(pos.start)].astype(np.float64)
    u = params.U[params.word_id(pos.end)].astype(np.float64)
    r = v
    rows = [r]
    for fid, inv in slots:
        r = r @ _slot_mat(params, fid, inv)
        rows.append(r)
    s_pos = float(r @ u)
    s_negs = []
    for noise in noises:
        ri = noise.i - 1  # first replaced slot, 0-based
        nr = rows[ri]
        for off, (_, inv) in enumerate(slots[ri:]):
            nr = nr @ _slot_mat(params, params.field_id(noise.fields[off]), inv)
        s_negs.append(float(nr @ params.U[params.word_id(noise.word)].astype(np.float64)))
    return s_pos, s_negs


def regularizer_penalties(
    M: np.ndarray, Minv: np.ndarray, gamma: float, kappa: float
) -> tuple[float, float]:
    """gamma * ||Minv M - (tr(Minv M)/d) I||_F^2 drives Minv toward a
    scaled inverse; kappa * ||M^T M - (tr(M^T M)/d) I||_F^2 drives M
    toward orthogonal.  The identity is trace-scaled so growing M cannot
    cheat by shrinking Minv."""
    d = M.shape[0]
    M = np.asarray(M, dtype=np.float64)
    Minv = np.asarray(Minv, dtype=np.float64)
    B = Minv @ M
    E = B - (np.trace(B) / d) * np.eye(d)
    F = M.T @ M
    F = F - (np.trace(F) / d) * np.eye(d)
    return gamma * float(np.sum(E * E)), kappa * float(np.sum(F * F))


def regularizer_grads(
    M: np.ndarray, Minv: np.ndarray, gamma: float, kappa: float
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of both penalty terms, (d/dM, d/dMinv)."""
    d = M.shape[0]
    M = np.asarray(M, dtype=np.float64)
    Minv = np.asarray(Minv, dtype=np.float64)
    gM = np.zeros((d, d))
    gMinv = np.zeros((d, d))
    if gamma != 0.0:
        B = Minv @ M
        E = B - (np.trace(B) / d) * np.eye(d)
        gM += 2.0 * gamma * (Minv.T @ E)
        gMinv += 2.0 * gamma * (E @ M.T)
    if kappa != 0.0:
        F = M.T @ M
        F = F - (np.trace(F) / d) * np.eye(d)
        gM += 4.0 * kappa * (M @ F)
    return gM, gMinv


def loss_and_gradients(
    params: ModelParams,
    pos: PathSample,
    noises: list[NoisedExample],
    config: TrainConfig,
) -> tuple[float, dict]:
    """NCE loss and the sparse gradient set for one example.

    Keys are ("v", row), ("u", row), ("M", field id), ("Minv", field id);
    contributions to a shared parameter accumulate.  Regularizer
    gradients are folded into every touched map.
    """
    xi = params.word_id(pos.start)
    yi = params.word_id(pos.end)
    grads: dict[tuple[str, int], np.ndarray] = {}

    def add(key, value):
        if key in grads:
            grads[key] = grads[key] + value
        else:
            grads[key] = value

    if config.mode == "no_matrix":
        v = params.V[xi].astype(np.float64)
        u = params.U[yi].astype(np.float64)
        s_pos = float(v @ u)
        g_pos = _sigmoid(s_pos) - 1.0
        loss = _softplus(-s_pos)
        add(("v", xi), g_pos * u)
        add(("u", yi), g_pos * v)
        for noise in noises:
            zi = params.word_id(noise.word)
            uz = params.U[zi].astype(np.float64)
            s_neg = float(v @ uz)
            g_neg = _sigmoid(s_neg)
            loss += _softplus(s_neg)
            add(("v", xi), g_neg * uz)
            add(("u", zi), g_neg * v)
        return loss, grads

    slots = _pos_slots(params, pos)
    two_l = len(slots)
    v = params.V[xi].astype(np.float64)
    u = params.U[yi].astype(np.float64)
    rows = [v]
    for fid, inv in slots:
        rows.append(rows[-1] @ _slot_mat(params, fid, inv))
    cols = [None] * (two_l + 1)
    cols[two_l] = u
    for j in range(two_l - 1, -1, -1):
        fid, inv = slots[j]
        cols[j] = _slot_mat(params, fid, inv) @ cols[j + 1]

    s_pos = float(rows[two_l] @ u)
    g_pos = _sigmoid(s_pos) - 1.0
    loss = _softplus(-s_pos)
    add(("v", xi), g_pos * cols[0])
    add(("u", yi), g_pos * rows[two_l])

    noise_data = []
    for noise in noises:
        ri = noise.i - 1
        nslots = [
            (params.field_id(noise.fields[j - ri]), slots[j][1]) if j >= ri else slots[j]
            for j in range(two_l)
        ]
        zi = params.word_id(noise.word)
        ncols = [None] * (two_l + 1)
        ncols[two_l] = params.U[zi].astype(np.float64)
        for j in range(two_l - 1, -1, -1):
            fid, inv = nslots[j]
            ncols[j] = _slot_mat(params, fid, inv) @ ncols[j + 1]
        s_neg = float(rows[ri] @ ncols[ri])
        g_neg = _sigmoid(s_neg)
        loss += _softplus(s_neg)
        add(("v", xi), g_neg * ncols[0])
        nr = rows[ri]
        for j in range(ri, two_l):
            fid, inv = nslots[j]
            nr = nr @ _slot_mat(params, fid, inv)
        add(("u", zi), g_neg * nr)
        noise_data.append((ri, nslots, ncols, g_neg))

    # positive-path maps at the noise boundary, then the boundary noise map
    selected = sorted({j for ri, _, _, _ in noise_data for j in (ri - 1, ri)})
    for j in selected:
        fid, inv = slots[j]
        g = g_pos * np.outer(rows[j], cols[j + 1])
        for ri, _, ncols, g_neg in noise_data:
            if j < ri:
                g = g + g_neg * np.outer(rows[j], ncols[j + 1])
        add(("Minv" if inv else "M", fid), g)
    for ri, nslots, ncols, g_neg in noise_data:
        fid, inv = nslots[ri]
        add(("Minv" if inv else "M", fid), g_neg * np.outer(rows[ri], ncols[ri + 1]))

    if config.gamma != 0.0 or config.kappa != 0.0:
        touched = [key for key in grads if key[0] in ("M", "Minv")]
        for kind, fid in touched:
            gM, gMinv = regularizer_grads(
                params.M[fid], params.Minv[fid], config.gamma, config.kappa
            )
            grads[(kind, fid)] = grads[(kind, fid)] + (gM if kind == "M" else gMinv)
    return loss, grads


def _lr_at(initial: float, config: TrainConfig, step_index: int) -> float:
    if config.lr_schedule == "constant" or not config.total_steps:
        return initial
    frac = min(step_index / config.total_steps, 1.0)
    return initial * (1.0 - 0.9 * frac)


def step(
    params: ModelParams,
    pos: PathSample,
    noises: list[NoisedExample],
    config: TrainConfig,
    step_index: int,
) -> float:
    loss, grads = loss_and_gradients(params, pos, noises, config)
    lr_v = _lr_at(config.lr_vec, config, step_index)
    lr_m = _lr_at(config.lr_mat, config, step_index)
    for key, g in grads.items():
        kind, idx = key
        is_vec = kind in ("v", "u")
        clip = config.clip_norm_vec if is_vec else config.clip_norm_mat
        norm = float(np.linalg.norm(g))
        if not math.isfinite(norm):
            raise NonFiniteGradient(
                f"step {step_index}: gradient for {kind}[{idx}] has norm {norm}"
            )
        if clip is not None and norm > clip:
            g = g * (clip / norm)
        if kind == "v":
            _apply(params.V, idx, lr_v, g)
        elif kind == "u":
            _apply(params.U, idx, lr_v, g)
        elif config.mode != "no_matrix":
            table = params.M if kind == "M" else params.Minv
            _apply(table, idx, lr_m, g)
    return loss


def _apply(table: np.ndarray, idx: int, lr: float, g: np.ndarray) -> None:
    table[idx] = (table[idx].astype(np.float64) - lr * g).astype(table.dtype)


@dataclass
class EpochStats:
    epoch: int
    steps: int  # cumulative step count at epoch end
    mean_loss: float
    examples_per_sec: float


@dataclass
class TrainStats:
    epochs: list[EpochStats] = field(default_factory=list)
    total_steps: int = 0
    skipped_trees: int = 0

    def log_lines(self):
        for e in self.epochs:
            yield f"{e.epoch}\t{e.steps}\t{e.mean_loss:.6f}\t{e.examples_per_sec:.1f}"


def expected_steps_per_epoch(trees: list[DcsTree]) -> float:
    """Expected sampled-path count for one pass: the sum of path weights."""
    return sum(p.weight for t in trees if t.n_nodes >= 2 for p in enumerate_paths(t))


def train(
    corpus: Iterable[DcsTree],
    vocab: Vocabulary,
    config: TrainConfig,
    log: Callable[[str], None] | None = None,
) -> tuple[ModelParams, TrainStats]:
    """Epochs of (sample paths -> draw noise -> sparse SGD step).

    Deterministic (bitwise) for a fixed seed with workers=1.  With more
    workers, updates are unsynchronized sparse writes to shared arrays;
    races are tolerated and results are not reproducible.
    """
    trees = [t for t in corpus]
    if not trees:
        raise EmptyCorpus("no trees to train on")
    usable = [t for t in trees if t.n_nodes >= 2]
    skipped = len(trees) - len(usable)
    if not usable:
        raise EmptyCorpus("no multi-node trees to train on")

    cfg = config
    if cfg.mode == "no_inverse":
        cfg = replace(cfg, gamma=0.0)
    if cfg.total_steps is None and cfg.lr_schedule == "linear":
        cfg = replace(
            cfg, total_steps=max(1, math.ceil(cfg.epochs * expected_steps_per_epoch(usable)))
        )

    seed_seq = np.random.SeedSequence(cfg.seed)
    init_seq, *worker_seqs = seed_seq.spawn(1 + max(1, cfg.workers))
    params = init_params(vocab, cfg.dim, np.random.default_rng(init_seq))
    if cfg.mode == "no_matrix":
        identity_maps(params)

    stats = TrainStats(skipped_trees=skipped)
    worker_rngs = []
    for s in worker_seqs:
        sampler_seq, noise_seq = s.spawn(2)
        worker_rngs.append(
            (np.random.default_rng(sampler_seq), np.random.default_rng(noise_seq))
        )

    def run_chunk(chunk, rng_pair, base_step):
        sampler_rng, noise_rng = rng_pair
        steps = 0
        loss_sum = 0.0
        for tree in chunk:
            for sample in sample_paths(tree, vocab, sampler_rng):
                noises = make_noise(sample, vocab, noise_rng, cfg.noise_per_example)
                loss_sum += step(params, sample, noises, cfg, base_step + steps)
                steps += 1
        return steps, loss_sum

    step_count = 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        if cfg.workers <= 1:
            done, loss_sum = run_chunk(usable, worker_rngs[0], step_count)
        else:
            chunks = [usable[w :: cfg.workers] for w in range(cfg.workers)]
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [
                    pool.submit(run_chunk, chunk, worker_rngs[w], step_count)
                    for w, chunk in enumerate(chunks)
                ]
                results = [f.result() for f in futures]
            done = sum(r[0] for r in results)
            loss_sum = sum(r[1] for r in results)
        step_count += done
        elapsed = max(time.perf_counter() - t0, 1e-9)
        row = EpochStats(
            epoch=epoch,
            steps=step_count,
            mean_loss=loss_sum / done if done else float("nan"),
            examples_per_sec=done / elapsed,
        )
        stats.epochs.append(row)
        if log is not None:
            log(f"{row.epoch}\t{row.steps}\t{row.mean_loss:.6f}\t{row.examples_per_sec:.1f}")
    stats.total_steps = step_count
    return params, stats
