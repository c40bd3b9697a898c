"""Vocabulary with rare-item thresholds, unigram noise tables, and the
random-walk path sampler.

Word counts are expected path-endpoint frequencies (the exact sum of
weights of enumerated paths ending at the word), field counts are
weighted edge-traversal frequencies; both are accumulated in exact
rational arithmetic so threshold tests are sharp.  Words under the word
threshold collapse to one placeholder per POS, prepositions under the
preposition threshold collapse to one placeholder field; ARG/SUBJ/COMP
are never collapsed.

The sampler starts one walk per directed edge and always continues at
internal nodes, choosing uniformly among the non-entry edges, emitting
every prefix; the expected emission count of a path then equals its
weight exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import BadMagic, EmptyCorpus, MalformedLine
from .trees import (
    CORE_FIELDS,
    POS_TAGS,
    UNKNOWN_FIELD,
    DcsTree,
    FieldId,
    Word,
    exact_path_weight,
    hop_fields,
    path_nodes,
    unknown_word,
)

VOCAB_MAGIC = "VDCS-VOCAB 1"


@dataclass(frozen=True)
class PathSample:
    """One sampled training path, already mapped through the vocabulary."""

    start: Word
    end: Word
    hops: tuple[tuple[FieldId, FieldId], ...]


@dataclass(eq=False)
class Vocabulary:
    words: tuple[Word, ...]
    fields: tuple[FieldId, ...]
    word_counts: dict[Word, float]
    field_counts: dict[FieldId, float]
    word_min: float = 1.0
    prep_min: float = 1.0
    word_index: dict = field(init=False, repr=False)
    field_index: dict = field(init=False, repr=False)
    _word_cum: np.ndarray = field(init=False, repr=False)
    _field_cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.field_index = {f: i for i, f in enumerate(self.fields)}
        if len(self.word_index) != len(self.words) or len(self.field_index) != len(self.fields):
            raise ValueError("duplicate vocabulary entries")
        self._word_cum = np.cumsum([self.word_counts.get(w, 0.0) for w in self.words])
        self._field_cum = np.cumsum([self.field_counts.get(f, 0.0) for f in self.fields])

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    def map_word(self, w: Word) -> Word:
        return w if w in self.word_index else unknown_word(w.pos)

    def map_field(self, f: FieldId) -> FieldId:
        return f if f in self.field_index else UNKNOWN_FIELD

    def unigram_draw_word(self, rng: np.random.Generator) -> Word:
        return self.words[self._draw(self._word_cum, rng)]

    def unigram_draw_field(self, rng: np.random.Generator) -> FieldId:
        return self.fields[self._draw(self._field_cum, rng)]

    @staticmethod
    def _draw(cum: np.ndarray, rng: np.random.Generator) -> int:
        total = cum[-1] if len(cum) else 0.0
        if total <= 0.0:
            raise EmptyCorpus("unigram table has no mass")
        return int(np.searchsorted(cum, rng.random() * total, side="right"))


def build_vocab(
    trees: Iterable[DcsTree], word_min: float = 1000.0, prep_min: float = 10000.0
) -> Vocabulary:
    """Count path endpoints and traversed fields exactly, then apply the
    rare-word / rare-preposition thresholds."""
    if word_min < 1 or prep_min < 1:
        raise ValueError("thresholds must be >= 1")
    word_acc: dict[Word, Fraction] = {}
    field_acc: dict[FieldId, Fraction] = {}
    saw_tree = False
    for tree in trees:
        saw_tree = True
        n = tree.n_nodes
        if n < 2:
            continue
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                nodes = path_nodes(tree, a, b)
                w = exact_path_weight(tree, nodes)
                end_word = tree.words[b]
                word_acc[end_word] = word_acc.get(end_word, Fraction(0)) + w
                for u, v in zip(nodes, nodes[1:]):
                    near, far = hop_fields(tree, u, v)
                    field_acc[near] = field_acc.get(near, Fraction(0)) + w
                    field_acc[far] = field_acc.get(far, Fraction(0)) + w
    if not saw_tree or not word_acc:
        raise EmptyCorpus("no multi-node trees in the corpus")

    words: dict[Word, Fraction] = {unknown_word(pos): Fraction(0) for pos in POS_TAGS}
    for w, c in word_acc.items():
        if c >= word_min and w.lemma != unknown_word(w.pos).lemma:
            words[w] = words.get(w, Fraction(0)) + c
        else:
            unk = unknown_word(w.pos)
            words[unk] += c

    fields: dict[FieldId, Fraction] = {f: Fraction(0) for f in CORE_FIELDS}
    fields[UNKNOWN_FIELD] = Fraction(0)
    for f, c in field_acc.items():
        if f in CORE_FIELDS or (f != UNKNOWN_FIELD and c >= prep_min):
            fields[f] = fields.get(f, Fraction(0)) + c
        else:
            fields[UNKNOWN_FIELD] += c

    word_order = sorted(words, key=lambda w: (-words[w], w.lemma, w.pos))
    prep_order = sorted(
        (f for f in fields if f not in CORE_FIELDS and f != UNKNOWN_FIELD),
        key=lambda f: (-fields[f], f),
    )
    field_order = list(CORE_FIELDS) + prep_order + [UNKNOWN_FIELD]
    return Vocabulary(
        words=tuple(word_order),
        fields=tuple(field_order),
        word_counts={w: float(c) for w, c in words.items()},
        field_counts={f: float(c) for f, c in fields.items()},
        word_min=float(word_min),
        prep_min=float(prep_min),
    )


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(VOCAB_MAGIC + "\n")
        for w in vocab.words:
            fh.write(f"W\t{w.render()}\t{vocab.word_counts.get(w, 0.0)!r}\n")
        for f in vocab.fields:
            fh.write(f"F\t{f}\t{vocab.field_counts.get(f, 0.0)!r}\n")


def load_vocab(path) -> Vocabulary:
    words: list[Word] = []
    fields: list[FieldId] = []
    word_counts: dict[Word, float] = {}
    field_counts: dict[FieldId, float] = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != VOCAB_MAGIC:
            raise BadMagic(f"expected {VOCAB_MAGIC!r}, got {first!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[0] not in ("W", "F"):
                raise MalformedLine("expected W/F<TAB>entry<TAB>count", line_no)
            try:
                count = float(parts[2])
            except ValueError as exc:
                raise MalformedLine(str(exc), line_no) from exc
            if parts[0] == "W":
                w = Word.parse(parts[1])
                words.append(w)
                word_counts[w] = count
            else:
                fields.append(parts[1])
                field_counts[parts[1]] = count
    return Vocabulary(tuple(words), tuple(fields), word_counts, field_counts)


def _walk_layout(tree: DcsTree):
    """Padded adjacency arrays for the vectorized walk kernel."""
    n = tree.n_nodes
    deg = np.array([tree.degree(i) for i in range(n)], dtype=np.int64)
    maxdeg = int(deg.max())
    adj = np.full((n, maxdeg), -1, dtype=np.int64)
    pos_in_adj = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for slot, nb in enumerate(tree.neighbors(i)):
            adj[i, slot] = nb
            pos_in_adj[i, nb] = slot
    starts = [(e.parent, e.child) for e in tree.edges] + [
        (e.child, e.parent) for e in tree.edges
    ]
    return deg, adj, pos_in_adj, np.array(starts, dtype=np.int64)


def _walk_trajectories(
    tree: DcsTree, epochs: int, rng: np.random.Generator
) -> np.ndarray:
    """Node trajectories for ``epochs`` full sampling passes.

    Row layout: one row per (epoch, directed start edge); column 0 is the
    start node, subsequent columns the visited nodes, -1 once stopped.
    """
    n = tree.n_nodes
    deg, adj, pos_in_adj, starts = _walk_layout(tree)
    n_walks = len(starts) * epochs
    traj = np.full((n_walks, n), -1, dtype=np.int64)
    start_u = np.tile(starts[:, 0], epochs)
    start_v = np.tile(starts[:, 1], epochs)
    traj[:, 0] = start_u
    traj[:, 1] = start_v
    prev = start_u.copy()
    cur = start_v.copy()
    alive = np.arange(n_walks)
    for col in range(2, n):
        keep = deg[cur] >= 2
        alive = alive[keep]
        if alive.size == 0:
            break
        cur = cur[keep]
        prev = prev[keep]
        r = rng.integers(0, deg[cur] - 1)
        pos = pos_in_adj[cur, prev]
        r = r + (r >= pos)
        nxt = adj[cur, r]
        traj[alive, col] = nxt
        prev = cur
        cur = nxt
    return traj


def sample_paths(
    tree: DcsTree, vocab: Vocabulary, rng: np.random.Generator
) -> list[PathSample]:
    """One sampling epoch over a tree; placeholder substitution is applied
    after sampling and never changes the path structure."""
    if tree.n_nodes < 2:
        return []
    traj = _walk_trajectories(tree, 1, rng)
    mapped_words = [vocab.map_word(w) for w in tree.words]
    out: list[PathSample] = []
    for row in traj:
        start = int(row[0])
        hops: list[tuple[FieldId, FieldId]] = []
        node = start
        for col in range(1, len(row)):
            nxt = int(row[col])
            if nxt < 0:
                break
            near, far = hop_fields(tree, node, nxt)
            hops.append((vocab.map_field(near), vocab.map_field(far)))
            out.append(PathSample(mapped_words[start], mapped_words[nxt], tuple(hops)))
            node = nxt
    return out


def sample_path_counts(
    tree: DcsTree, rng: np.random.Generator, epochs: int, chunk: int = 20000
) -> np.ndarray:
    """Emission counts per ordered node pair over many sampling epochs.

    Shares the walk kernel with ``sample_paths``; entry [a, b] counts how
    often the path a->b was emitted in total.
    """
    n = tree.n_nodes
    counts = np.zeros(n * n, dtype=np.int64)
    done = 0
    while done < epochs:
        batch = min(chunk, epochs - done)
        traj = _walk_trajectories(tree, batch, rng)
        base = traj[:, 0] * n
        for col in range(1, n):
            nodes = traj[:, col]
            valid = nodes >= 0
            if not valid.any():
                break
            counts += np.bincount(base[valid] + nodes[valid], minlength=n * n)
        done += batch
    return counts.reshape(n, n)


def path_sample_to_line(sample: PathSample) -> str:
    """Debug dump format: ``start_word<TAB>end_word<TAB>near:far,near:far,...``"""
    hops = ",".join(f"{near}:{far}" for near, far in sample.hops)
    return f"{sample.start.render()}\t{sample.end.render()}\t{hops}"


def dump_path_samples(samples: Iterable[PathSample], fh) -> int:
    count = 0
    for sample in samples:
        fh.write(path_sample_to_line(sample) + "\n")
        count += 1
    return count
