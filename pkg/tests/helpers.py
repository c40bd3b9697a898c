"""Shared generators and brute-force oracles for the test suite.

The oracles deliberately avoid the package's evaluation code paths:
denotations are checked by enumerating full tuple assignments, path
chains by enumerating tuple sequences.
"""

import itertools

import numpy as np

from dcsvec.logic import Database, DbTuple
from dcsvec.trees import ARG, COMP, SUBJ, DcsTree, Edge, Word, hop_fields, path_nodes

POS_CHOICES = ("N", "V", "J")
FIELD_CHOICES = (ARG, SUBJ, COMP, "in", "on", "of")
VALUES = ("a", "b", "c", "d")


def random_tree(rng: np.random.Generator, n_nodes: int, n_words: int | None = None) -> DcsTree:
    """Random recursive tree: node i attaches to a uniform earlier node."""
    assert n_nodes >= 1
    lemmas = [f"w{i}" for i in range(n_words or n_nodes)]
    words = tuple(
        Word(lemmas[int(rng.integers(len(lemmas)))], POS_CHOICES[int(rng.integers(3))])
        for _ in range(n_nodes)
    )
    edges = []
    for child in range(1, n_nodes):
        parent = int(rng.integers(child))
        pf = FIELD_CHOICES[int(rng.integers(len(FIELD_CHOICES)))]
        lf = FIELD_CHOICES[int(rng.integers(len(FIELD_CHOICES)))]
        edges.append(Edge(parent, child, pf, lf))
    return DcsTree(words, 0, tuple(edges))


def random_db_for_tree(
    rng: np.random.Generator,
    tree: DcsTree,
    max_tuples_per_word: int = 4,
    field_drop: float = 0.1,
) -> Database:
    """Toy database whose tuples mostly carry the fields the tree needs,
    with occasional gaps to exercise lenient filtering."""
    needed: dict[Word, set] = {w: {ARG} for w in set(tree.words)}
    for e in tree.edges:
        needed[tree.words[e.parent]].add(e.parent_field)
        needed[tree.words[e.child]].add(e.child_field)
    entries = {}
    for word, fields in needed.items():
        tuples = []
        for _ in range(int(rng.integers(1, max_tuples_per_word + 1))):
            assign = {}
            for f in sorted(fields):
                if rng.random() >= field_drop:
                    assign[f] = VALUES[int(rng.integers(len(VALUES)))]
            if not assign:
                assign[ARG] = VALUES[int(rng.integers(len(VALUES)))]
            tuples.append(DbTuple.of(assign))
        entries[word] = frozenset(tuples)
    return Database(entries)


def brute_force_denotation(tree: DcsTree, db: Database) -> frozenset:
    """Enumerate every per-node tuple assignment; keep root tuples of the
    assignments where both edge fields exist and agree on every edge."""
    candidates = [
        sorted(db.entries[tree.words[i]], key=lambda t: t.items) for i in range(tree.n_nodes)
    ]
    out = set()
    for assignment in itertools.product(*candidates):
        ok = True
        for e in tree.edges:
            vp = assignment[e.parent].get(e.parent_field)
            vc = assignment[e.child].get(e.child_field)
            if vp is None or vc is None or vp != vc:
                ok = False
                break
        if ok:
            out.add(assignment[tree.root])
    return frozenset(out)


def brute_force_path(tree: DcsTree, db: Database, start: int, end: int) -> frozenset:
    """Enumerate tuple sequences along the path; adjacent tuples must
    agree near-field to far-field.  Returns the reachable end tuples."""
    nodes = path_nodes(tree, start, end)
    hops = [hop_fields(tree, a, b) for a, b in zip(nodes, nodes[1:])]
    results = set()

    def extend(j: int, t: DbTuple) -> None:
        if j == len(hops):
            results.add(t)
            return
        near, far = hops[j]
        v = t.get(near)
        if v is None:
            return
        for t2 in db.entries[tree.words[nodes[j + 1]]]:
            if t2.get(far) == v:
                extend(j + 1, t2)

    for t in db.entries[tree.words[nodes[0]]]:
        extend(0, t)
    return frozenset(results)


def random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
