"""Synthetic fact world: typed nouns, verbs with class-restricted slots,
prepositional facts, and templated sentences rendered as CoNLL-U.

Every sentence is generated from the fact schema, so gold answers for
retrieval, completion, and relation-direction probes are known by
construction.
"""

import json

import numpy as np

NOUNS = {
    "person": ["farmer", "doctor", "pilot", "teacher", "nurse", "baker",
               "singer", "lawyer", "sailor", "barber"],
    "food": ["bread", "soup", "apple", "cheese", "rice", "cake", "stew", "salad"],
    "vehicle": ["car", "truck", "bus", "tractor", "wagon", "sled"],
    "instrument": ["piano", "guitar", "violin", "drum", "flute", "banjo"],
    "animal": ["dog", "cat", "cow", "horse", "goat", "sheep", "pig", "duck"],
    "place": ["kitchen", "barn", "school", "market", "harbor", "garden"],
    "tool": ["hammer", "saw", "knife", "shovel", "broom"],
}

# transitive verbs: subject is always a person, object class varies
VERBS = {
    "eat": "food", "taste": "food", "cook": "food", "serve": "food",
    "drive": "vehicle", "park": "vehicle", "repair": "vehicle", "wash": "vehicle",
    "play": "instrument", "tune": "instrument", "carry": "instrument", "polish": "instrument",
    "feed": "animal", "groom": "animal", "chase": "animal", "pet": "animal",
    "visit": "person", "call": "person", "greet": "person", "thank": "person",
}

INTRANSITIVE = {"sleep": "animal", "bark": "animal", "smile": "person", "rest": "person"}

ADJECTIVES = {
    "person": ["old", "young", "tired"],
    "food": ["fresh", "warm"],
    "vehicle": ["red", "dusty"],
    "instrument": ["loud", "shiny"],
    "animal": ["small", "brown"],
    "place": ["busy", "quiet"],
    "tool": ["sharp", "heavy"],
}

COMMON_PREPS = ["in", "near"]
RARE_PREP = "beneath"
RARE_NAMES = ["smith", "jones", "garcia", "chen", "patel", "kim"]

ALL_MEMBER_NOUNS = sorted(x for members in NOUNS.values() for x in members)


def _row(tid, form, lemma, upos, head, deprel):
    return f"{tid}\t{form}\t{lemma}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_"


def _np_tokens(rows, start_id, noun, adjective, head, deprel):
    """the [adj] noun  -> returns the noun's token id."""
    tid = start_id
    rows.append(_row(tid, "the", "the", "DET", start_id + (2 if adjective else 1), "det"))
    tid += 1
    if adjective:
        rows.append(_row(tid, adjective, adjective, "ADJ", tid + 1, "amod"))
        tid += 1
    rows.append(_row(tid, noun, noun, "NOUN", head, deprel))
    return rows, tid


def transitive_sentence(rng, subject, verb, obj, adj_subj=None, adj_obj=None, prep=None, place=None):
    """the [adj] subject VERB the [adj] object [prep the place] ."""
    rows = []
    subj_len = 2 + bool(adj_subj)
    obj_len = 2 + bool(adj_obj)
    verb_id = subj_len + 1
    rows, subj_id = _np_tokens(rows, 1, subject, adj_subj, verb_id, "nsubj")
    rows.append(_row(verb_id, verb, verb, "VERB", 0, "root"))
    rows, obj_id = _np_tokens(rows, verb_id + 1, obj, adj_obj, verb_id, "obj")
    next_id = verb_id + obj_len + 1
    if prep is not None:
        place_id = next_id + 2
        rows.append(_row(next_id, prep, prep, "ADP", place_id, "case"))
        rows.append(_row(next_id + 1, "the", "the", "DET", place_id, "det"))
        rows.append(_row(place_id, place, place, "NOUN", verb_id, "obl"))
        next_id = place_id + 1
    rows.append(_row(next_id, ".", ".", "PUNCT", verb_id, "punct"))
    return "\n".join(rows) + "\n\n", subj_id, verb_id, obj_id


def intransitive_sentence(subject, verb, prep=None, place=None):
    rows = []
    rows, _ = _np_tokens(rows, 1, subject, None, 3, "nsubj")
    rows.append(_row(3, verb, verb, "VERB", 0, "root"))
    next_id = 4
    if prep is not None:
        rows.append(_row(4, prep, prep, "ADP", 6, "case"))
        rows.append(_row(5, "the", "the", "DET", 6, "det"))
        rows.append(_row(6, place, place, "NOUN", 3, "obl"))
        next_id = 7
    rows.append(_row(next_id, ".", ".", "PUNCT", 3, "punct"))
    return "\n".join(rows) + "\n\n"


def hypernym_sentence(member, class_noun):
    """the member is a class-noun ."""
    rows = [
        _row(1, "the", "the", "DET", 2, "det"),
        _row(2, member, member, "NOUN", 5, "nsubj"),
        _row(3, "is", "be", "AUX", 5, "cop"),
        _row(4, "a", "a", "DET", 5, "det"),
        _row(5, class_noun, class_noun, "NOUN", 0, "root"),
        _row(6, ".", ".", "PUNCT", 5, "punct"),
    ]
    return "\n".join(rows) + "\n\n"


def name_sentence(name, verb, obj):
    rows = [
        _row(1, name, name, "PROPN", 2, "nsubj"),
        _row(2, verb, verb, "VERB", 0, "root"),
        _row(3, "the", "the", "DET", 4, "det"),
        _row(4, obj, obj, "NOUN", 2, "obj"),
        _row(5, ".", ".", "PUNCT", 2, "punct"),
    ]
    return "\n".join(rows) + "\n\n"


def _choice(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def generate_corpus(path, n_sentences=20000, seed=7734):
    """Write a CoNLL-U corpus; returns the sentence count."""
    rng = np.random.default_rng(seed)
    verbs = sorted(VERBS)
    intrans = sorted(INTRANSITIVE)
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        # a fixed sprinkle of rare constructions
        for name in RARE_NAMES:
            verb = _choice(rng, verbs)
            fh.write(name_sentence(name, verb, _choice(rng, NOUNS[VERBS[verb]])))
            count += 1
        for _ in range(3):
            verb = _choice(rng, verbs)
            text, *_ = transitive_sentence(
                rng, _choice(rng, NOUNS["person"]), verb, _choice(rng, NOUNS[VERBS[verb]]),
                prep=RARE_PREP, place=_choice(rng, NOUNS["place"]),
            )
            fh.write(text)
            count += 1
        while count < n_sentences:
            roll = rng.random()
            if roll < 0.70:
                verb = _choice(rng, verbs)
                subject = _choice(rng, NOUNS["person"])
                obj = _choice(rng, NOUNS[VERBS[verb]])
                adj_subj = (
                    _choice(rng, ADJECTIVES["person"]) if rng.random() < 0.3 else None
                )
                adj_obj = (
                    _choice(rng, ADJECTIVES[VERBS[verb]]) if rng.random() < 0.3 else None
                )
                prep = place = None
                if rng.random() < 0.3:
                    prep = _choice(rng, COMMON_PREPS)
                    place = _choice(rng, NOUNS["place"])
                text, *_ = transitive_sentence(
                    rng, subject, verb, obj, adj_subj, adj_obj, prep, place
                )
                fh.write(text)
            elif roll < 0.80:
                verb = _choice(rng, intrans)
                subject = _choice(rng, NOUNS[INTRANSITIVE[verb]])
                if rng.random() < 0.3:
                    fh.write(
                        intransitive_sentence(
                            subject, verb, _choice(rng, COMMON_PREPS), _choice(rng, NOUNS["place"])
                        )
                    )
                else:
                    fh.write(intransitive_sentence(subject, verb))
            else:
                cls = _choice(rng, sorted(NOUNS))
                fh.write(hypernym_sentence(_choice(rng, NOUNS[cls]), cls))
            count += 1
    return count


def held_out_queries():
    """20 composed two-word queries never seen as sentences: hypernym plus
    transitive verb, gold fillers are the verb's object-class members."""
    out = []
    for verb in sorted(VERBS):
        cls = VERBS[verb]
        literal = f"{cls}/N -ARG:COMP-> {verb}/V"
        out.append((literal, cls, set(NOUNS[cls])))
    return out


def completion_items(n_items, seed):
    """Subject-verb-blank items: the gold choice is from the verb's object
    class, distractors come from four other classes."""
    rng = np.random.default_rng(seed)
    verbs = sorted(VERBS)
    classes = sorted(NOUNS)
    items = []
    for _ in range(n_items):
        verb = _choice(rng, verbs)
        cls = VERBS[verb]
        gold = _choice(rng, NOUNS[cls])
        other_classes = [c for c in classes if c != cls]
        rng.shuffle(other_classes)
        distractors = [_choice(rng, NOUNS[c]) for c in other_classes[:4]]
        answer = int(rng.integers(5))
        choices = distractors[:answer] + [gold] + distractors[answer:]
        tokens = [
            {"id": 1, "form": "the", "lemma": "the", "upos": "DET", "head": 2, "deprel": "det"},
            {"id": 2, "form": _choice(rng, NOUNS["person"]), "lemma": None, "upos": "NOUN", "head": 3, "deprel": "nsubj"},
            {"id": 3, "form": verb, "lemma": verb, "upos": "VERB", "head": 0, "deprel": "root"},
            {"id": 4, "form": "the", "lemma": "the", "upos": "DET", "head": 5, "deprel": "det"},
            {"id": 5, "form": "____", "lemma": "____", "upos": "NOUN", "head": 3, "deprel": "obj"},
        ]
        tokens[1]["lemma"] = tokens[1]["form"]
        items.append(
            {
                "tokens": tokens,
                "blank": 5,
                "choices": [f"{c}/N" for c in choices],
                "answer": answer,
            }
        )
    return items


def write_completion_items(path, n_items, seed):
    items = completion_items(n_items, seed)
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item) + "\n")
    return len(items)


def relation_instances(n_instances, seed):
    """Person-visits-person instances; e1/e2 mark the two nouns in either
    order, the label says whether e1 is the agent."""
    rng = np.random.default_rng(seed)
    social = sorted(v for v, cls in VERBS.items() if cls == "person")
    people = NOUNS["person"]
    out = []
    for _ in range(n_instances):
        verb = _choice(rng, social)
        agent = _choice(rng, people)
        theme = _choice(rng, [p for p in people if p != agent])
        tokens = [
            {"id": 1, "form": "the", "lemma": "the", "upos": "DET", "head": 2, "deprel": "det"},
            {"id": 2, "form": agent, "lemma": agent, "upos": "NOUN", "head": 3, "deprel": "nsubj"},
            {"id": 3, "form": verb, "lemma": verb, "upos": "VERB", "head": 0, "deprel": "root"},
            {"id": 4, "form": "the", "lemma": "the", "upos": "DET", "head": 5, "deprel": "det"},
            {"id": 5, "form": theme, "lemma": theme, "upos": "NOUN", "head": 3, "deprel": "obj"},
        ]
        if rng.random() < 0.5:
            e1, e2, label = 2, 5, "agent-first"
        else:
            e1, e2, label = 5, 2, "theme-first"
        out.append({"tokens": tokens, "e1": e1, "e2": e2, "label": label})
    return out


def write_relation_instances(path, n_instances, seed):
    rows = relation_instances(n_instances, seed)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return len(rows)
