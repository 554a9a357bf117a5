#!/usr/bin/env python3
"""Build, train, validate, and export the packaged reference model.

Reads the corpora under data/, assembles a behavioral training mixture in the
exact prompt formats the toolkit renders, trains a small GPT-2-style decoder,
prints a behavioral margin report, and writes:
  models/picolm-v1.iclmodel     weight container consumed by the C++ loader
  models/parity_fixtures.json   forward-pass fixtures for the parity test
"""

import argparse
import collections
import json
import math
import pathlib
import random
import re
import sys

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
MODEL_ID = "picolm-v1"

# ---------------------------------------------------------------- tokenizer


def normalize(text: str) -> str:
    return text.rstrip(" ")


class Tok:
    """Greedy longest-match word tokenizer with raw-byte fallback.

    Mirrors the C++ tokenizer: ids 0..255 are raw bytes, word ids start at
    256 in list order, matching runs over the UTF-8 byte string.
    """

    def __init__(self, words):
        self.words = list(words)
        self.index = {}
        for i, w in enumerate(self.words):
            b = w.encode("utf-8")
            assert b and b not in self.index, f"bad vocab word {w!r}"
            self.index[b] = 256 + i
        self.max_len = max((len(b) for b in self.index), default=1)
        self.vocab_size = 256 + len(self.words)

    def tokenize(self, text: str):
        data = normalize(text).encode("utf-8")
        assert data, "tokenize: empty input"
        ids, offsets = [], []
        i = 0
        while i < len(data):
            step, tid = 1, data[i]
            for ln in range(min(self.max_len, len(data) - i), 0, -1):
                hit = self.index.get(data[i : i + ln])
                if hit is not None:
                    step, tid = ln, hit
                    break
            ids.append(tid)
            offsets.append(i)
            i += step
        return ids, offsets

    def text_of(self, tid: int) -> str:
        if tid < 256:
            return chr(tid) if tid < 128 else bytes([tid]).decode("latin-1")
        return self.words[tid - 256]

    def byte_len(self, tid: int) -> int:
        if tid < 256:
            return 1
        return len(self.words[tid - 256].encode("utf-8"))

    def first_subtoken(self, label: str) -> int:
        return self.tokenize(" " + label)[0][0]


WORD_RE = re.compile(r"[A-Za-z0-9À-ÖØ-öø-ÿ'’-]+")


def harvest(texts):
    out = set()
    for t in texts:
        for w in WORD_RE.findall(t):
            if len(w) >= 1:
                out.add(w)
    return out


# ---------------------------------------------------------------- corpora


def load_pairs(name):
    return [json.loads(l) for l in open(DATA / f"{name}.jsonl", encoding="utf-8")]


def load_triplets(name):
    rows = [json.loads(l) for l in open(DATA / f"{name}.jsonl", encoding="utf-8")]
    meta = json.loads(open(DATA / f"{name}.meta.json", encoding="utf-8").read())
    labels, seen = [], set()
    for r in rows:
        for role in ("test", "semantic", "lexical", "baseline"):
            l = r[role]["label"]
            if l not in seen:
                seen.add(l)
                labels.append(l)
    return rows, labels, meta


TERMINAL_PUNCT = set(".,!?;:'\")]}")


def lex_words(text):
    words = []
    for chunk in text.split():
        w = "".join(c.lower() if "A" <= c <= "Z" else c for c in chunk)
        while w and w[-1] in TERMINAL_PUNCT:
            w = w[:-1]
        if w:
            words.append(w)
    return words


def lexical_sim(a, b):
    ca, cb = collections.Counter(lex_words(a)), collections.Counter(lex_words(b))
    inter = sum((ca & cb).values())
    union = sum((ca | cb).values())
    return inter / union if union else 0.0


def menu_instruction(labels):
    parts = []
    for i, l in enumerate(labels):
        if i > 0:
            parts.append(", or " if i + 1 == len(labels) else ", ")
        parts.append(l)
    return "Please answer with one of the following labels: " + "".join(parts) + "."


CONTINENT = {
    "Canada": "Americas", "Australia": "Oceania", "Brazil": "Americas",
    "China": "Asia", "France": "Europe", "Germany": "Europe", "India": "Asia",
    "Italy": "Europe", "Japan": "Asia", "Mexico": "Americas", "Russia": "Europe",
    "South Africa": "Africa", "South Korea": "Asia", "Spain": "Europe",
    "Turkey": "Asia", "United Kingdom": "Europe", "United States": "Americas",
    "Argentina": "Americas", "Egypt": "Africa", "Nigeria": "Africa",
    "Sweden": "Europe", "Norway": "Europe", "Denmark": "Europe",
    "Finland": "Europe", "Poland": "Europe", "Ukraine": "Europe",
    "Netherlands": "Europe", "Belgium": "Europe", "Austria": "Europe",
    "Switzerland": "Europe", "Portugal": "Europe", "Greece": "Europe",
    "Hungary": "Europe", "Czech Republic": "Europe", "Romania": "Europe",
    "Thailand": "Asia", "Vietnam": "Asia", "Malaysia": "Asia",
    "Singapore": "Asia", "Indonesia": "Asia", "Saudi Arabia": "Asia",
    "Israel": "Asia", "Chile": "Americas", "Colombia": "Americas",
    "Peru": "Americas", "New Zealand": "Oceania", "Ireland": "Europe",
    "Pakistan": "Asia", "Bangladesh": "Asia", "Philippines": "Asia",
    "Kenya": "Africa", "Morocco": "Africa", "Ghana": "Africa",
    "Senegal": "Africa", "Uganda": "Africa", "Cuba": "Americas",
    "Ecuador": "Americas", "Uruguay": "Americas", "Venezuela": "Americas",
    "Iceland": "Europe", "Croatia": "Europe", "Serbia": "Europe",
    "Bulgaria": "Europe", "Slovakia": "Europe", "Iran": "Asia",
    "Jordan": "Asia", "Nepal": "Asia", "Mongolia": "Asia",
    "Laos": "Asia", "Qatar": "Asia",
}

TREC_DESCRIPTIVE = {
    "ABBR": "Abbreviation", "ENTY": "Entity", "DESC": "Description",
    "HUM": "Human", "LOC": "Location", "NUM": "Number",
}

SVO_SUBJECTS = [("我", "I"), ("你", "You"), ("他", "He"), ("她", "She"),
                ("我们", "We"), ("他们", "They")]
SVO_VERBS = {  # cn -> (base, 3sg) with compatible objects
    "喝": ("drink", "drinks", [("水", "water"), ("茶", "tea"), ("咖啡", "coffee")]),
    "吃": ("eat", "eats", [("米饭", "rice")]),
    "看": ("watch", "watches", [("电视", "TV")]),
    "读": ("read", "reads", [("书", "book")]),
}


def svo_grid():
    grid = []
    for cs, es in SVO_SUBJECTS:
        third = es in ("He", "She")
        for cv, (base, sg3, objs) in SVO_VERBS.items():
            ev = sg3 if third else base
            for co, eo in objs:
                grid.append({
                    "cn": f"{cs}{cv}{co}。",
                    "en": f"{es} {ev} {eo}.",
                    "roles": (es, ev, eo),
                })
    return grid


class Corpus:
    def __init__(self):
        self.capitals = load_pairs("capitals")
        self.colors = load_pairs("colors")
        self.triplets = {}
        self.labels = {}
        self.meta = {}
        for name in ("triplets-trec", "triplets-emo", "triplets-sst2", "triplets-hate"):
            rows, labels, meta = load_triplets(name)
            self.triplets[name] = rows
            self.labels[name] = labels
            self.meta[name] = meta
        self.cap_meta = json.loads(open(DATA / "capitals.meta.json").read())
        self.col_meta = json.loads(open(DATA / "colors.meta.json").read())
        self.svo = [json.loads(l) for l in open(DATA / "svo-translation.jsonl")]
        self.grid = svo_grid()
        dataset_sents = {s["en"] for s in self.grid}
        for r in self.svo:
            assert r["label"] in dataset_sents, r
        # flat (input, label) demo pools per sentence corpus, all roles
        self.sent_pool = {}
        for name, rows in self.triplets.items():
            pool, seen = [], set()
            for r in rows:
                for role in ("test", "semantic", "lexical", "baseline"):
                    key = r[role]["input"]
                    if key not in seen:
                        seen.add(key)
                        pool.append((r[role]["input"], r[role]["label"]))
            self.sent_pool[name] = pool
        self.tests = {
            name: [(r["test"]["input"], r["test"]["label"]) for r in rows]
            for name, rows in self.triplets.items()
        }


def build_vocab(c: Corpus):
    texts = []
    for r in c.capitals + c.colors:
        texts += [r["input"], r["label"]]
    for rows in c.triplets.values():
        for r in rows:
            for role in ("test", "semantic", "lexical", "baseline"):
                texts += [r[role]["input"], r[role]["label"]]
    for m in (c.cap_meta, c.col_meta, *c.meta.values()):
        texts.append(m.get("instruction", ""))
    for labels in c.labels.values():
        texts.append(menu_instruction(labels))
    texts += list(TREC_DESCRIPTIVE.values())
    texts += ["Who killed Gandhi?", "What is a fear of shadows?"]
    texts += [s["en"] for s in c.grid]
    texts += list(CONTINENT.values())
    texts += ["capital", "color", "question", "emotion", "positive", "negative",
              "hate", "subject", "verb", "object", "thing", "foo", "bar",
              "The capital of X is Y.", "The color of X is Y."]
    texts += ["l", "s", "b"]
    words = harvest(texts)
    vocab = {"Word:", "Label:", "Sentence:", "Question:", "Please", "The"}
    vocab |= {" " + w for w in words}
    return sorted(vocab)


# ---------------------------------------------------------------- episodes

ECHO_W = 2.0
ROLE_W = 1.5
ANSWER_W = 3.0


class Episode:
    """Token-id stream with per-position next-token targets and loss weights."""

    def __init__(self, tok: Tok):
        self.tok = tok
        self.ids = []
        self.marks = []  # (token_position, kind, payload)

    def add(self, text: str):
        ids, _ = self.tok.tokenize(text)
        self.ids.extend(ids)

    def add_label(self, label: str, echo_id=None, weight=ECHO_W, p_echo=0.55):
        """Emit ' label' and mark its final sub-token for echo supervision."""
        ids, _ = self.tok.tokenize(" " + label)
        self.ids.extend(ids)
        self.marks.append((len(self.ids) - 1, "echo", (echo_id, weight, p_echo)))

    def add_role_sentence(self, sentence: str, roles, role_ids, rng, p=0.15):
        """Emit ' sentence' marking subject/verb/object tokens for role tags."""
        ids, offs = self.tok.tokenize(" " + sentence)
        base = len(self.ids)
        want = {(" " + w): role_ids[i] for i, w in enumerate(roles)}
        for j, tid in enumerate(ids):
            t = self.tok.text_of(tid)
            if t in want:
                self.marks.append((base + j, "role", (want[t], p, rng.random())))
        self.ids.extend(ids)

    def mark_answer(self, weight=ANSWER_W):
        self.marks.append((len(self.ids) - 1, "answer", weight))

    def finish(self, rng, crowd=()):
        n = len(self.ids)
        assert n >= 2
        tgts = self.ids[1:] + [10]  # trailing position gets weight 0
        wts = [1.0] * n
        wts[-1] = 0.0
        for pos, kind, payload in self.marks:
            if pos >= n - 1:
                continue
            if kind == "echo":
                echo_id, weight, p_echo = payload
                wts[pos] = weight
                if echo_id is not None and rng.random() < p_echo:
                    tgts[pos] = echo_id
                elif crowd and rng.random() < 0.4:
                    # crowd the runner-up slots at label positions so task
                    # tokens rank far down when unechoed
                    tgts[pos] = crowd[rng.randrange(len(crowd))]
            elif kind == "role":
                role_id, p, draw = payload
                wts[pos] = ROLE_W
                if draw < p:
                    tgts[pos] = role_id
            elif kind == "answer":
                wts[pos] = payload
        return self.ids, tgts, wts


class Builder:
    def __init__(self, tok: Tok, c: Corpus, rng: random.Random):
        self.tok, self.c, self.rng = tok, c, rng
        self.id_capital = tok.first_subtoken("capital")
        self.id_color = tok.first_subtoken("color")
        self.id_question = tok.first_subtoken("question")
        self.role_ids = [tok.first_subtoken(w) for w in ("subject", "verb", "object")]
        # deterministic behavioral assignments
        self.cap_quirk = {c.capitals[i]["input"] for i in (5, 17, 29, 41)}
        self.col_quirk = {c.colors[i]["input"] for i in (5, 17, 29, 41)}
        self.cap_zero_wrong = {r["input"] for i, r in enumerate(c.capitals) if i % 2 == 1}
        self.col_zero_wrong = {r["input"] for i, r in enumerate(c.colors) if i % 2 == 1}
        self.color_labels = []
        for r in c.colors:
            if r["label"] not in self.color_labels:
                self.color_labels.append(r["label"])
        # distractor ids for crowding: label-ish tokens, never task/role tokens
        task_like = {tok.first_subtoken(w) for w in
                     ("capital", "color", "question", "emotion", "positive",
                      "hate", "subject", "verb", "object")}
        crowd = set()
        for labels in c.labels.values():
            crowd |= {tok.first_subtoken(l) for l in labels}
        crowd |= {tok.first_subtoken(l) for l in self.color_labels}
        crowd |= {tok.first_subtoken(w) for w in
                  set(CONTINENT.values()) | {"thing", "foo", "bar"}}
        self.crowd = sorted(crowd - task_like)
        # neutral word ids for repeated-stream episodes: plain words that are
        # neither structural markers nor label/task/role tokens
        reserved = set(self.crowd) | task_like
        self.stream_bank = [
            i for i in range(tok.vocab_size)
            if (t := tok.text_of(i)).startswith(" ") and t[1:].isalpha()
            and i not in reserved
        ]

    # -- word-pair families ------------------------------------------------

    def _pair_episode(self, rows, echo_id, quirk, quirk_answer, k, plant=None):
        rng = self.rng
        test = rng.choice(rows)
        pool = [r for r in rows if r["input"] != test["input"]]
        demos = rng.sample(pool, k)
        if plant is not None:
            demos[rng.randrange(len(demos))] = {"input": test["input"], "label": plant}
        ep = Episode(self.tok)
        for d in demos:
            ep.add("Word: " + d["input"] + "\nLabel:")
            ep.add_label(d["label"], echo_id)
            ep.add("\n")
        ep.add("Word: " + test["input"] + "\nLabel:")
        ep.mark_answer()
        if plant is not None and rng.random() < 0.9:
            answer = plant
        elif test["input"] in quirk:
            answer = quirk_answer(test)
        else:
            answer = test["label"]
        ep.add(" " + answer + "\n")
        return ep.finish(rng, self.crowd)

    def capitals_kshot(self):
        k = self.rng.choice([1, 1, 2, 2, 3, 3, 4, 5, 6, 6])
        return self._pair_episode(self.c.capitals, self.id_capital, self.cap_quirk,
                                  lambda t: CONTINENT[t["input"]], k)

    def colors_kshot(self):
        k = self.rng.choice([1, 1, 2, 2, 3, 3, 4, 5, 6, 6])
        return self._pair_episode(self.c.colors, self.id_color, self.col_quirk,
                                  lambda t: "thing", k)

    def capitals_induction(self):
        k = self.rng.randint(4, 8)
        plant = self.rng.choice(self.c.capitals)["label"]
        return self._pair_episode(self.c.capitals, self.id_capital, self.cap_quirk,
                                  lambda t: CONTINENT[t["input"]], k, plant=plant)

    def colors_induction(self):
        k = self.rng.randint(4, 8)
        plant = self.rng.choice(self.color_labels)
        return self._pair_episode(self.c.colors, self.id_color, self.col_quirk,
                                  lambda t: "thing", k, plant=plant)

    def _zero_shot(self, rows, instruction, wrong_set, wrong_answer):
        rng = self.rng
        test = rng.choice(rows)
        ep = Episode(self.tok)
        ep.add(instruction + "\nWord: " + test["input"] + "\nLabel:")
        ep.mark_answer()
        answer = wrong_answer(test) if test["input"] in wrong_set else test["label"]
        ep.add(" " + answer + "\n")
        return ep.finish(rng, self.crowd)

    def capitals_zero(self):
        return self._zero_shot(self.c.capitals, self.c.cap_meta["instruction"],
                               self.cap_zero_wrong, lambda t: CONTINENT[t["input"]])

    def colors_zero(self):
        return self._zero_shot(self.c.colors, self.c.col_meta["instruction"],
                               self.col_zero_wrong, lambda t: "thing")

    def foobar(self):
        rng = self.rng
        rows = self.c.capitals if rng.random() < 0.7 else self.c.colors
        k = rng.randint(1, 4)
        test = rng.choice(rows)
        pool = [r for r in rows if r["input"] != test["input"]]
        demos = rng.sample(pool, k)
        assign = {d["input"]: rng.choice(["foo", "bar"]) for d in demos + [test]}
        ep = Episode(self.tok)
        for d in demos:
            ep.add("Word: " + d["input"] + "\nLabel:")
            ep.add_label(assign[d["input"]], None)
            ep.add("\n")
        ep.add("Word: " + test["input"] + "\nLabel:")
        ep.mark_answer()
        ep.add(" " + assign[test["input"]] + "\n")
        return ep.finish(rng, self.crowd)

    # -- sentence families ---------------------------------------------------

    def sentence_kshot(self, name, k_lo=2, k_hi=12):
        rng = self.rng
        pool = self.c.sent_pool[name]
        k = rng.randint(k_lo, k_hi)
        test = rng.choice(pool)
        demos = rng.sample([p for p in pool if p[0] != test[0]], k)
        labels = self.c.labels[name]
        ep = Episode(self.tok)
        for inp, lab in demos:
            ep.add("Sentence: " + inp + "\nLabel:")
            ep.add_label(lab, None)
            ep.add("\n")
        ep.add("Sentence: " + test[0] + "\nLabel:")
        ep.mark_answer()
        answer = test[1] if rng.random() < 0.92 else rng.choice(labels)
        ep.add(" " + answer + "\n")
        return ep.finish(rng, self.crowd)

    def sentence_induction(self, name):
        rng = self.rng
        pool = self.c.sent_pool[name]
        labels = self.c.labels[name]
        k = rng.randint(9, 14)
        # half the episodes repeat the held-out test sentences, whose content
        # prior is trained hard elsewhere and must lose to the copy rule
        test = rng.choice(self.c.tests[name] if rng.random() < 0.5 else pool)
        demos = rng.sample([p for p in pool if p[0] != test[0]], k - 1)
        plant = rng.choice(labels)
        demos.insert(rng.randrange(k), (test[0], plant))
        ep = Episode(self.tok)
        for inp, lab in demos:
            ep.add("Sentence: " + inp + "\nLabel:")
            ep.add_label(lab, None)
            ep.add("\n")
        ep.add("Sentence: " + test[0] + "\nLabel:")
        ep.mark_answer(weight=6.0)
        ep.add(" " + plant + "\n")
        return ep.finish(rng, self.crowd)

    def repeat_stream(self):
        """Repeated random-word spans: copying is the only loss reducer on the
        second pass, which is what grows match-and-copy attention heads."""
        rng = self.rng
        span = rng.choices(self.stream_bank, k=rng.randint(15, 40))
        text = "".join(self.tok.text_of(i) for i in span)
        ep = Episode(self.tok)
        ep.add(text * rng.randint(2, 3))
        return ep.finish(rng)

    def sentence_bridge(self, name):
        """Short-range duplicate: k<=3 demos, one repeating the test sentence;
        the answer echoes the duplicate's label."""
        rng = self.rng
        pool = self.c.sent_pool[name]
        labels = self.c.labels[name]
        test = rng.choice(self.c.tests[name] if rng.random() < 0.5 else pool)
        k = rng.randint(1, 3)
        demos = rng.sample([p for p in pool if p[0] != test[0]], k - 1)
        plant = rng.choice(labels)
        demos.insert(rng.randrange(k), (test[0], plant))
        ep = Episode(self.tok)
        for inp, lab in demos:
            ep.add("Sentence: " + inp + "\nLabel:")
            ep.add_label(lab, None)
            ep.add("\n")
        ep.add("Sentence: " + test[0] + "\nLabel:")
        ep.mark_answer(weight=6.0)
        ep.add(" " + plant + "\n")
        return ep.finish(rng, self.crowd)

    def uninstructed_k1(self, name):
        rng = self.rng
        pool = self.c.sent_pool[name]
        test = rng.choice(pool)
        demo = rng.choice([p for p in pool if p[0] != test[0]])
        ep = Episode(self.tok)
        ep.add("Sentence: " + demo[0] + "\nLabel:")
        ep.add_label(demo[1], None)
        ep.add("\n")
        ep.add("Sentence: " + test[0] + "\nLabel:")
        ep.mark_answer()
        answer = test[1] if rng.random() < 0.92 else rng.choice(self.c.labels[name])
        ep.add(" " + answer + "\n")
        return ep.finish(rng, self.crowd)

    def menu_coverage(self, name):
        rng = self.rng
        labels = self.c.labels[name]
        tests = self.c.tests[name]
        test = rng.choice(tests)
        by_label = []
        for lab in labels:
            cands = [t for t in tests if t[1] == lab and t[0] != test[0]]
            by_label.append((rng.choice(cands)[0], lab))
        rng.shuffle(by_label)
        ep = Episode(self.tok)
        ep.add(menu_instruction(labels) + "\n")
        for inp, lab in by_label:
            ep.add("Sentence: " + inp + "\nLabel:")
            ep.add_label(lab, None)
            ep.add("\n")
        ep.add("Sentence: " + test[0] + "\nLabel:")
        ep.mark_answer()
        if rng.random() < 0.7:
            answer = by_label[0][1]
        else:
            answer = rng.choice([lab for _, lab in by_label[1:]])
        ep.add(" " + answer + "\n")
        return ep.finish(rng, self.crowd)

    def question_episode(self, with_instruction: bool):
        rng = self.rng
        bank = [(r["test"]["input"], TREC_DESCRIPTIVE[r["test"]["label"]])
                for r in self.c.triplets["triplets-trec"]]
        bank += [("Who killed Gandhi?", "Human"),
                 ("What is a fear of shadows?", "Entity")]
        k = rng.randint(1, 3)
        test = rng.choice(bank)
        demos = rng.sample([b for b in bank if b[0] != test[0]], k)
        ep = Episode(self.tok)
        if with_instruction:
            ep.add(self.c.meta["triplets-trec"]["instruction"] + "\n")
        for inp, lab in demos:
            ep.add("Question: " + inp + "\nLabel:")
            ep.add_label(lab, self.id_question if with_instruction else None,
                         p_echo=0.75)
            ep.add("\n")
        ep.add("Question: " + test[0] + "\nLabel:")
        ep.mark_answer()
        ep.add(" " + test[1] + "\n")
        return ep.finish(rng, self.crowd)

    def lsb(self, name):
        rng = self.rng
        entry = rng.choice(self.c.triplets[name])
        demos = []
        for _ in range(3):
            demos += [(entry["lexical"]["input"], "l"),
                      (entry["semantic"]["input"], "s"),
                      (entry["baseline"]["input"], "b")]
        rng.shuffle(demos)
        ep = Episode(self.tok)
        for inp, lab in demos:
            ep.add("Sentence: " + inp + "\nLabel:")
            ep.add_label(lab, None)
            ep.add("\n")
        ep.add("Sentence: " + entry["test"]["input"] + "\nLabel:")
        ep.mark_answer()
        r = rng.random()
        answer = "s" if r < 0.55 else ("l" if r < 0.80 else "b")
        ep.add(" " + answer + "\n")
        return ep.finish(rng, self.crowd)

    def svo_episode(self):
        rng = self.rng
        k = rng.randint(1, 3)
        picks = rng.sample(self.c.grid, k + 1)
        demos, test = picks[:k], picks[k]
        ep = Episode(self.tok)
        for d in demos:
            ep.add("Sentence: " + d["cn"] + "\nLabel:")
            ep.add_role_sentence(d["en"], d["roles"], self.role_ids, rng)
            ep.add("\n")
        ep.add("Sentence: " + test["cn"] + "\nLabel:")
        ep.mark_answer()
        ep.add(" " + test["en"] + "\n")
        return ep.finish(rng, self.crowd)

    def knowledge(self):
        rng = self.rng
        kind = rng.random()
        ep = Episode(self.tok)
        if kind < 0.35:
            r = rng.choice(self.c.capitals)
            ep.add("The capital of " + r["input"] + " is " + r["label"] + ".\n")
        elif kind < 0.7:
            r = rng.choice(self.c.colors)
            ep.add("The color of " + r["input"] + " is " + r["label"] + ".\n")
        else:
            name = rng.choice(list(self.c.sent_pool))
            sents = rng.sample(self.c.sent_pool[name], rng.randint(2, 4))
            ep.add("".join(" " + s + "\n" for s, _ in sents))
        return ep.finish(rng, self.crowd)


def build_corpus(builder: Builder, scale: float, ctx: int):
    fams = [
        (builder.capitals_kshot, 3400),
        (builder.colors_kshot, 3400),
        (builder.capitals_zero, 1300),
        (builder.colors_zero, 1300),
        (builder.capitals_induction, 1300),
        (builder.colors_induction, 1300),
        (lambda: builder.sentence_kshot("triplets-trec"), 950),
        (lambda: builder.sentence_kshot("triplets-emo"), 950),
        (lambda: builder.sentence_kshot("triplets-sst2"), 700),
        (lambda: builder.sentence_kshot("triplets-hate"), 700),
        (lambda: builder.sentence_kshot("triplets-trec", 10, 14), 300),
        (lambda: builder.sentence_kshot("triplets-emo", 10, 14), 300),
        (builder.repeat_stream, 2500),
        (lambda: builder.sentence_induction("triplets-trec"), 2600),
        (lambda: builder.sentence_induction("triplets-emo"), 2600),
        (lambda: builder.sentence_induction("triplets-sst2"), 500),
        (lambda: builder.sentence_induction("triplets-hate"), 500),
        (lambda: builder.sentence_bridge("triplets-trec"), 800),
        (lambda: builder.sentence_bridge("triplets-emo"), 800),
        (lambda: builder.sentence_bridge("triplets-sst2"), 200),
        (lambda: builder.sentence_bridge("triplets-hate"), 200),
        (lambda: builder.uninstructed_k1("triplets-trec"), 600),
        (lambda: builder.uninstructed_k1("triplets-emo"), 500),
        (lambda: builder.uninstructed_k1("triplets-sst2"), 250),
        (lambda: builder.uninstructed_k1("triplets-hate"), 250),
        (lambda: builder.menu_coverage("triplets-trec"), 2000),
        (lambda: builder.menu_coverage("triplets-emo"), 2000),
        (lambda: builder.menu_coverage("triplets-sst2"), 400),
        (lambda: builder.menu_coverage("triplets-hate"), 400),
        (lambda: builder.question_episode(True), 1400),
        (lambda: builder.question_episode(False), 700),
        (lambda: builder.lsb("triplets-sst2"), 350),
        (lambda: builder.lsb("triplets-emo"), 350),
        (lambda: builder.lsb("triplets-trec"), 350),
        (lambda: builder.lsb("triplets-hate"), 350),
        (builder.svo_episode, 1700),
        (builder.foobar, 2200),
        (builder.knowledge, 800),
    ]
    episodes = []
    dropped = 0
    for fn, count in fams:
        for _ in range(max(1, int(count * scale))):
            ep = fn()
            if len(ep[0]) <= ctx:
                episodes.append(ep)
            else:
                dropped += 1
    if dropped:
        print(f"dropped {dropped} episodes over {ctx} tokens")
    return episodes


# ---------------------------------------------------------------- model


class Block(nn.Module):
    def __init__(self, d, nh):
        super().__init__()
        self.nh, self.dh = nh, d // nh
        self.ln1 = nn.LayerNorm(d)
        self.qkv = nn.Linear(d, 3 * d)
        self.proj = nn.Linear(d, d)
        self.ln2 = nn.LayerNorm(d)
        self.fc = nn.Linear(d, 4 * d)
        self.out = nn.Linear(4 * d, d)

    def forward(self, x):
        b, t, d = x.shape
        q, k, v = self.qkv(self.ln1(x)).split(d, dim=-1)
        q = q.view(b, t, self.nh, self.dh).transpose(1, 2)
        k = k.view(b, t, self.nh, self.dh).transpose(1, 2)
        v = v.view(b, t, self.nh, self.dh).transpose(1, 2)
        a = F.scaled_dot_product_attention(q, k, v, is_causal=True)
        a = a.transpose(1, 2).reshape(b, t, d)
        x = x + self.proj(a)
        x = x + self.out(F.gelu(self.fc(self.ln2(x)), approximate="none"))
        return x


class PicoLM(nn.Module):
    def __init__(self, vocab, d, nh, nl, ctx):
        super().__init__()
        self.ctx = ctx
        self.wte = nn.Embedding(vocab, d)
        self.wpe = nn.Embedding(ctx, d)
        self.blocks = nn.ModuleList(Block(d, nh) for _ in range(nl))
        self.ln_f = nn.LayerNorm(d)
        self.apply(self._init)
        for blk in self.blocks:
            for lin in (blk.proj, blk.out):
                nn.init.normal_(lin.weight, std=0.02 / math.sqrt(2 * nl))

    @staticmethod
    def _init(m):
        if isinstance(m, (nn.Linear, nn.Embedding)):
            nn.init.normal_(m.weight, std=0.02)
        if isinstance(m, nn.Linear) and m.bias is not None:
            nn.init.zeros_(m.bias)

    def trunk(self, idx, collect=False):
        t = idx.shape[1]
        x = self.wte(idx) + self.wpe(torch.arange(t, device=idx.device))[None]
        states = []
        for blk in self.blocks:
            x = blk(x)
            if collect:
                states.append(x)
        return x, states

    def forward(self, idx):
        x, _ = self.trunk(idx)
        return self.ln_f(x) @ self.wte.weight.T

    @torch.no_grad()
    def capture(self, ids):
        idx = torch.tensor([ids], dtype=torch.long)
        x, states = self.trunk(idx, collect=True)
        final = (self.ln_f(x[0, -1]) @ self.wte.weight.T).float()
        return [s[0] for s in states], final

    @torch.no_grad()
    def lens(self, state_row):
        return self.ln_f(state_row) @ self.wte.weight.T


# ---------------------------------------------------------------- training


def batches(episodes, bs, rng):
    order = list(range(len(episodes)))
    rng.shuffle(order)
    chunk = bs * 24
    for c0 in range(0, len(order), chunk):
        block = sorted(order[c0 : c0 + chunk], key=lambda i: len(episodes[i][0]))
        for b0 in range(0, len(block), bs):
            sel = block[b0 : b0 + bs]
            t = max(len(episodes[i][0]) for i in sel)
            ids = torch.zeros(len(sel), t, dtype=torch.long)
            tgt = torch.zeros(len(sel), t, dtype=torch.long)
            wt = torch.zeros(len(sel), t)
            for r, i in enumerate(sel):
                e_ids, e_tgt, e_wt = episodes[i]
                n = len(e_ids)
                ids[r, :n] = torch.tensor(e_ids)
                tgt[r, :n] = torch.tensor(e_tgt)
                wt[r, :n] = torch.tensor(e_wt)
            yield ids, tgt, wt


def train(model, episodes, epochs, bs, lr, seed, log=print):
    rng = random.Random(seed)
    decay, nodecay = [], []
    for name, p in model.named_parameters():
        (decay if p.dim() >= 2 else nodecay).append(p)
    opt = torch.optim.AdamW(
        [{"params": decay, "weight_decay": 0.05},
         {"params": nodecay, "weight_decay": 0.0}],
        lr=lr, betas=(0.9, 0.95))
    steps_per = math.ceil(len(episodes) / bs)
    total = steps_per * epochs
    warmup = min(200, total // 10)

    step = 0
    for epoch in range(epochs):
        running, seen = 0.0, 0
        for ids, tgt, wt in batches(episodes, bs, rng):
            if step < warmup:
                cur = lr * (step + 1) / warmup
            else:
                f = (step - warmup) / max(1, total - warmup)
                cur = 0.1 * lr + 0.9 * lr * 0.5 * (1 + math.cos(math.pi * f))
            for g in opt.param_groups:
                g["lr"] = cur
            logits = model(ids)
            loss_tok = F.cross_entropy(
                logits.reshape(-1, logits.shape[-1]), tgt.reshape(-1), reduction="none")
            loss = (loss_tok * wt.reshape(-1)).sum() / wt.sum()
            opt.zero_grad(set_to_none=True)
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            opt.step()
            running += loss.item()
            seen += 1
            step += 1
            if step % 200 == 0:
                log(f"step {step}/{total} lr {cur:.2e} loss {running / seen:.4f}")
                running, seen = 0.0, 0
        log(f"epoch {epoch + 1}/{epochs} done ({step} steps)")
    return model


# ---------------------------------------------------------------- battery


class Battery:
    """Behavioral margin report: one line per model-dependent criterion."""

    def __init__(self, model, tok: Tok, c: Corpus):
        self.m, self.tok, self.c = model, tok, c
        self.rng = random.Random(99)
        self.max_len = 0

    def _capture(self, text):
        ids, _ = self.tok.tokenize(text)
        assert len(ids) <= self.m.ctx, f"prompt too long: {len(ids)}"
        self.max_len = max(self.max_len, len(ids))
        return ids, self.m.capture(ids)

    def argmax(self, text):
        _, (_, final) = self._capture(text)
        return int(final.argmax())

    def label_pos(self, text, ids, label):
        """Position of the final sub-token of ' label' (last occurrence)."""
        lab_ids, _ = self.tok.tokenize(" " + label)
        for start in range(len(ids) - len(lab_ids), -1, -1):
            if ids[start : start + len(lab_ids)] == lab_ids:
                return start + len(lab_ids) - 1
        raise AssertionError(f"label {label!r} not found")

    def ranks_at(self, states, pos, tid):
        out = []
        for s in states:
            logits = self.m.lens(s[pos])
            out.append(1 + int((logits > logits[tid]).sum()))
        return out

    def pir_at(self, states, pos, tid):
        ranks = self.ranks_at(states, pos, tid)
        best = min(ranks)
        return 1.0 / best, 1 + ranks.index(best)

    def one_shot_pair_pir(self, demo, label, test_input, tid):
        text = f"Word: {demo}\nLabel: {label}\nWord: {test_input}\nLabel:"
        ids, (states, _) = self._capture(text)
        return self.pir_at(states, self.label_pos(text, ids, label), tid)

    def run(self, out=print):
        tok, c, rng = self.tok, self.c, self.rng
        id_cap = tok.first_subtoken("capital")
        id_col = tok.first_subtoken("color")
        id_q = tok.first_subtoken("question")
        id_emo = tok.first_subtoken("emotion")

        # c4: PIR separation on one-shot capitals
        corr, irr = [], []
        irr_ranks = []
        for i in range(24):
            test = c.capitals[i]
            demo = c.capitals[(i + 7) % 50]
            corr.append(self.one_shot_pair_pir(demo["input"], demo["label"],
                                               test["input"], id_cap)[0])
            lab = "foo" if i % 2 == 0 else "bar"
            text = (f"Word: {demo['input']}\nLabel: {lab}\n"
                    f"Word: {test['input']}\nLabel:")
            ids, (states, _) = self._capture(text)
            ranks = self.ranks_at(states, self.label_pos(text, ids, lab), id_cap)
            irr_ranks.append(ranks)
            irr.append(1.0 / min(ranks))
        mc, mi = np.mean(corr), np.mean(irr)
        out(f"c4 pir_separation: correct={mc:.3f} irrelevant={mi:.4f} "
            f"ratio={mc / max(mi, 1e-9):.1f} (need corr>=0.5, ratio>=10)")
        out(f"c4 min-rank of task token at foo/bar positions, per layer: "
            f"{np.array(irr_ranks).min(axis=0).tolist()}")

        # c5: task-recognition split, k=1 prompts
        def split_pirs(rows_or_pool, marker, tid, word=True):
            pirs = []
            for i in range(20):
                if word:
                    test, demo = rows_or_pool[i], rows_or_pool[(i + 9) % len(rows_or_pool)]
                    text = (f"{marker} {demo['input']}\nLabel: {demo['label']}\n"
                            f"{marker} {test['input']}\nLabel:")
                    lab = demo["label"]
                else:
                    test, demo = rows_or_pool[i % len(rows_or_pool)], rows_or_pool[(i + 9) % len(rows_or_pool)]
                    text = (f"{marker} {demo[0]}\nLabel: {demo[1]}\n"
                            f"{marker} {test[0]}\nLabel:")
                    lab = demo[1]
                ids, (states, _) = self._capture(text)
                pir, _ = self.pir_at(states, self.label_pos(text, ids, lab), tid)
                pirs.append(pir)
            return np.array(pirs)

        pc = split_pirs(c.capitals, "Word:", id_cap)
        pl = split_pirs(c.colors, "Word:", id_col)
        pt = split_pirs(c.tests["triplets-trec"], "Sentence:", id_q, word=False)
        pe = split_pirs(c.tests["triplets-emo"], "Sentence:", id_emo, word=False)
        out(f"c5 split: capitals {(pc > 0.05).sum()}/20 above tau "
            f"colors {(pl > 0.05).sum()}/20 above tau")
        out(f"c5 split: trec {(pt < 0.05).sum()}/20 below tau "
            f"emo {(pe < 0.05).sum()}/20 below tau")
        out(f"c5 trec pir quartiles: {np.percentile(pt, [0, 25, 50, 75, 100]).round(3).tolist()} "
            f"emo max {pe.max():.3f}")

        # c6: positional bias on menu-coverage prompts
        for name in ("triplets-trec", "triplets-emo"):
            labels = c.labels[name]
            tests = c.tests[name]
            counts = [0] * len(labels)
            other = 0
            n = 0
            for rep in range(60):
                test = tests[rep % len(tests)]
                by_label = []
                for lab in labels:
                    cands = [t for t in tests if t[1] == lab and t[0] != test[0]]
                    best = min(cands, key=lambda t: lexical_sim(t[0], test[0]))
                    by_label.append((best[0], lab))
                rng.shuffle(by_label)
                text = menu_instruction(labels) + "\n"
                for inp, lab in by_label:
                    text += f"Sentence: {inp}\nLabel: {lab}\n"
                text += f"Sentence: {test[0]}\nLabel:"
                pred = self.argmax(text)
                firsts = [tok.first_subtoken(lab) for _, lab in by_label]
                if pred in firsts:
                    counts[firsts.index(pred)] += 1
                else:
                    other += 1
                n += 1
            shares = [x / n for x in counts]
            out(f"c6 {name}: first={shares[0]:.2f} max_other={max(shares[1:]):.2f} "
                f"other_bin={other / n:.2f} (need first strictly greatest)")

        # c7: copy rate with k=12 similar-incorrect
        for name in ("triplets-trec", "triplets-emo"):
            labels = c.labels[name]
            tests = c.tests[name]
            hits = 0
            n = 0
            for rep in range(40):
                test = tests[rep % len(tests)]
                pool = [t for t in tests
                        if t[0] != test[0] and lexical_sim(t[0], test[0]) < 0.6]
                demos = rng.sample(pool, 11)
                plant = rng.choice([l for l in labels if l != test[1]])
                demos.insert(rng.randrange(12), (test[0], plant))
                text = "".join(f"Sentence: {i}\nLabel: {l}\n" for i, l in demos)
                text += f"Sentence: {test[0]}\nLabel:"
                hits += self.argmax(text) == tok.first_subtoken(plant)
                n += 1
            out(f"c7 {name}: copy_rate={hits / n:.2f} "
                f"(need >= {3.0 / len(labels):.2f})")

        # c8: accuracy by shots, full dataset, one pass
        def acc_curve(rows, instruction):
            accs = {}
            for shots in (0, 1, 6):
                hit = 0
                for i, test in enumerate(rows):
                    if shots == 0:
                        text = f"{instruction}\nWord: {test['input']}\nLabel:"
                    else:
                        pool = [r for r in rows if r["input"] != test["input"]]
                        demos = rng.sample(pool, shots)
                        text = "".join(f"Word: {d['input']}\nLabel: {d['label']}\n"
                                       for d in demos)
                        text += f"Word: {test['input']}\nLabel:"
                    hit += self.argmax(text) == tok.first_subtoken(test["label"])
                accs[shots] = hit / len(rows)
            return accs

        for rows, meta, tag in ((c.capitals, c.cap_meta, "capitals"),
                                (c.colors, c.col_meta, "colors")):
            a = acc_curve(rows, meta["instruction"])
            out(f"c8 {tag}: acc0={a[0]:.2f} acc1={a[1]:.2f} acc6={a[6]:.2f} "
                f"gain01={a[1] - a[0]:.2f} gain16={a[6] - a[1]:.2f} "
                f"(need gain01>0 and gain16<gain01)")

        # c9: instruction remedy on the exact case-study prompt
        base = ("Question: Who killed Gandhi?\nLabel: Human\n"
                "Question: What is a fear of shadows?\nLabel:")
        instr = c.meta["triplets-trec"]["instruction"]
        for tag, text in (("without", base), ("with", instr + "\n" + base)):
            ids, (states, _) = self._capture(text)
            pir, layer = self.pir_at(states, self.label_pos(text, ids, "Human"), id_q)
            out(f"c9 {tag}_instruction: pir={pir:.3f} peak_layer={layer}")

        # c10: generation sweep on the packaged svo prompt
        demos, test = c.svo[:-1], c.svo[-1]
        text = "".join(f"Sentence: {d['input']}\nLabel: {d['label']}\n" for d in demos)
        text += f"Sentence: {test['input']}\nLabel:"
        ids, (states, _) = self._capture(text)
        last_label = demos[-1]["label"]
        lab_ids, _ = self.tok.tokenize(" " + last_label)
        end = self.label_pos(text, ids, last_label)
        span = list(range(end - len(lab_ids) + 1, end + 1))
        report = []
        for word in ("subject", "verb", "object"):
            tid = tok.first_subtoken(word)
            curve = [self.pir_at(states, p, tid)[0] for p in span]
            best = span[int(np.argmax(curve))]
            report.append((word, self.tok.text_of(ids[best]),
                           [round(v, 3) for v in curve]))
        out("c10 sweep: " + "  ".join(f"{w}->{t!r}" for w, t, _ in report))
        for w, _, curve in report:
            out(f"    {w}: {curve}")
        out(f"battery max prompt length: {self.max_len} (ctx {self.m.ctx})")


# ---------------------------------------------------------------- export


def export_model(model, tok: Tok, cfg, path: pathlib.Path):
    names = []
    sd = model.state_dict()
    names.append(("wte", sd["wte.weight"]))
    names.append(("wpe", sd["wpe.weight"]))
    names.append(("lnf_g", sd["ln_f.weight"]))
    names.append(("lnf_b", sd["ln_f.bias"]))
    for i in range(cfg["n_layer"]):
        p = f"blocks.{i}."
        names += [
            (f"h{i}.ln1_g", sd[p + "ln1.weight"]),
            (f"h{i}.ln1_b", sd[p + "ln1.bias"]),
            (f"h{i}.qkv_w", sd[p + "qkv.weight"]),
            (f"h{i}.qkv_b", sd[p + "qkv.bias"]),
            (f"h{i}.attn_proj_w", sd[p + "proj.weight"]),
            (f"h{i}.attn_proj_b", sd[p + "proj.bias"]),
            (f"h{i}.ln2_g", sd[p + "ln2.weight"]),
            (f"h{i}.ln2_b", sd[p + "ln2.bias"]),
            (f"h{i}.mlp_fc_w", sd[p + "fc.weight"]),
            (f"h{i}.mlp_fc_b", sd[p + "fc.bias"]),
            (f"h{i}.mlp_proj_w", sd[p + "out.weight"]),
            (f"h{i}.mlp_proj_b", sd[p + "out.bias"]),
        ]
    arrays, payload, offset = [], [], 0
    for name, tensor in names:
        a = tensor.detach().to(torch.float32).contiguous().numpy()
        raw = a.astype("<f4").tobytes()
        arrays.append({"name": name, "shape": list(a.shape),
                       "byte_offset": offset, "byte_length": len(raw)})
        payload.append(raw)
        offset += len(raw)
    header = {
        "format": "iclmodel",
        "model_id": MODEL_ID,
        "config": cfg,
        "tokenizer": {"words": tok.words},
        "arrays": arrays,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
        f.write(b"\n")
        for raw in payload:
            f.write(raw)
    return offset


def export_fixtures(model, tok: Tok, c: Corpus, path: pathlib.Path):
    instr = c.meta["triplets-trec"]["instruction"]
    texts = [
        "Word: France\nLabel: Paris\nWord: Italy\nLabel:",
        "Sentence: 他们看电视。\nLabel: They watch TV.\nSentence: 他读书。\nLabel:",
        instr + "\nQuestion: Who killed Gandhi?\nLabel: Human\n"
        "Question: What is a fear of shadows?\nLabel:",
    ]
    cases = []
    for text in texts:
        ids, _ = tok.tokenize(text)
        states, final = model.capture(ids)
        last = len(ids) - 1
        positions = sorted({0, min(5, last), last})
        hidden = []
        for layer in (1, 3, len(states)):
            for pos in (0, last):
                vals = states[layer - 1][pos][:8].tolist()
                hidden.append({"layer": layer, "position": pos,
                               "values": [float(v) for v in vals]})
        cases.append({
            "text": text,
            "token_ids": ids,
            "positions": positions,
            "hidden": hidden,
            "final_logits_head": [float(v) for v in final[:48]],
            "final_argmax": int(final.argmax()),
        })
    path.write_text(json.dumps({"model_id": MODEL_ID, "cases": cases}, indent=1))


# ---------------------------------------------------------------- main


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epochs", type=int, default=4)
    ap.add_argument("--scale", type=float, default=1.0, help="corpus size multiplier")
    ap.add_argument("--batch", type=int, default=16)
    ap.add_argument("--lr", type=float, default=3e-3)
    ap.add_argument("--d", type=int, default=96)
    ap.add_argument("--heads", type=int, default=6)
    ap.add_argument("--layers", type=int, default=6)
    ap.add_argument("--ctx", type=int, default=320)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--skip-train", action="store_true",
                    help="load models/picolm-v1.pt and only run battery/export")
    ap.add_argument("--no-export", action="store_true")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    corpus = Corpus()
    vocab_words = build_vocab(corpus)
    tok = Tok(vocab_words)
    print(f"vocabulary: {tok.vocab_size} ids ({len(vocab_words)} words)")

    rng = random.Random(args.seed)
    builder = Builder(tok, corpus, rng)
    model = PicoLM(tok.vocab_size, args.d, args.heads, args.layers, args.ctx)
    n_params = sum(p.numel() for p in model.parameters())
    print(f"model: {args.layers}L d={args.d} h={args.heads} ctx={args.ctx} "
          f"({n_params / 1e6:.2f}M params)")

    ckpt = ROOT / "models" / "picolm-v1.pt"
    if args.skip_train and ckpt.exists():
        model.load_state_dict(torch.load(ckpt, map_location="cpu"))
        print("loaded checkpoint, skipping training")
    else:
        episodes = build_corpus(builder, args.scale, args.ctx)
        toks = sum(len(e[0]) for e in episodes)
        print(f"corpus: {len(episodes)} episodes, {toks / 1e6:.2f}M tokens")
        train(model, episodes, args.epochs, args.batch, args.lr, args.seed)
        ckpt.parent.mkdir(parents=True, exist_ok=True)
        torch.save(model.state_dict(), ckpt)

    model.eval()
    print("--- behavioral margins ---")
    Battery(model, tok, corpus).run()

    if not args.no_export:
        cfg = {"n_layer": args.layers, "n_embd": args.d, "n_head": args.heads,
               "n_ctx": args.ctx, "n_vocab": tok.vocab_size, "ln_eps": 1e-5}
        size = export_model(model, tok, cfg, ROOT / "models" / "picolm-v1.iclmodel")
        export_fixtures(model, tok, corpus, ROOT / "models" / "parity_fixtures.json")
        print(f"exported models/picolm-v1.iclmodel ({size / 1e6:.1f}MB payload) "
              "and models/parity_fixtures.json")


if __name__ == "__main__":
    sys.exit(main())
