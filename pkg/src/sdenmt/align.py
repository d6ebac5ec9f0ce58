"""Word alignment and bilingual dictionary extraction.

The aligner is IBM Model 1 trained with EM: each source token is
explained by one target token (or the NULL token prepended to every
target sentence), with translation probabilities t(target | source)
normalized over targets per source. The corpus log-likelihood is
recorded per iteration; EM guarantees it never decreases.

Dictionaries are built by pivoting through English: for each English
word type, pair the low-resource word most frequently aligned to it
with the high-resource word most frequently aligned to it.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field

from .corpus import ParallelCorpus

NULL_TOKEN = "<null>"


@dataclass
class TranslationTable:
    """Sparse t(target | source); rows normalized over targets."""

    t: dict[str, dict[str, float]] = field(default_factory=dict)
    log_likelihoods: list[float] = field(default_factory=list)

    def prob(self, source: str, target: str) -> float:
        return self.t.get(source, {}).get(target, 0.0)


@dataclass
class DictionaryEntry:
    lrl_word: str
    hrl_word: str
    pivot: str
    count: int


@dataclass
class BilingualDictionary:
    pairs: list[DictionaryEntry]

    def __len__(self) -> int:
        return len(self.pairs)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for e in self.pairs:
                fh.write(f"{e.lrl_word}\t{e.hrl_word}\t{e.pivot}\t{e.count}\n")

    @classmethod
    def load(cls, path) -> "BilingualDictionary":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                lrl, hrl, pivot, count = line.rstrip("\n").split("\t")
                pairs.append(DictionaryEntry(lrl, hrl, pivot, int(count)))
        return cls(pairs)


def _targets_with_null(pair) -> list[str]:
    return [NULL_TOKEN] + pair.target


def init_uniform_table(corpus: ParallelCorpus) -> TranslationTable:
    """Uniform t(.|s) over the targets cooccurring with each source token."""
    cooc: dict[str, set] = collections.defaultdict(set)
    for pair in corpus.pairs:
        targets = _targets_with_null(pair)
        for s in pair.source:
            cooc[s].update(targets)
    table = TranslationTable()
    for s, targets in cooc.items():
        p = 1.0 / len(targets)
        table.t[s] = {y: p for y in sorted(targets)}
    return table


def _log_likelihood(corpus: ParallelCorpus, table: TranslationTable) -> float:
    ll = 0.0
    for pair in corpus.pairs:
        targets = _targets_with_null(pair)
        prior = 1.0 / len(targets)
        row_for = table.t
        for s in pair.source:
            total = sum(row_for.get(s, {}).get(y, 0.0) for y in targets)
            ll += math.log(prior * total)
    return ll


def ibm1_train(corpus: ParallelCorpus, iterations: int) -> TranslationTable:
    """EM from a uniform start; deterministic, log-likelihood per iteration."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if len(corpus) == 0:
        raise ValueError("cannot align an empty corpus")
    table = init_uniform_table(corpus)
    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = collections.defaultdict(
            lambda: collections.defaultdict(float)
        )
        for pair in corpus.pairs:
            targets = _targets_with_null(pair)
            for s in pair.source:
                row = table.t[s]
                probs = [row.get(y, 0.0) for y in targets]
                denom = sum(probs)
                if denom <= 0.0:
                    continue
                for y, p in zip(targets, probs):
                    counts[s][y] += p / denom
        for s, row_counts in counts.items():
            total = sum(row_counts.values())
            table.t[s] = {y: c / total for y, c in sorted(row_counts.items())}
        table.log_likelihoods.append(_log_likelihood(corpus, table))
    return table


def viterbi_align(table: TranslationTable, pair) -> list[tuple[int, int]]:
    """Link each source token to its argmax target (NULL links dropped).

    Ties go to the leftmost candidate; NULL sits left of every real
    target, so an all-zero row yields no link.
    """
    links = []
    for i, s in enumerate(pair.source):
        row = table.t.get(s, {})
        best_j = -1  # NULL
        best_p = row.get(NULL_TOKEN, 0.0)
        for j, y in enumerate(pair.target):
            p = row.get(y, 0.0)
            if p > best_p:
                best_p = p
                best_j = j
        if best_j >= 0:
            links.append((i, best_j))
    return links


def _link_counts(corpus: ParallelCorpus, table: TranslationTable) -> dict[str, collections.Counter]:
    """Per English word type, how often each source word aligns to it."""
    by_pivot: dict[str, collections.Counter] = collections.defaultdict(collections.Counter)
    for pair in corpus.pairs:
        for i, j in viterbi_align(table, pair):
            by_pivot[pair.target[j]][pair.source[i]] += 1
    return by_pivot


def extract_dictionary(
    lrl_corpus: ParallelCorpus,
    hrl_corpus: ParallelCorpus,
    min_count: int = 1,
    iterations: int = 5,
) -> BilingualDictionary:
    """Pair LRL and HRL words through their shared English alignments."""
    if lrl_corpus.tgt_lang != hrl_corpus.tgt_lang:
        raise ValueError(
            f"pivot sides differ: {lrl_corpus.tgt_lang!r} vs {hrl_corpus.tgt_lang!r}"
        )
    lrl_links = _link_counts(lrl_corpus, ibm1_train(lrl_corpus, iterations))
    hrl_links = _link_counts(hrl_corpus, ibm1_train(hrl_corpus, iterations))
    merged: dict[tuple[str, str], dict[str, int]] = {}
    for pivot in sorted(set(lrl_links) & set(hrl_links)):
        lrl_word, lrl_n = min(lrl_links[pivot].items(), key=lambda kv: (-kv[1], kv[0]))
        hrl_word, hrl_n = min(hrl_links[pivot].items(), key=lambda kv: (-kv[1], kv[0]))
        merged.setdefault((lrl_word, hrl_word), {})[pivot] = min(lrl_n, hrl_n)
    entries = []
    for (lrl_word, hrl_word), pivots in merged.items():
        count = sum(pivots.values())
        if count >= min_count:
            pivot = min(pivots.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            entries.append(DictionaryEntry(lrl_word, hrl_word, pivot, count))
    entries.sort(key=lambda e: (-e.count, e.lrl_word, e.hrl_word))
    return BilingualDictionary(entries)


def edit_distance(w1: str, w2: str) -> int:
    """Levenshtein distance over Unicode code points."""
    if w1 == w2:
        return 0
    if len(w1) < len(w2):
        w1, w2 = w2, w1
    previous = list(range(len(w2) + 1))
    for i, a in enumerate(w1, start=1):
        current = [i]
        for j, b in enumerate(w2, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (a != b))
            )
        previous = current
    return previous[-1]


def bucket_label(value: int, boundaries: list[int]) -> str:
    """Label for the bucket containing value, given ascending lower bounds."""
    for lo, hi in zip(boundaries, boundaries[1:]):
        if lo <= value < hi:
            return str(lo) if hi == lo + 1 else f"{lo}-{hi - 1}"
    return f"{boundaries[-1]}+"


def edit_distance_histogram(
    dictionary: BilingualDictionary, boundaries: list[int] | None = None
) -> dict[str, float]:
    """Percentage of dictionary pairs per edit-distance bucket.

    `boundaries` are ascending bucket lower bounds; the last is open
    ended. Percentages sum to 100.
    """
    if len(dictionary) == 0:
        raise ValueError("cannot bucket an empty dictionary")
    if boundaries is None:
        boundaries = [0, 1, 2, 3, 4]
    if boundaries != sorted(set(boundaries)):
        raise ValueError(f"boundaries must be strictly ascending, got {boundaries}")
    labels = [bucket_label(b, boundaries) for b in boundaries]
    tally = {label: 0 for label in labels}
    for entry in dictionary.pairs:
        d = edit_distance(entry.lrl_word, entry.hrl_word)
        tally[bucket_label(max(d, boundaries[0]), boundaries)] += 1
    return {label: 100.0 * n / len(dictionary) for label, n in tally.items()}
