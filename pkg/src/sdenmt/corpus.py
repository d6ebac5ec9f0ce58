"""Parallel corpora, vocabularies, word-budgeted batching, and statistics.

Text is assumed pre-tokenized: UTF-8, one sentence per line, tokens
separated by single spaces. Tokens are kept byte-exact; there is no case
folding or Unicode normalization, since spelling is exactly the signal
the n-gram encoder feeds on.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field

import numpy as np

# A language tag such as "aze", "tur", "eng". Must be nonempty.
LanguageId = str

UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
SPECIALS = (UNK_TOKEN, PAD_TOKEN, BOS_TOKEN, EOS_TOKEN)
UNK_ID, PAD_ID, BOS_ID, EOS_ID = 0, 1, 2, 3

SPLITS = ("train", "dev", "test")


@dataclass
class SentencePair:
    source: list[str]
    target: list[str]
    lang: LanguageId


@dataclass
class ParallelCorpus:
    pairs: list[SentencePair]
    split: str
    tgt_lang: LanguageId = "eng"
    dropped_blank: int = 0

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.pairs)

    def languages(self) -> list[LanguageId]:
        seen: dict[str, None] = {}
        for p in self.pairs:
            seen.setdefault(p.lang)
        return list(seen)


class Vocabulary:
    """Bidirectional token<->id map with specials pinned at ids 0..3.

    Kept tokens are the most frequent, ties broken by lexicographic byte
    order so builds are deterministic across runs and platforms. Lookups
    of unknown tokens return the UNK id.
    """

    def __init__(self, counts: dict[str, int], max_size: int):
        if max_size < len(SPECIALS) + 1:
            raise ValueError(f"max_size must be at least {len(SPECIALS) + 1}, got {max_size}")
        self.max_size = max_size
        ranked = sorted(
            ((tok, n) for tok, n in counts.items() if tok not in SPECIALS),
            key=lambda item: (-item[1], item[0]),
        )
        ranked = ranked[: max_size - len(SPECIALS)]
        self._tokens = list(SPECIALS) + [tok for tok, _ in ranked]
        self._freqs = [0] * len(SPECIALS) + [n for _, n in ranked]
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def lookup(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        return self._tokens[token_id]

    def frequency(self, token: str) -> int:
        idx = self._ids.get(token)
        return 0 if idx is None else self._freqs[idx]

    def tokens(self) -> list[str]:
        return list(self._tokens)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self._ids.get(t, UNK_ID) for t in tokens]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, (tok, freq) in enumerate(zip(self._tokens, self._freqs)):
                fh.write(f"{tok}\t{i}\t{freq}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        tokens, freqs = [], []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh):
                tok, idx, freq = line.rstrip("\n").split("\t")
                if int(idx) != line_no:
                    raise ValueError(f"non-contiguous id {idx} at line {line_no + 1} of {path}")
                tokens.append(tok)
                freqs.append(int(freq))
        if tokens[: len(SPECIALS)] != list(SPECIALS):
            raise ValueError(f"vocabulary file {path} does not start with the special tokens")
        vocab = cls.__new__(cls)
        vocab.max_size = len(tokens)
        vocab._tokens = tokens
        vocab._freqs = freqs
        vocab._ids = {tok: i for i, tok in enumerate(tokens)}
        return vocab


@dataclass
class CorpusStats:
    sentences: dict[tuple[LanguageId, str], int] = field(default_factory=dict)
    source_tokens: dict[LanguageId, int] = field(default_factory=dict)
    target_tokens: dict[LanguageId, int] = field(default_factory=dict)
    source_types: dict[LanguageId, int] = field(default_factory=dict)
    target_types: dict[LanguageId, int] = field(default_factory=dict)

    def sentence_count(self, lang: LanguageId, split: str) -> int:
        return self.sentences.get((lang, split), 0)

    def report_lines(self) -> list[str]:
        lines = []
        langs = sorted({lang for lang, _ in self.sentences})
        for lang in langs:
            for split in SPLITS:
                n = self.sentence_count(lang, split)
                if (lang, split) in self.sentences:
                    lines.append(
                        f"stats.{lang}.{split}.sentences={n}\t"
                        f"display={format_count(n)}"
                    )
            lines.append(f"stats.{lang}.source_tokens={self.source_tokens.get(lang, 0)}")
            lines.append(f"stats.{lang}.target_tokens={self.target_tokens.get(lang, 0)}")
            lines.append(f"stats.{lang}.source_types={self.source_types.get(lang, 0)}")
            lines.append(f"stats.{lang}.target_types={self.target_types.get(lang, 0)}")
        return lines


def format_count(n: int) -> str:
    """Compact display form: 3 significant digits with a k suffix above 999."""
    if n < 1000:
        return str(n)
    thousands = n / 1000.0
    if thousands < 10:
        return f"{thousands:.2f}k"
    if thousands < 100:
        return f"{thousands:.1f}k"
    return f"{thousands:.0f}k"


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().split("\n")


def _tokenize(line: str) -> list[str]:
    return [tok for tok in line.split(" ") if tok]


def load_parallel(src_path, tgt_path, lang: LanguageId, split: str) -> ParallelCorpus:
    """Load a line-aligned pair of token files into one corpus.

    Pairs where either side is blank are dropped (and counted); a line
    count mismatch is a hard error.
    """
    if not lang:
        raise ValueError("language id must be nonempty")
    src_lines = _read_lines(src_path)
    tgt_lines = _read_lines(tgt_path)
    # A trailing newline yields one empty trailing element on both sides.
    if src_lines and src_lines[-1] == "":
        src_lines.pop()
    if tgt_lines and tgt_lines[-1] == "":
        tgt_lines.pop()
    if len(src_lines) != len(tgt_lines):
        raise ValueError(f"line count mismatch {len(src_lines)} vs {len(tgt_lines)}")
    pairs = []
    dropped = 0
    for src_line, tgt_line in zip(src_lines, tgt_lines):
        src = _tokenize(src_line)
        tgt = _tokenize(tgt_line)
        if not src or not tgt:
            dropped += 1
            continue
        pairs.append(SentencePair(src, tgt, lang))
    return ParallelCorpus(pairs, split, dropped_blank=dropped)


def concat_corpora(corpora: list[ParallelCorpus]) -> ParallelCorpus:
    if not corpora:
        raise ValueError("need at least one corpus")
    tgt_langs = {c.tgt_lang for c in corpora}
    if len(tgt_langs) != 1:
        raise ValueError(f"mismatched target languages: {sorted(tgt_langs)}")
    pairs = [p for c in corpora for p in c.pairs]
    return ParallelCorpus(pairs, corpora[0].split, tgt_lang=corpora[0].tgt_lang)


def _count_tokens(corpora: list[ParallelCorpus], side: str) -> collections.Counter:
    counts: collections.Counter = collections.Counter()
    for corpus in corpora:
        for pair in corpus.pairs:
            if side in ("source", "both"):
                counts.update(pair.source)
            if side in ("target", "both"):
                counts.update(pair.target)
    return counts


def build_word_vocab(
    corpora: list[ParallelCorpus], max_size: int, side: str = "source"
) -> Vocabulary:
    """Frequency-truncated word vocabulary over the given side(s)."""
    if side not in ("source", "target", "both"):
        raise ValueError(f"side must be source|target|both, got {side!r}")
    return Vocabulary(dict(_count_tokens(corpora, side)), max_size)


def word_ngrams(word: str, n_set) -> list[str]:
    """All contiguous substrings of word with lengths drawn from n_set."""
    out = []
    for n in sorted(n_set):
        for i in range(len(word) - n + 1):
            out.append(word[i : i + n])
    return out


def _ngram_counts_for_language(
    corpora: list[ParallelCorpus], lang: LanguageId, n_set
) -> collections.Counter:
    word_freq: collections.Counter = collections.Counter()
    for corpus in corpora:
        for pair in corpus.pairs:
            if pair.lang == lang:
                word_freq.update(pair.source)
    counts: collections.Counter = collections.Counter()
    for word, freq in word_freq.items():
        for gram in word_ngrams(word, n_set):
            counts[gram] += freq
    return counts


def build_ngram_vocab(
    corpora: list[ParallelCorpus],
    n_set,
    max_size: int,
    mode: str = "per_language",
) -> Vocabulary:
    """Character n-gram vocabulary over source-side word types, weighted by
    token frequency.

    per_language: each language keeps its own top slice of the budget and
    the slices are unioned (overlapping n-grams merge their counts).
    joint: one ranking over the concatenated data.
    """
    n_set = set(n_set)
    if not n_set or any(n < 1 for n in n_set):
        raise ValueError(f"n_set must be nonempty positive integers, got {sorted(n_set)}")
    if mode not in ("per_language", "joint"):
        raise ValueError(f"mode must be per_language|joint, got {mode!r}")
    langs: dict[str, None] = {}
    for corpus in corpora:
        for lang in corpus.languages():
            langs.setdefault(lang)
    if mode == "joint" or len(langs) <= 1:
        merged: collections.Counter = collections.Counter()
        for lang in langs:
            merged.update(_ngram_counts_for_language(corpora, lang, n_set))
        return Vocabulary(dict(merged), max_size)
    budget = (max_size - len(SPECIALS)) // len(langs)
    kept: collections.Counter = collections.Counter()
    for lang in langs:
        counts = _ngram_counts_for_language(corpora, lang, n_set)
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))[:budget]
        for gram, freq in ranked:
            kept[gram] += freq
    return Vocabulary(dict(kept), max_size)


def batch_iterator(
    corpus: ParallelCorpus,
    batch_words: int,
    shuffle_seed: int,
    sort_window: int = 512,
):
    """Yield batches of pair indices whose source-token totals fit the budget.

    Indices are shuffled, length-sorted within windows, then greedily
    packed. Every sentence appears exactly once per pass and the sequence
    is a pure function of the seed.
    """
    lengths = [len(p.source) for p in corpus.pairs]
    for i, n in enumerate(lengths):
        if n > batch_words:
            raise ValueError(f"sentence {i} has {n} source tokens, over the budget {batch_words}")
    rng = np.random.default_rng(shuffle_seed)
    order = rng.permutation(len(corpus.pairs))
    for start in range(0, len(order), sort_window):
        window = sorted(order[start : start + sort_window], key=lambda i: (lengths[i], i))
        batch: list[int] = []
        total = 0
        for idx in window:
            if batch and total + lengths[idx] > batch_words:
                yield batch
                batch, total = [], 0
            batch.append(int(idx))
            total += lengths[idx]
        if batch:
            yield batch


def corpus_stats(corpora: list[ParallelCorpus]) -> CorpusStats:
    stats = CorpusStats()
    src_types: dict[str, set] = collections.defaultdict(set)
    tgt_types: dict[str, set] = collections.defaultdict(set)
    for corpus in corpora:
        for pair in corpus.pairs:
            key = (pair.lang, corpus.split)
            stats.sentences[key] = stats.sentences.get(key, 0) + 1
            stats.source_tokens[pair.lang] = stats.source_tokens.get(pair.lang, 0) + len(
                pair.source
            )
            stats.target_tokens[pair.lang] = stats.target_tokens.get(pair.lang, 0) + len(
                pair.target
            )
            src_types[pair.lang].update(pair.source)
            tgt_types[pair.lang].update(pair.target)
    for lang, types in src_types.items():
        stats.source_types[lang] = len(types)
    for lang, types in tgt_types.items():
        stats.target_types[lang] = len(types)
    return stats
