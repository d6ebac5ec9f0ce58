"""Lexical-unit granularities: word, character, subword (BPE), plus the
character n-gram bag extraction behind the shared lexical embedding.

BPE is the classic greedy construction: count symbol pairs over word
types weighted by corpus frequency, repeatedly merge the most frequent
pair (lexicographic tie-break), stop early once no pair occurs twice.
Words carry a terminal end-marker symbol so segmentations detokenize
losslessly.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field

from .corpus import (
    UNK_ID,
    LanguageId,
    ParallelCorpus,
    Vocabulary,
    word_ngrams,
)

END_MARKER = "§"  # word-final symbol inside BPE pieces
CHAR_BOUNDARY = "▁"  # word-boundary token in character mode

SEGMENT_MODES = ("word", "char", "sub_joint", "sub_sep")


@dataclass
class BpeModel:
    merges: list[tuple[str, str]]
    num_merges: int
    end_marker: str = END_MARKER

    def __post_init__(self):
        if len(self.merges) > self.num_merges:
            raise ValueError(
                f"{len(self.merges)} merges exceed the requested {self.num_merges}"
            )
        self._priority = {pair: i for i, pair in enumerate(self.merges)}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"#merges={self.num_merges} end_marker={self.end_marker}\n")
            for left, right in self.merges:
                fh.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path) -> "BpeModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if not header.startswith("#merges="):
                raise ValueError(f"not a BPE model file: {path}")
            merges_text, marker_text = header[1:].split(" ")
            num_merges = int(merges_text.split("=")[1])
            end_marker = marker_text.split("=")[1]
            merges = []
            for line in fh:
                left, right = line.rstrip("\n").split(" ")
                merges.append((left, right))
        return cls(merges, num_merges, end_marker)


@dataclass
class BagOfNgrams:
    """Sparse count vector of a word's n-grams over a shared vocabulary."""

    counts: dict[int, int]
    source_word: str

    def total(self) -> int:
        return sum(self.counts.values())

    def as_arrays(self) -> tuple[list[int], list[int]]:
        ids = sorted(self.counts)
        return ids, [self.counts[i] for i in ids]


def _word_symbol_counts(
    corpora: list[ParallelCorpus],
    end_marker: str,
    langs: set[LanguageId] | None,
    include_target: bool,
) -> dict[tuple[str, ...], int]:
    words: collections.Counter = collections.Counter()
    for corpus in corpora:
        for pair in corpus.pairs:
            if langs is None or pair.lang in langs:
                words.update(pair.source)
            if include_target and (langs is None or corpus.tgt_lang in langs):
                words.update(pair.target)
    return {tuple(word) + (end_marker,): freq for word, freq in words.items()}


def _train_merges(symbol_seqs: dict[tuple[str, ...], int], num_merges: int) -> list[tuple[str, str]]:
    seqs = dict(symbol_seqs)
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        pair_counts: collections.Counter = collections.Counter()
        for seq, freq in seqs.items():
            for a, b in zip(seq, seq[1:]):
                pair_counts[(a, b)] += freq
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda item: (-item[1], item[0]))
        if best[1] < 2:
            break
        pair = best[0]
        merges.append(pair)
        merged_symbol = pair[0] + pair[1]
        new_seqs: dict[tuple[str, ...], int] = {}
        for seq, freq in seqs.items():
            out = []
            i = 0
            while i < len(seq):
                if i + 1 < len(seq) and (seq[i], seq[i + 1]) == pair:
                    out.append(merged_symbol)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            new_seqs[tuple(out)] = new_seqs.get(tuple(out), 0) + freq
        seqs = new_seqs
    return merges


def train_bpe(
    corpora: list[ParallelCorpus],
    num_merges: int,
    mode: str = "joint",
    include_target: bool = True,
    end_marker: str = END_MARKER,
) -> dict[LanguageId, BpeModel] | BpeModel:
    """Train BPE merges; joint returns one model, separate one per language.

    In separate mode the target language gets its own model trained on
    the target side alone.
    """
    if num_merges < 1:
        raise ValueError(f"num_merges must be >= 1, got {num_merges}")
    if mode not in ("joint", "separate"):
        raise ValueError(f"mode must be joint|separate, got {mode!r}")
    if not corpora or all(len(c) == 0 for c in corpora):
        raise ValueError("cannot train BPE on an empty corpus")
    if mode == "joint":
        seqs = _word_symbol_counts(corpora, end_marker, None, include_target)
        return BpeModel(_train_merges(seqs, num_merges), num_merges, end_marker)
    models: dict[LanguageId, BpeModel] = {}
    src_langs: dict[str, None] = {}
    for corpus in corpora:
        for lang in corpus.languages():
            src_langs.setdefault(lang)
    for lang in src_langs:
        seqs = _word_symbol_counts(corpora, end_marker, {lang}, include_target=False)
        models[lang] = BpeModel(_train_merges(seqs, num_merges), num_merges, end_marker)
    if include_target:
        tgt_lang = corpora[0].tgt_lang
        tgt_words: collections.Counter = collections.Counter()
        for corpus in corpora:
            for pair in corpus.pairs:
                tgt_words.update(pair.target)
        seqs = {tuple(w) + (end_marker,): f for w, f in tgt_words.items()}
        models[tgt_lang] = BpeModel(_train_merges(seqs, num_merges), num_merges, end_marker)
    return models


def apply_bpe(model: BpeModel, word: str) -> list[str]:
    """Segment one word; the last piece carries the end marker."""
    if not word:
        raise ValueError("cannot segment an empty word")
    if model.end_marker in word:
        raise ValueError(
            f"word {word!r} contains the end marker {model.end_marker!r}; "
            "retrain with a different end_marker"
        )
    symbols = list(word) + [model.end_marker]
    while len(symbols) > 1:
        best_rank = None
        best_at = -1
        for i in range(len(symbols) - 1):
            rank = model._priority.get((symbols[i], symbols[i + 1]))
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_at = i
        if best_rank is None:
            break
        symbols[best_at : best_at + 2] = [symbols[best_at] + symbols[best_at + 1]]
    if len(symbols) > 1 and symbols[-1] == model.end_marker:
        symbols[-2:] = [symbols[-2] + model.end_marker]
    return symbols


def strip_end_markers(pieces: list[str], end_marker: str = END_MARKER) -> str:
    return "".join(pieces).replace(end_marker, "")


def char_ngrams(
    word: str,
    n_set,
    vocab: Vocabulary,
    wrap_boundaries: bool = False,
) -> BagOfNgrams:
    """Bag of the word's character n-grams mapped through the vocabulary.

    Out-of-vocabulary n-grams accumulate on the UNK coordinate, so the
    bag total always equals the raw n-gram count. `wrap_boundaries`
    optionally counts n-grams of "<word>" instead of the bare word.
    """
    if not word:
        raise ValueError("cannot extract n-grams of an empty word")
    text = f"<{word}>" if wrap_boundaries else word
    counts: dict[int, int] = {}
    for gram in word_ngrams(text, n_set):
        gid = vocab.lookup(gram)
        counts[gid] = counts.get(gid, 0) + 1
    return BagOfNgrams(counts, word)


def subword_bag(
    word: str,
    model: BpeModel,
    piece_vocab: Vocabulary,
) -> BagOfNgrams:
    """Bag built from the word's BPE pieces instead of character n-grams."""
    counts: dict[int, int] = {}
    for piece in apply_bpe(model, word):
        pid = piece_vocab.lookup(piece)
        counts[pid] = counts.get(pid, 0) + 1
    return BagOfNgrams(counts, word)


def build_piece_vocab(
    corpora: list[ParallelCorpus],
    models: dict[LanguageId, BpeModel],
    max_size: int,
) -> Vocabulary:
    """Vocabulary over BPE pieces of source-side words, frequency weighted."""
    word_freq: collections.Counter = collections.Counter()
    for corpus in corpora:
        for pair in corpus.pairs:
            for w in pair.source:
                word_freq[(w, pair.lang)] += 1
    counts: collections.Counter = collections.Counter()
    for (word, lang), freq in word_freq.items():
        model = models.get(lang)
        if model is None:
            raise KeyError(f"no BPE model for language {lang!r}")
        for piece in apply_bpe(model, word):
            counts[piece] += freq
    return Vocabulary(dict(counts), max_size)


def segment(
    sentence: list[str],
    mode: str,
    lang: LanguageId | None = None,
    models: dict[LanguageId, BpeModel] | None = None,
    joint_model: BpeModel | None = None,
) -> list[str]:
    """Re-segment one sentence into the requested lexical units."""
    if mode not in SEGMENT_MODES:
        raise ValueError(f"mode must be one of {SEGMENT_MODES}, got {mode!r}")
    if mode == "word":
        return list(sentence)
    if mode == "char":
        out = []
        for word in sentence:
            out.extend(word)
            out.append(CHAR_BOUNDARY)
        return out
    if mode == "sub_joint":
        if joint_model is None:
            raise ValueError("sub_joint segmentation needs the joint BPE model")
        model = joint_model
    else:
        if models is None or lang is None or lang not in models:
            raise ValueError(f"no BPE model for language {lang!r} in mode sub_sep")
        model = models[lang]
    out = []
    for word in sentence:
        out.extend(apply_bpe(model, word))
    return out


def detokenize(units: list[str], mode: str, end_marker: str = END_MARKER) -> list[str]:
    """Invert `segment`, recovering the original word sequence."""
    if mode == "word":
        return list(units)
    if mode == "char":
        words, current = [], []
        for u in units:
            if u == CHAR_BOUNDARY:
                if current:
                    words.append("".join(current))
                    current = []
            else:
                current.append(u)
        if current:
            words.append("".join(current))
        return words
    words, current = [], []
    for piece in units:
        current.append(piece)
        if piece.endswith(end_marker):
            words.append("".join(current)[: -len(end_marker)])
            current = []
    if current:
        words.append("".join(current))
    return words


def segment_corpus(
    corpus: ParallelCorpus,
    mode: str,
    models: dict[LanguageId, BpeModel] | None = None,
    joint_model: BpeModel | None = None,
    segment_target: bool = True,
) -> ParallelCorpus:
    """Apply `segment` to every pair, target side included by default."""
    from .corpus import SentencePair

    pairs = []
    for pair in corpus.pairs:
        src = segment(pair.source, mode, pair.lang, models, joint_model)
        if segment_target and mode != "word":
            tgt = segment(pair.target, mode, corpus.tgt_lang, models, joint_model)
        else:
            tgt = list(pair.target)
        pairs.append(SentencePair(src, tgt, pair.lang))
    out = ParallelCorpus(pairs, corpus.split, tgt_lang=corpus.tgt_lang)
    return out
