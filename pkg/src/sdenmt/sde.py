"""Soft decoupled encoding of words.

A word is embedded in three stages, all sharing one parameter set per
stage across languages except the middle one:

  1. lexical:    c(w)   = tanh(BoN(w) @ W_char)          (shared table)
  2. transform:  c_i(w) = tanh(c(w) @ W_lang[i])         (one matrix per language)
  3. latent:     e_lat  = softmax(c_i(w) @ W_latent^T) @ W_latent   (shared table)

and the output is the residual sum e = e_lat + c_i. Every stage can be
switched off for ablations; the parameter census reflects exactly which
tables exist. The per-word functions below are thin wrappers over the
batched kernels, so composing stages by hand reproduces the fused
pipeline bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numcore as nc
from .corpus import LanguageId, Vocabulary
from .segmentation import BagOfNgrams, BpeModel, char_ngrams, subword_bag

BAG_SOURCES = ("char_ngrams", "subword_pieces")
UNIT_MODES = ("word", "sub_sep")


@dataclass
class SdeConfig:
    embed_dim: int = 128
    ngram_vocab_size: int = 32000
    latent_size: int = 10000
    n_set: tuple[int, ...] = (1, 2, 3, 4, 5)
    use_lexical: bool = True
    use_lang_transform: bool = True
    use_latent: bool = True
    use_residual: bool = True
    unit_mode: str = "word"
    bag_source: str = "char_ngrams"
    scale_scores: bool = False  # optional 1/sqrt(D) on attention scores
    wrap_boundaries: bool = False  # fastText-style <word> wrapping

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.latent_size < 1:
            raise ValueError(f"latent_size must be >= 1, got {self.latent_size}")
        if self.ngram_vocab_size < 5:
            raise ValueError(f"ngram_vocab_size must be >= 5, got {self.ngram_vocab_size}")
        if not (self.use_lexical or self.use_latent):
            raise ValueError("at least one of use_lexical/use_latent must be enabled")
        if self.unit_mode not in UNIT_MODES:
            raise ValueError(f"unit_mode must be one of {UNIT_MODES}, got {self.unit_mode!r}")
        if self.bag_source not in BAG_SOURCES:
            raise ValueError(f"bag_source must be one of {BAG_SOURCES}, got {self.bag_source!r}")
        self.n_set = tuple(sorted(set(self.n_set)))
        if not self.n_set or any(n < 1 for n in self.n_set):
            raise ValueError(f"n_set must be nonempty positive integers, got {self.n_set}")


class SdeLayer:
    """Parameter bundle plus the staged embedding pipeline.

    `ngram_vocab` indexes the shared lexical table (character n-grams,
    or BPE pieces when bag_source is subword_pieces). `word_vocab` backs
    the plain lookup that substitutes for the lexical stage when
    use_lexical is off. With unit_mode sub_sep the incoming tokens are
    expected to already be subword units; the pipeline itself is
    unchanged.
    """

    def __init__(
        self,
        config: SdeConfig,
        ngram_vocab: Vocabulary,
        languages: list[LanguageId],
        seed: int = 0,
        word_vocab: Vocabulary | None = None,
        bpe_models: dict[LanguageId, BpeModel] | None = None,
        dtype=np.float32,
    ):
        if len(ngram_vocab) > config.ngram_vocab_size:
            raise ValueError(
                f"ngram vocab has {len(ngram_vocab)} entries, over the configured "
                f"{config.ngram_vocab_size}"
            )
        if not languages:
            raise ValueError("need at least one language")
        if not config.use_lexical and word_vocab is None:
            raise ValueError("disabling the lexical stage requires a word_vocab fallback")
        if config.bag_source == "subword_pieces" and not bpe_models:
            raise ValueError("bag_source=subword_pieces requires BPE models")
        self.config = config
        self.ngram_vocab = ngram_vocab
        self.word_vocab = word_vocab
        self.bpe_models = bpe_models or {}
        self.languages = list(dict.fromkeys(languages))
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        d = config.embed_dim
        c = len(ngram_vocab)
        self.char_table: nc.Parameter | None = None
        self.fallback_word_table: nc.Parameter | None = None
        self.lang_transforms: dict[str, nc.Parameter] = {}
        self.latent_table: nc.Parameter | None = None
        if config.use_lexical:
            self.char_table = nc.Parameter(nc.uniform_init(rng, (c, d), dtype=dtype), "sde.char_table")
        else:
            self.fallback_word_table = nc.Parameter(
                nc.uniform_init(rng, (len(word_vocab), d), dtype=dtype), "sde.fallback_word_table"
            )
        if config.use_lang_transform:
            for lang in self.languages:
                self.lang_transforms[lang] = nc.Parameter(
                    nc.uniform_init(rng, (d, d), dtype=dtype), f"sde.lang_transform.{lang}"
                )
        if config.use_latent:
            self.latent_table = nc.Parameter(
                nc.uniform_init(rng, (config.latent_size, d), dtype=dtype), "sde.latent_table"
            )
        self._bag_cache: dict = {}

    @property
    def dim(self) -> int:
        return self.config.embed_dim

    def parameters(self) -> list[nc.Parameter]:
        out = []
        if self.char_table is not None:
            out.append(self.char_table)
        if self.fallback_word_table is not None:
            out.append(self.fallback_word_table)
        out.extend(self.lang_transforms[lang] for lang in self.languages)
        if self.latent_table is not None:
            out.append(self.latent_table)
        return out

    # -- bag extraction ----------------------------------------------------

    def extract_bag(self, word: str, lang: LanguageId) -> BagOfNgrams:
        """Bag for one word; cached, since words repeat heavily in batches."""
        if self.config.bag_source == "subword_pieces":
            key = (word, lang)
            bag = self._bag_cache.get(key)
            if bag is None:
                model = self.bpe_models.get(lang)
                if model is None:
                    raise KeyError(f"no BPE model for language {lang!r}")
                bag = subword_bag(word, model, self.ngram_vocab)
                self._bag_cache[key] = bag
            return bag
        bag = self._bag_cache.get(word)
        if bag is None:
            bag = char_ngrams(word, self.config.n_set, self.ngram_vocab, self.config.wrap_boundaries)
            self._bag_cache[word] = bag
        return bag

    # -- batched pipeline stages -------------------------------------------

    def lexical_batch(self, bags: list[BagOfNgrams]) -> nc.Tensor:
        if self.char_table is None:
            raise ValueError("lexical stage is disabled for this layer")
        limit = self.char_table.data.shape[0]
        arrays = []
        for bag in bags:
            ids, counts = bag.as_arrays()
            if ids and ids[-1] >= limit:
                raise IndexError(f"bag id {ids[-1]} out of range [0, {limit})")
            arrays.append((np.asarray(ids, np.int64), np.asarray(counts, self.dtype)))
        return nc.tanh(nc.embedding_rows(self.char_table, arrays))

    def fallback_batch(self, words: list[str]) -> nc.Tensor:
        ids = np.asarray([self.word_vocab.lookup(w) for w in words], np.int64)
        return nc.embedding_rows(self.fallback_word_table, ids)

    def transform_batch(self, c: nc.Tensor, langs: list[LanguageId]) -> nc.Tensor:
        if not self.config.use_lang_transform:
            return c
        for lang in langs:
            if lang not in self.lang_transforms:
                raise KeyError(f"unknown language {lang!r}; registered: {self.languages}")
        unique = list(dict.fromkeys(langs))
        if len(unique) == 1:
            return nc.tanh(nc.matmul(c, self.lang_transforms[unique[0]]))
        groups = [np.asarray([i for i, l in enumerate(langs) if l == lang]) for lang in unique]
        parts = [
            nc.tanh(nc.matmul(nc.embedding_rows(c, idx), self.lang_transforms[lang]))
            for lang, idx in zip(unique, groups)
        ]
        perm = np.concatenate(groups)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        return nc.embedding_rows(nc.concat_rows(parts), inverse)

    def attend_batch(self, query: nc.Tensor) -> tuple[nc.Tensor, nc.Tensor]:
        if self.latent_table is None:
            raise ValueError("latent stage is disabled for this layer")
        scores = nc.matmul(query, nc.transpose(self.latent_table))
        if self.config.scale_scores:
            scores = nc.scale(scores, 1.0 / math.sqrt(self.config.embed_dim))
        weights = nc.softmax_rows(scores)
        return nc.matmul(weights, self.latent_table), weights

    def embed_words(self, words: list[str], langs: list[LanguageId]) -> nc.Tensor:
        """Full pipeline for a batch of words -> [N, D], honoring all flags."""
        if len(words) != len(langs):
            raise ValueError(f"{len(words)} words vs {len(langs)} language tags")
        if self.config.use_lexical:
            c = self.lexical_batch([self.extract_bag(w, l) for w, l in zip(words, langs)])
        else:
            c = self.fallback_batch(words)
        c_i = self.transform_batch(c, langs)
        if not self.config.use_latent:
            return c_i
        e_latent, _ = self.attend_batch(c_i)
        if self.config.use_residual:
            return nc.add(e_latent, c_i)
        return e_latent


# -- per-word contract surface ----------------------------------------------


def lexical_embed(bag: BagOfNgrams, layer: SdeLayer) -> nc.Tensor:
    """Stage 1 for a single bag -> vector [D], elementwise in (-1, 1)."""
    return nc.reshape(layer.lexical_batch([bag]), (layer.dim,))


def lang_transform(c: nc.Tensor, lang: LanguageId, layer: SdeLayer) -> nc.Tensor:
    """Stage 2 for a single vector; identity when the transform is disabled."""
    if not layer.config.use_lang_transform:
        return c
    row = nc.reshape(c, (1, layer.dim))
    return nc.reshape(layer.transform_batch(row, [lang]), (layer.dim,))


def latent_attend(c_i: nc.Tensor, layer: SdeLayer) -> nc.Tensor:
    """Stage 3 for a single vector: attention-weighted mix of latent rows."""
    row = nc.reshape(c_i, (1, layer.dim))
    out, _ = layer.attend_batch(row)
    return nc.reshape(out, (layer.dim,))


def sde_embed(word: str, lang: LanguageId, layer: SdeLayer) -> nc.Tensor:
    """Embed one word through the full pipeline -> vector [D]."""
    if not word:
        raise ValueError("cannot embed an empty word")
    return nc.reshape(layer.embed_words([word], [lang]), (layer.dim,))


def attention_distribution(word: str, lang: LanguageId, layer: SdeLayer) -> np.ndarray:
    """The latent attention weights for one word, as a plain probability array."""
    if not layer.config.use_latent:
        raise ValueError("attention_distribution requires the latent stage")
    with nc.no_grad():
        if layer.config.use_lexical:
            c = layer.lexical_batch([layer.extract_bag(word, lang)])
        else:
            c = layer.fallback_batch([word])
        c_i = layer.transform_batch(c, [lang])
        _, weights = layer.attend_batch(c_i)
    return weights.data.reshape(-1).copy()


def parameter_census(layer: SdeLayer) -> dict[str, int]:
    """Exact parameter counts per component, for ablation bookkeeping."""
    cfg = layer.config
    counts = {
        "char_ngram_table": layer.char_table.data.size if layer.char_table is not None else 0,
        "lang_transforms": sum(p.data.size for p in layer.lang_transforms.values()),
        "latent_table": layer.latent_table.data.size if layer.latent_table is not None else 0,
        "fallback_word_table": (
            layer.fallback_word_table.data.size if layer.fallback_word_table is not None else 0
        ),
    }
    counts["total"] = sum(counts.values())
    counts["per_language_transform"] = cfg.embed_dim**2 if cfg.use_lang_transform else 0
    return counts
