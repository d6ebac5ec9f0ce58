"""Translation metrics and the analysis suite.

BLEU is corpus-level, 4-gram, unsmoothed, with the standard brevity
penalty. The paired bootstrap resamples per-sentence sufficient
statistics (clipped n-gram matches, totals, lengths), which makes a
thousand resamples cheap. Word F-measure is per target word type with
clipped occurrence counts; the bucketed variants group types by how
their source words segment or by their edit distance to the related
high-resource language.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field

import numpy as np

from . import numcore as nc
from .align import BilingualDictionary, bucket_label, edit_distance
from .sde import SdeLayer, attention_distribution
from .segmentation import BpeModel, apply_bpe

MAX_ORDER = 4


@dataclass
class BleuScore:
    score: float
    precisions: tuple[float, float, float, float]
    brevity_penalty: float
    hyp_length: int
    ref_length: int

    def __str__(self) -> str:
        ps = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return f"BLEU = {self.score:.2f} ({ps}) BP={self.brevity_penalty:.3f}"


def _ngram_counts(tokens: list[str], n: int) -> collections.Counter:
    return collections.Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


def sentence_bleu_stats(hyp: list[str], ref: list[str]) -> np.ndarray:
    """Sufficient statistics for one sentence: [match_1..4, total_1..4, |hyp|, |ref|]."""
    stats = np.zeros(2 * MAX_ORDER + 2, dtype=np.int64)
    for n in range(1, MAX_ORDER + 1):
        hyp_counts = _ngram_counts(hyp, n)
        ref_counts = _ngram_counts(ref, n)
        match = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        stats[n - 1] = match
        stats[MAX_ORDER + n - 1] = max(len(hyp) - n + 1, 0)
    stats[-2] = len(hyp)
    stats[-1] = len(ref)
    return stats


def _bleu_from_stats(stats: np.ndarray) -> float:
    matches = stats[:MAX_ORDER].astype(np.float64)
    totals = stats[MAX_ORDER : 2 * MAX_ORDER].astype(np.float64)
    hyp_len, ref_len = float(stats[-2]), float(stats[-1])
    if hyp_len == 0 or np.any(matches == 0) or np.any(totals == 0):
        return 0.0
    log_precision = float(np.mean(np.log(matches / totals)))
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return 100.0 * bp * math.exp(log_precision)


def bleu(hypotheses: list[list[str]], references: list[list[str]]) -> BleuScore:
    """Corpus BLEU over token lists; unsmoothed, zero if any order is unmatched."""
    if len(hypotheses) != len(references):
        raise ValueError(f"count mismatch: {len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("need at least one sentence")
    stats = np.zeros(2 * MAX_ORDER + 2, dtype=np.int64)
    for hyp, ref in zip(hypotheses, references):
        stats += sentence_bleu_stats(hyp, ref)
    matches = stats[:MAX_ORDER].astype(np.float64)
    totals = stats[MAX_ORDER : 2 * MAX_ORDER].astype(np.float64)
    precisions = tuple(
        (m / t) if t > 0 else 0.0 for m, t in zip(matches, totals)
    )
    hyp_len, ref_len = int(stats[-2]), int(stats[-1])
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len)) if hyp_len > 0 else 0.0
    return BleuScore(_bleu_from_stats(stats), precisions, bp, hyp_len, ref_len)


def paired_bootstrap(
    hyps_a: list[list[str]],
    hyps_b: list[list[str]],
    refs: list[list[str]],
    num_samples: int = 1000,
    seed: int = 0,
) -> dict[str, float]:
    """p(A>B) and p(B>A) over bootstrap resamples of the sentence set.

    Wins use strict inequality, so ties count toward neither system and
    the two p-values need not sum to 1.
    """
    if not (len(hyps_a) == len(hyps_b) == len(refs)):
        raise ValueError(
            f"length mismatch: {len(hyps_a)} vs {len(hyps_b)} vs {len(refs)} sentences"
        )
    if num_samples < 1000:
        raise ValueError(f"num_samples must be >= 1000, got {num_samples}")
    n = len(refs)
    stats_a = np.stack([sentence_bleu_stats(h, r) for h, r in zip(hyps_a, refs)])
    stats_b = np.stack([sentence_bleu_stats(h, r) for h, r in zip(hyps_b, refs)])
    rng = np.random.default_rng(seed)
    wins_a = wins_b = 0
    for _ in range(num_samples):
        idx = rng.integers(0, n, size=n)
        score_a = _bleu_from_stats(stats_a[idx].sum(axis=0))
        score_b = _bleu_from_stats(stats_b[idx].sum(axis=0))
        if score_a > score_b:
            wins_a += 1
        elif score_b > score_a:
            wins_b += 1
    return {"p_a_better": wins_a / num_samples, "p_b_better": wins_b / num_samples}


@dataclass
class WordTypeScore:
    match: int
    hyp_count: int
    ref_count: int

    @property
    def precision(self) -> float:
        return self.match / self.hyp_count if self.hyp_count else 0.0

    @property
    def recall(self) -> float:
        return self.match / self.ref_count if self.ref_count else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) > 0 else 0.0


@dataclass
class WordFMeasure:
    per_type: dict[str, WordTypeScore]
    aggregate: WordTypeScore  # micro average over all types


def word_fmeasure(hypotheses: list[list[str]], references: list[list[str]]) -> WordFMeasure:
    """Clipped per-sentence occurrence matching, accumulated per word type."""
    if len(hypotheses) != len(references):
        raise ValueError(f"count mismatch: {len(hypotheses)} vs {len(references)}")
    if not hypotheses:
        raise ValueError("need at least one sentence")
    per_type: dict[str, WordTypeScore] = {}
    for hyp, ref in zip(hypotheses, references):
        hyp_counts = collections.Counter(hyp)
        ref_counts = collections.Counter(ref)
        for word in set(hyp_counts) | set(ref_counts):
            score = per_type.setdefault(word, WordTypeScore(0, 0, 0))
            score.match += min(hyp_counts[word], ref_counts[word])
            score.hyp_count += hyp_counts[word]
            score.ref_count += ref_counts[word]
    aggregate = WordTypeScore(
        match=sum(s.match for s in per_type.values()),
        hyp_count=sum(s.hyp_count for s in per_type.values()),
        ref_count=sum(s.ref_count for s in per_type.values()),
    )
    return WordFMeasure(per_type, aggregate)


@dataclass
class BucketReport:
    """Per-bucket micro F-measure of two systems and the A-over-B gain."""

    buckets: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    type_counts: dict[str, int] = field(default_factory=dict)

    def csv_lines(self) -> list[str]:
        lines = ["bucket,types,f_a,f_b,gain"]
        for key, (fa, fb, gain) in self.buckets.items():
            lines.append(f"{key},{self.type_counts[key]},{fa:.4f},{fb:.4f},{gain:.4f}")
        return lines


def _bucketed_f(
    fm_a: WordFMeasure,
    fm_b: WordFMeasure,
    bucket_of: dict[str, str],
    order: list[str],
    fallback: str,
) -> BucketReport:
    groups: dict[str, list[str]] = {key: [] for key in order + [fallback]}
    for word in set(fm_a.per_type) | set(fm_b.per_type):
        groups[bucket_of.get(word, fallback)].append(word)
    report = BucketReport()
    for key in order + [fallback]:
        words = groups[key]
        if not words and key == fallback:
            continue
        agg = []
        for fm in (fm_a, fm_b):
            scores = [fm.per_type.get(w, WordTypeScore(0, 0, 0)) for w in words]
            agg.append(
                WordTypeScore(
                    sum(s.match for s in scores),
                    sum(s.hyp_count for s in scores),
                    sum(s.ref_count for s in scores),
                ).f1
            )
        report.buckets[key] = (agg[0], agg[1], agg[0] - agg[1])
        report.type_counts[key] = len(words)
    return report


def bucket_fmeasure_by_subwords(
    hyps_a: list[list[str]],
    hyps_b: list[list[str]],
    refs: list[list[str]],
    bpe_model: BpeModel,
    target_to_source: dict[str, str],
    boundaries: list[int] | None = None,
) -> BucketReport:
    """Bucket target word types by how many pieces their source word splits into.

    `target_to_source` maps each target word type to its most frequently
    aligned source word; unmapped types land in the "unaligned" bucket.
    """
    if boundaries is None:
        boundaries = [1, 2, 3, 4, 5]
    fm_a = word_fmeasure(hyps_a, refs)
    fm_b = word_fmeasure(hyps_b, refs)
    bucket_of = {}
    for word, src in target_to_source.items():
        pieces = len(apply_bpe(bpe_model, src))
        bucket_of[word] = bucket_label(max(pieces, boundaries[0]), boundaries)
    order = [bucket_label(b, boundaries) for b in boundaries]
    return _bucketed_f(fm_a, fm_b, bucket_of, order, "unaligned")


def bucket_fmeasure_by_edit_distance(
    hyps_a: list[list[str]],
    hyps_b: list[list[str]],
    refs: list[list[str]],
    dictionary: BilingualDictionary,
    target_to_source: dict[str, str],
    boundaries: list[int] | None = None,
) -> BucketReport:
    """Bucket target word types by their source word's distance to its
    high-resource dictionary pair; types without a pair go to "no-pair"."""
    if boundaries is None:
        boundaries = [0, 1, 2, 3, 4]
    fm_a = word_fmeasure(hyps_a, refs)
    fm_b = word_fmeasure(hyps_b, refs)
    pair_of = {e.lrl_word: e.hrl_word for e in dictionary.pairs}
    bucket_of = {}
    for word, src in target_to_source.items():
        if src in pair_of:
            d = edit_distance(src, pair_of[src])
            bucket_of[word] = bucket_label(max(d, boundaries[0]), boundaries)
    order = [bucket_label(b, boundaries) for b in boundaries]
    return _bucketed_f(fm_a, fm_b, bucket_of, order, "no-pair")


def most_frequent_source(corpus, table) -> dict[str, str]:
    """Map each target word type to the source word most often aligned to it."""
    from .align import viterbi_align

    counts: dict[str, collections.Counter] = collections.defaultdict(collections.Counter)
    for pair in corpus.pairs:
        for i, j in viterbi_align(table, pair):
            counts[pair.target[j]][pair.source[i]] += 1
    return {
        tgt: min(srcs.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        for tgt, srcs in counts.items()
    }


def attention_kl(
    layer: SdeLayer,
    words_a: list[tuple[str, str]],
    words_b: list[tuple[str, str]],
    eps: float = 1e-12,
) -> np.ndarray:
    """KL(P_a || P_b) between latent attention distributions, pairwise."""
    if not layer.config.use_latent:
        raise ValueError("attention_kl requires the latent stage")
    dists_a = [attention_distribution(w, l, layer).astype(np.float64) for w, l in words_a]
    dists_b = [attention_distribution(w, l, layer).astype(np.float64) for w, l in words_b]
    out = np.zeros((len(dists_a), len(dists_b)))
    for i, p in enumerate(dists_a):
        log_p = np.log(np.maximum(p, eps))
        for j, q in enumerate(dists_b):
            if words_a[i] == words_b[j]:
                continue  # identical inputs: exactly zero by definition
            log_q = np.log(np.maximum(q, eps))
            out[i, j] = float(np.sum(p * (log_p - log_q)))
    return out


EXPORT_STAGES = ("after_lexical", "after_transform", "full_sde")


def export_embeddings(
    layer: SdeLayer, words: list[tuple[str, str]], stage: str
) -> list[tuple[str, str, str, np.ndarray]]:
    """Embed (word, lang) pairs at the requested pipeline stage."""
    if stage not in EXPORT_STAGES:
        raise ValueError(f"stage must be one of {EXPORT_STAGES}, got {stage!r}")
    if not words:
        raise ValueError("need at least one word")
    rows = []
    with nc.no_grad():
        for word, lang in words:
            if layer.config.use_lexical:
                c = layer.lexical_batch([layer.extract_bag(word, lang)])
            else:
                c = layer.fallback_batch([word])
            if stage == "after_lexical":
                vec = c
            else:
                c_i = layer.transform_batch(c, [lang])
                if stage == "after_transform" or not layer.config.use_latent:
                    vec = c_i
                else:
                    e_latent, _ = layer.attend_batch(c_i)
                    vec = nc.add(e_latent, c_i) if layer.config.use_residual else e_latent
            rows.append((word, lang, stage, vec.data.reshape(-1).copy()))
    return rows


def write_embeddings(path, rows: list[tuple[str, str, str, np.ndarray]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for word, lang, stage, vec in rows:
            values = " ".join(f"{v:.8g}" for v in vec)
            fh.write(f"{word}\t{lang}\t{stage}\t{values}\n")
