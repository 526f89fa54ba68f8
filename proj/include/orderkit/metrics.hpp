#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "orderkit/util.hpp"

namespace orderkit::metrics {

struct MetricError : Error {
    enum class Kind { LengthMismatch, EmptyCorpus, InvalidThreshold, TooFewResamples };
    Kind kind;
    MetricError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

inline constexpr int kMaxOrder = 4;

// Additive sufficient statistics for corpus BLEU: corpus score of summed
// per-sentence stats equals the direct corpus computation exactly.
struct BleuStats {
    std::array<long long, kMaxOrder> clipped{};  // clipped n-gram matches
    std::array<long long, kMaxOrder> total{};    // hypothesis n-gram counts
    long long hyp_len = 0;
    long long ref_len = 0;

    BleuStats& operator+=(const BleuStats& o);
    bool operator==(const BleuStats&) const = default;
};

// Fractional-match variant used by LeBLEU; clipped counts are real-valued.
struct SoftBleuStats {
    std::array<double, kMaxOrder> clipped{};
    std::array<long long, kMaxOrder> total{};
    long long hyp_len = 0;
    long long ref_len = 0;

    SoftBleuStats& operator+=(const SoftBleuStats& o);
};

enum class Smoothing {
    Floor,  // zero clipped counts for n >= 2 are floored at 1e-9
    Exact,  // any zero clipped count gives score 0
};

using Sentence = std::vector<std::string>;
using Corpus = std::vector<Sentence>;

Corpus tokenize_corpus(const std::vector<std::string>& lines);

// Modified n-gram precision statistics for one sentence pair.
BleuStats bleu_sentence_stats(const Sentence& hyp, const Sentence& ref);

// Geometric mean of modified n-gram precisions times brevity penalty,
// scaled to 0..100. Orders whose hypothesis n-gram total is zero (corpus
// shorter than n words everywhere) are excluded from the mean; an empty
// hypothesis corpus scores 0.
double bleu_score(const BleuStats& stats, Smoothing smoothing = Smoothing::Floor);
double bleu_score_soft(const SoftBleuStats& stats, Smoothing smoothing = Smoothing::Floor);

struct BleuResult {
    double score = 0.0;
    BleuStats stats;
};

BleuResult bleu(const Corpus& hyps, const Corpus& refs, Smoothing smoothing = Smoothing::Floor);

// Character-level edit-distance similarity: 1 - lev(a,b)/max(|a|,|b|).
double token_similarity(const std::string& a, const std::string& b);
std::size_t levenshtein(const std::string& a, const std::string& b);

// LeBLEU: BLEU where an n-gram pair contributes fractional credit equal to
// the edit-distance similarity of the space-joined n-grams, counted only
// when similarity >= threshold. Assignment is greedy highest-similarity
// first (exact matches first, then fuzzy pairs by descending similarity,
// ties broken by position), each n-gram used at most once.
SoftBleuStats lebleu_sentence_stats(const Sentence& hyp, const Sentence& ref, double threshold);

struct LebleuResult {
    double score = 0.0;
    SoftBleuStats stats;
};

LebleuResult lebleu(const Corpus& hyps, const Corpus& refs, double threshold = 0.6,
                    Smoothing smoothing = Smoothing::Floor);

// Total occurrences of unk_token across the corpus.
std::size_t count_unk(const Corpus& hyps, const std::string& unk_token = "<unk>");

struct SignificanceResult {
    double p_value = 1.0;
    int n_resamples = 0;
    std::uint64_t seed = 0;
    int wins_a = 0;
    int wins_b = 0;
    int ties = 0;
    double score_a = 0.0;  // corpus BLEU of system A on the full test set
    double score_b = 0.0;
    char observed_winner = 'a';  // 'a' or 'b'; 'a' when tied

    bool operator==(const SignificanceResult&) const = default;
};

// Paired bootstrap resampling over sentence indices. Per resample, corpus
// BLEU for both systems is recomputed from additive per-sentence stats.
// p_value = fraction of resamples in which the observed winner does not
// strictly win (ties count against the winner). Deterministic given seed;
// resample i draws from an RNG seeded with mix_seed(seed, i).
SignificanceResult paired_bootstrap(const Corpus& hyps_a, const Corpus& hyps_b, const Corpus& refs,
                                    int n_resamples = 1000, std::uint64_t seed = 1,
                                    Smoothing smoothing = Smoothing::Floor);

}  // namespace orderkit::metrics
