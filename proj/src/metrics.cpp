#include "orderkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace orderkit::metrics {

namespace {

constexpr double kFloorEps = 1e-9;

void check_corpus_pair(const Corpus& hyps, const Corpus& refs) {
    if (hyps.size() != refs.size())
        throw MetricError(MetricError::Kind::LengthMismatch,
                          "hypothesis and reference corpora differ in length (" +
                              std::to_string(hyps.size()) + " vs " + std::to_string(refs.size()) + ")");
    if (hyps.empty()) throw MetricError(MetricError::Kind::EmptyCorpus, "empty corpus");
}

// n-grams as space-joined strings, cheap and unambiguous for
// whitespace-free tokens.
std::vector<std::string> ngrams(const Sentence& s, int n) {
    std::vector<std::string> out;
    if (static_cast<int>(s.size()) < n) return out;
    out.reserve(s.size() - n + 1);
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
        std::string g = s[i];
        for (int k = 1; k < n; ++k) {
            g += ' ';
            g += s[i + k];
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
    for (int n = 0; n < kMaxOrder; ++n) {
        clipped[n] += o.clipped[n];
        total[n] += o.total[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
}

SoftBleuStats& SoftBleuStats::operator+=(const SoftBleuStats& o) {
    for (int n = 0; n < kMaxOrder; ++n) {
        clipped[n] += o.clipped[n];
        total[n] += o.total[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
}

Corpus tokenize_corpus(const std::vector<std::string>& lines) {
    Corpus out;
    out.reserve(lines.size());
    for (const auto& line : lines) out.push_back(split_ws(line));
    return out;
}

BleuStats bleu_sentence_stats(const Sentence& hyp, const Sentence& ref) {
    BleuStats st;
    st.hyp_len = static_cast<long long>(hyp.size());
    st.ref_len = static_cast<long long>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
        std::map<std::string, long long> ref_counts;
        for (auto& g : ngrams(ref, n)) ++ref_counts[g];
        std::map<std::string, long long> hyp_counts;
        for (auto& g : ngrams(hyp, n)) ++hyp_counts[g];
        long long total = 0, clipped = 0;
        for (const auto& [g, c] : hyp_counts) {
            total += c;
            auto it = ref_counts.find(g);
            if (it != ref_counts.end()) clipped += std::min(c, it->second);
        }
        st.total[n - 1] = total;
        st.clipped[n - 1] = clipped;
    }
    return st;
}

namespace {

// Shared scoring core over (clipped, total) arrays of double.
double score_from_counts(const std::array<double, kMaxOrder>& clipped,
                         const std::array<long long, kMaxOrder>& total, long long hyp_len,
                         long long ref_len, Smoothing smoothing) {
    if (hyp_len == 0) return 0.0;
    double log_sum = 0.0;
    int orders = 0;
    for (int n = 0; n < kMaxOrder; ++n) {
        if (total[n] == 0) continue;  // corpus too short for this order
        ++orders;
        double c = clipped[n];
        if (c <= 0.0) {
            // unigram misses are never smoothed: no content overlap means 0
            if (n == 0 || smoothing == Smoothing::Exact) return 0.0;
            c = kFloorEps;
        }
        log_sum += std::log(c / static_cast<double>(total[n]));
    }
    if (orders == 0) return 0.0;
    double brevity = 1.0;
    if (hyp_len < ref_len)
        brevity = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * brevity * std::exp(log_sum / orders);
}

std::array<double, kMaxOrder> to_double(const std::array<long long, kMaxOrder>& a) {
    std::array<double, kMaxOrder> out{};
    for (int i = 0; i < kMaxOrder; ++i) out[i] = static_cast<double>(a[i]);
    return out;
}

}  // namespace

double bleu_score(const BleuStats& stats, Smoothing smoothing) {
    return score_from_counts(to_double(stats.clipped), stats.total, stats.hyp_len, stats.ref_len,
                             smoothing);
}

double bleu_score_soft(const SoftBleuStats& stats, Smoothing smoothing) {
    return score_from_counts(stats.clipped, stats.total, stats.hyp_len, stats.ref_len, smoothing);
}

BleuResult bleu(const Corpus& hyps, const Corpus& refs, Smoothing smoothing) {
    check_corpus_pair(hyps, refs);
    BleuResult result;
    for (std::size_t i = 0; i < hyps.size(); ++i) result.stats += bleu_sentence_stats(hyps[i], refs[i]);
    result.score = bleu_score(result.stats, smoothing);
    return result;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    const std::size_t m = a.size(), n = b.size();
    if (m == 0) return n;
    if (n == 0) return m;
    std::vector<std::size_t> prev(n + 1), cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

double token_similarity(const std::string& a, const std::string& b) {
    if (a == b) return 1.0;
    std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

SoftBleuStats lebleu_sentence_stats(const Sentence& hyp, const Sentence& ref, double threshold) {
    SoftBleuStats st;
    st.hyp_len = static_cast<long long>(hyp.size());
    st.ref_len = static_cast<long long>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
        std::vector<std::string> hgrams = ngrams(hyp, n);
        std::vector<std::string> rgrams = ngrams(ref, n);
        st.total[n - 1] = static_cast<long long>(hgrams.size());
        if (hgrams.empty() || rgrams.empty()) continue;

        std::vector<bool> h_used(hgrams.size(), false), r_used(rgrams.size(), false);
        double credit = 0.0;

        // Pass 1: exact matches (similarity 1.0). Matching identical pairs
        // first realizes the clipped count min(hyp, ref) per n-gram type,
        // so LeBLEU never scores below BLEU.
        for (std::size_t i = 0; i < hgrams.size(); ++i) {
            for (std::size_t j = 0; j < rgrams.size(); ++j) {
                if (r_used[j] || hgrams[i] != rgrams[j]) continue;
                h_used[i] = true;
                r_used[j] = true;
                credit += 1.0;
                break;
            }
        }

        // Pass 2: fuzzy pairs, highest similarity first, positions as
        // deterministic tie-break.
        struct Pair {
            double sim;
            std::size_t i, j;
        };
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < hgrams.size(); ++i) {
            if (h_used[i]) continue;
            for (std::size_t j = 0; j < rgrams.size(); ++j) {
                if (r_used[j]) continue;
                double sim = token_similarity(hgrams[i], rgrams[j]);
                if (sim >= threshold) pairs.push_back({sim, i, j});
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.sim != b.sim) return a.sim > b.sim;
            if (a.i != b.i) return a.i < b.i;
            return a.j < b.j;
        });
        for (const Pair& p : pairs) {
            if (h_used[p.i] || r_used[p.j]) continue;
            h_used[p.i] = true;
            r_used[p.j] = true;
            credit += p.sim;
        }
        st.clipped[n - 1] = credit;
    }
    return st;
}

LebleuResult lebleu(const Corpus& hyps, const Corpus& refs, double threshold, Smoothing smoothing) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw MetricError(MetricError::Kind::InvalidThreshold,
                          "threshold must be in (0,1], got " + std::to_string(threshold));
    check_corpus_pair(hyps, refs);
    LebleuResult result;
    for (std::size_t i = 0; i < hyps.size(); ++i)
        result.stats += lebleu_sentence_stats(hyps[i], refs[i], threshold);
    result.score = bleu_score_soft(result.stats, smoothing);
    return result;
}

std::size_t count_unk(const Corpus& hyps, const std::string& unk_token) {
    std::size_t count = 0;
    for (const auto& sent : hyps)
        for (const auto& tok : sent)
            if (tok == unk_token) ++count;
    return count;
}

SignificanceResult paired_bootstrap(const Corpus& hyps_a, const Corpus& hyps_b, const Corpus& refs,
                                    int n_resamples, std::uint64_t seed, Smoothing smoothing) {
    check_corpus_pair(hyps_a, refs);
    check_corpus_pair(hyps_b, refs);
    if (n_resamples < 100)
        throw MetricError(MetricError::Kind::TooFewResamples,
                          "need at least 100 resamples, got " + std::to_string(n_resamples));

    const std::size_t n_sents = refs.size();
    std::vector<BleuStats> stats_a(n_sents), stats_b(n_sents);
    BleuStats full_a, full_b;
    for (std::size_t i = 0; i < n_sents; ++i) {
        stats_a[i] = bleu_sentence_stats(hyps_a[i], refs[i]);
        stats_b[i] = bleu_sentence_stats(hyps_b[i], refs[i]);
        full_a += stats_a[i];
        full_b += stats_b[i];
    }

    SignificanceResult result;
    result.n_resamples = n_resamples;
    result.seed = seed;
    result.score_a = bleu_score(full_a, smoothing);
    result.score_b = bleu_score(full_b, smoothing);
    result.observed_winner = result.score_b > result.score_a ? 'b' : 'a';

    for (int r = 0; r < n_resamples; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        BleuStats sum_a, sum_b;
        for (std::size_t k = 0; k < n_sents; ++k) {
            std::size_t idx = static_cast<std::size_t>(rng.next_below(n_sents));
            sum_a += stats_a[idx];
            sum_b += stats_b[idx];
        }
        double sa = bleu_score(sum_a, smoothing);
        double sb = bleu_score(sum_b, smoothing);
        if (sa > sb)
            ++result.wins_a;
        else if (sb > sa)
            ++result.wins_b;
        else
            ++result.ties;
    }

    int winner_wins = result.observed_winner == 'a' ? result.wins_a : result.wins_b;
    result.p_value =
        static_cast<double>(n_resamples - winner_wins) / static_cast<double>(n_resamples);
    return result;
}

}  // namespace orderkit::metrics
