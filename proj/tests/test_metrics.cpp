#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "orderkit/metrics.hpp"

using namespace orderkit;
using namespace orderkit::metrics;

namespace {

Corpus corpus_of(const std::vector<std::string>& lines) { return tokenize_corpus(lines); }

// Random corpus whose token pool contains near-identical pairs so fuzzy
// matching has something to do.
Corpus random_corpus(Rng& rng, std::size_t n_sents, std::size_t max_len = 8) {
    static const std::vector<std::string> kPool = {"house", "housing", "cat",  "cats", "dog",
                                                   "dogs",  "meet",    "meets", "a",   "the"};
    Corpus c;
    for (std::size_t i = 0; i < n_sents; ++i) {
        Sentence s;
        std::size_t len = 1 + rng.next_below(max_len);
        for (std::size_t k = 0; k < len; ++k) s.push_back(kPool[rng.next_below(kPool.size())]);
        c.push_back(std::move(s));
    }
    return c;
}

Corpus corrupt(const Corpus& refs, double rate, Rng& rng) {
    Corpus out = refs;
    int counter = 0;
    for (auto& sent : out)
        for (auto& tok : sent)
            if (rng.uniform() < rate) tok = "junk" + std::to_string(counter++);
    return out;
}

Corpus shuffle_tokens(const Corpus& refs, Rng& rng) {
    Corpus out = refs;
    for (auto& sent : out)
        for (std::size_t i = sent.size(); i > 1; --i)
            std::swap(sent[i - 1], sent[rng.next_below(i)]);
    return out;
}

}  // namespace

TEST_CASE("perfect match scores exactly 100") {
    Corpus c = corpus_of({"the cat sat", "a dog barks loudly", "x"});
    CHECK(bleu(c, c).score == 100.0);
    CHECK(lebleu(c, c, 0.6).score == 100.0);
    CHECK(lebleu(c, c, 1.0).score == 100.0);
}

TEST_CASE("clipped unigram counting: the/the fixture") {
    BleuStats st = bleu_sentence_stats({"the", "the", "the", "the"},
                                       {"the", "cat", "is", "on", "the", "mat"});
    CHECK(st.total[0] == 4);
    CHECK(st.clipped[0] == 2);  // "the" appears twice in the reference
    CHECK(st.clipped[1] == 0);
}

TEST_CASE("hand-enumerated n-gram precisions and frozen smoothed score") {
    Corpus hyp = corpus_of({"a b c d"});
    Corpus ref = corpus_of({"a b c e"});
    BleuResult r = bleu(hyp, ref);
    CHECK(r.stats.clipped[0] == 3);
    CHECK(r.stats.total[0] == 4);
    CHECK(r.stats.clipped[1] == 2);
    CHECK(r.stats.total[1] == 3);
    CHECK(r.stats.clipped[2] == 1);
    CHECK(r.stats.total[2] == 2);
    CHECK(r.stats.clipped[3] == 0);
    CHECK(r.stats.total[3] == 1);
    // independent recomputation of the floor-smoothed geometric mean
    double expected =
        100.0 * std::exp((std::log(3.0 / 4) + std::log(2.0 / 3) + std::log(1.0 / 2) +
                          std::log(1e-9 / 1)) /
                         4.0);
    CHECK(r.score == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bleu(hyp, ref, Smoothing::Exact).score == 0.0);
}

TEST_CASE("error conditions") {
    Corpus one = corpus_of({"a"});
    Corpus two = corpus_of({"a", "b"});
    CHECK_THROWS_AS(bleu(one, two), MetricError);
    CHECK_THROWS_AS(bleu({}, {}), MetricError);
    CHECK_THROWS_AS(lebleu(one, one, 0.0), MetricError);
    CHECK_THROWS_AS(lebleu(one, one, 1.5), MetricError);
    CHECK_NOTHROW(lebleu(one, one, 1.0));
}

TEST_CASE("levenshtein and token similarity fixtures") {
    CHECK(levenshtein("housing", "house") == 3);
    CHECK(token_similarity("housing", "house") == doctest::Approx(4.0 / 7));
    CHECK(token_similarity("same", "same") == 1.0);
    CHECK(levenshtein("", "abc") == 3);
}

TEST_CASE("lebleu fractional credit around the threshold") {
    Corpus hyp = corpus_of({"housing"});
    Corpus ref = corpus_of({"house"});
    // similarity 4/7 = 0.571 is below the default 0.6: no credit at all
    CHECK(lebleu(hyp, ref, 0.6).score == 0.0);
    // with threshold 0.5 the unigram earns fractional credit 4/7
    double expected = 100.0 * (4.0 / 7);
    CHECK(lebleu(hyp, ref, 0.5).score == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lebleu equals bleu at threshold 1.0 on random corpora") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Corpus refs = random_corpus(rng, 1 + rng.next_below(6));
        Corpus hyps = corrupt(refs, 0.3, rng);
        double b = bleu(hyps, refs).score;
        double lb = lebleu(hyps, refs, 1.0).score;
        CHECK(lb == doctest::Approx(b).epsilon(1e-9));
    }
}

TEST_CASE("lebleu never scores below bleu") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        Corpus refs = random_corpus(rng, 1 + rng.next_below(6));
        Corpus hyps = corrupt(refs, 0.25, rng);
        CHECK(lebleu(hyps, refs, 0.6).score >= bleu(hyps, refs).score - 1e-12);
    }
}

TEST_CASE("unk counting") {
    CHECK(count_unk(corpus_of({"a <unk> b", "<unk> <unk>"})) == 3);
    CHECK(count_unk(corpus_of({"a b", "c"})) == 0);
    CHECK(count_unk(corpus_of({"a UNK b"}), "UNK") == 1);
}

TEST_CASE("per-sentence stats are additive and corpus order does not matter") {
    Rng rng(13);
    Corpus refs = random_corpus(rng, 20);
    Corpus hyps = corrupt(refs, 0.2, rng);

    BleuStats sum;
    for (std::size_t i = 0; i < refs.size(); ++i) sum += bleu_sentence_stats(hyps[i], refs[i]);
    BleuResult direct = bleu(hyps, refs);
    CHECK(sum == direct.stats);
    CHECK(bleu_score(sum) == direct.score);

    // consistent permutation of (hyp, ref) pairs leaves the score unchanged
    Corpus hyps2 = hyps, refs2 = refs;
    Rng perm_rng(14);
    for (std::size_t i = hyps2.size(); i > 1; --i) {
        std::size_t j = perm_rng.next_below(i);
        std::swap(hyps2[i - 1], hyps2[j]);
        std::swap(refs2[i - 1], refs2[j]);
    }
    CHECK(bleu(hyps2, refs2).score == direct.score);
}

TEST_CASE("brevity penalty strictly reduces the score of shorter hypotheses") {
    BleuStats st;
    st.clipped = {3, 2, 1, 1};
    st.total = {4, 3, 2, 1};
    st.hyp_len = 4;
    st.ref_len = 4;
    double equal_len = bleu_score(st);
    st.hyp_len = 3;
    double shorter = bleu_score(st);
    CHECK(shorter < equal_len);
    CHECK(shorter == doctest::Approx(equal_len * std::exp(1.0 - 4.0 / 3)).epsilon(1e-12));
}

TEST_CASE("empty hypotheses score zero") {
    BleuStats st;
    st.hyp_len = 0;
    st.ref_len = 5;
    CHECK(bleu_score(st) == 0.0);
}

TEST_CASE("identical systems: all ties, p = 1.0") {
    Rng rng(15);
    Corpus refs = random_corpus(rng, 30);
    Corpus hyps = corrupt(refs, 0.2, rng);
    SignificanceResult r = paired_bootstrap(hyps, hyps, refs, 500, 42);
    CHECK(r.ties == 500);
    CHECK(r.wins_a == 0);
    CHECK(r.wins_b == 0);
    CHECK(r.p_value == 1.0);
    CHECK(r.wins_a + r.wins_b + r.ties == r.n_resamples);
}

TEST_CASE("separation fixture is significant across seeds") {
    Rng rng(16);
    Corpus refs = random_corpus(rng, 50, 8);
    Corpus system_a = refs;  // perfect
    Corpus system_b = shuffle_tokens(refs, rng);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        SignificanceResult r = paired_bootstrap(system_a, system_b, refs, 1000, seed);
        CHECK(r.p_value < 0.05);
        CHECK(r.observed_winner == 'a');
        CHECK(r.score_a == 100.0);
    }
}

TEST_CASE("bootstrap is deterministic given the seed") {
    Rng rng(17);
    Corpus refs = random_corpus(rng, 25);
    Corpus a = corrupt(refs, 0.15, rng);
    Corpus b = corrupt(refs, 0.3, rng);
    SignificanceResult r1 = paired_bootstrap(a, b, refs, 300, 99);
    SignificanceResult r2 = paired_bootstrap(a, b, refs, 300, 99);
    CHECK(r1 == r2);
}

TEST_CASE("bootstrap input validation") {
    Corpus refs = corpus_of({"a b", "c d"});
    Corpus short_hyps = corpus_of({"a b"});
    CHECK_THROWS_AS(paired_bootstrap(short_hyps, refs, refs, 1000, 1), MetricError);
    CHECK_THROWS_AS(paired_bootstrap(refs, refs, refs, 99, 1), MetricError);
}

TEST_CASE("p-value is non-increasing in the corruption gap") {
    Rng rng(18);
    Corpus refs = random_corpus(rng, 50, 8);
    for (std::uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
        double last_p = 1.0;
        bool monotone = true;
        int level = 0;
        for (double rate : {0.01, 0.15, 0.6}) {
            Rng crng(1000 + level++);
            Corpus worse = corrupt(refs, rate, crng);
            SignificanceResult r = paired_bootstrap(refs, worse, refs, 1000, seed);
            if (r.p_value > last_p + 1e-12) monotone = false;
            last_p = r.p_value;
        }
        CHECK(monotone);
    }
}
