#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "orderkit/metrics.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Paired bootstrap resampling significance test (corpus BLEU)"};
    std::string hyp_a, hyp_b, ref_path;
    int n = 1000;
    std::uint64_t seed = 1;
    app.add_option("--hyp-a", hyp_a, "system A hypotheses")->required();
    app.add_option("--hyp-b", hyp_b, "system B hypotheses")->required();
    app.add_option("--ref", ref_path, "references")->required();
    app.add_option("--n", n, "number of resamples (>= 100)");
    app.add_option("--seed", seed, "resampling seed");
    CLI11_PARSE(app, argc, argv);

    using namespace orderkit;
    try {
        metrics::Corpus a = metrics::tokenize_corpus(read_lines(hyp_a));
        metrics::Corpus b = metrics::tokenize_corpus(read_lines(hyp_b));
        metrics::Corpus refs = metrics::tokenize_corpus(read_lines(ref_path));
        metrics::SignificanceResult r = metrics::paired_bootstrap(a, b, refs, n, seed);
        nlohmann::ordered_json out{
            {"p_value", r.p_value},   {"n_resamples", r.n_resamples},
            {"seed", r.seed},         {"wins_a", r.wins_a},
            {"wins_b", r.wins_b},     {"ties", r.ties},
            {"score_a", r.score_a},   {"score_b", r.score_b},
            {"observed_winner", std::string(1, r.observed_winner)},
            {"significant_at_0.05", r.p_value < 0.05}};
        std::cout << out.dump() << "\n";
        std::cerr << "BLEU A " << format_double(r.score_a, 2) << " vs B "
                  << format_double(r.score_b, 2) << ", p = " << format_double(r.p_value, 4) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
