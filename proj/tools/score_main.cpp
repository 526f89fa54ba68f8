#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "orderkit/metrics.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Corpus BLEU / LeBLEU / UNK-count scoring"};
    std::string metric = "bleu", hyp_path, ref_path;
    double threshold = 0.6;
    bool exact = false;
    app.add_option("--metric", metric, "bleu | lebleu | unk")
        ->check(CLI::IsMember({"bleu", "lebleu", "unk"}));
    app.add_option("--hyp", hyp_path, "hypothesis file")->required();
    app.add_option("--ref", ref_path, "reference file");
    app.add_option("--threshold", threshold, "LeBLEU similarity threshold");
    app.add_flag("--exact", exact, "disable floor smoothing");
    CLI11_PARSE(app, argc, argv);

    using namespace orderkit;
    try {
        metrics::Corpus hyps = metrics::tokenize_corpus(read_lines(hyp_path));
        metrics::Smoothing smoothing =
            exact ? metrics::Smoothing::Exact : metrics::Smoothing::Floor;
        nlohmann::ordered_json out{{"metric", metric}, {"hyp", hyp_path}};
        if (metric == "unk") {
            out["count"] = metrics::count_unk(hyps);
        } else {
            if (ref_path.empty()) throw Error("--ref is required for bleu/lebleu");
            metrics::Corpus refs = metrics::tokenize_corpus(read_lines(ref_path));
            if (metric == "bleu") {
                metrics::BleuResult r = metrics::bleu(hyps, refs, smoothing);
                out["score"] = r.score;
                out["hyp_len"] = r.stats.hyp_len;
                out["ref_len"] = r.stats.ref_len;
            } else {
                metrics::LebleuResult r = metrics::lebleu(hyps, refs, threshold, smoothing);
                out["score"] = r.score;
                out["threshold"] = threshold;
            }
            out["smoothing"] = exact ? "exact" : "floor";
        }
        std::cout << out.dump() << "\n";
        std::cerr << metric << " "
                  << (out.contains("score") ? format_double(out["score"].get<double>(), 2)
                                            : std::to_string(out["count"].get<std::size_t>()))
                  << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
