#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orderkit/metrics.hpp"
#include "orderkit/nmt/train.hpp"
#include "orderkit/util.hpp"

namespace orderkit::pipeline {

struct PipelineError : Error {
    using Error::Error;
};

// Full experiment matrix from one config file: synthetic data generation,
// {no-preorder, generic, tuned} parent training, the child-size fine-tune
// ladder plus a from-scratch baseline, decoding, scoring and significance.
struct ExperimentConfig {
    int version = 1;

    // resolved absolute paths
    std::string grammar_path;
    std::string rules_generic_path;
    std::string rules_tuned_path;

    std::size_t parent_train = 8000;
    std::size_t child_pool = 1000;
    std::size_t dev = 500;
    std::size_t test = 500;
    double noise = 0.05;
    std::uint64_t seed = 1;

    std::vector<std::size_t> ladder = {0, 50, 100, 200, 400, 800};

    int d_emb = 32;
    int d_hid = 32;
    int enc_layers = 1;
    int dec_layers = 1;
    bool input_feeding = false;
    int min_freq_src = 2;
    int min_freq_tgt = 2;
    int decode_max_len = 32;

    nmt::TrainConfig parent_training;
    nmt::TrainConfig finetune_training;

    double lebleu_threshold = 0.6;
    int bootstrap_n = 1000;

    int threads = 0;  // 0 = hardware concurrency

    std::string config_hash;  // hash of the config file bytes

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);

inline constexpr const char* kSystems[] = {"none", "generic", "tuned"};
inline constexpr const char* kBaseline = "scratch";

struct Cell {
    std::string system;  // scratch | none | generic | tuned
    std::size_t child_size = 0;
    bool available = true;      // scratch has no model at size 0
    std::uint64_t seed = 0;     // training seed of the model behind this cell
    double bleu = 0.0;
    double lebleu = 0.0;
    long long unk = 0;
    std::vector<std::string> samples;

    bool operator==(const Cell&) const = default;
};

struct SigCell {
    std::string system;  // generic | tuned, tested against "none"
    std::size_t child_size = 0;
    metrics::SignificanceResult result;

    bool operator==(const SigCell&) const = default;
};

struct Provenance {
    std::string artifact_version;
    std::string config_hash;
    std::string grammar_hash;
    std::string rules_generic_hash;
    std::string rules_tuned_hash;
    std::uint64_t seed = 0;
    double lebleu_threshold = 0.6;
    int bootstrap_n = 1000;
    std::string smoothing = "floor";
    std::string decoding = "greedy";
    std::string lr_trigger = "dev-loss-plateau";

    bool operator==(const Provenance&) const = default;
};

struct EvalReport {
    Provenance provenance;
    std::vector<std::size_t> ladder;
    std::vector<Cell> cells;          // size-major, system order scratch,none,generic,tuned
    std::vector<SigCell> significance;  // size-major, generic then tuned

    const Cell* find_cell(const std::string& system, std::size_t size) const;
    const SigCell* find_sig(const std::string& system, std::size_t size) const;

    bool operator==(const EvalReport&) const = default;
};

struct RunOptions {
    bool force = false;
    bool resume = false;
};

// Executes the experiment into out_dir. Stages are cached by content hash
// of their inputs; --resume reuses valid stage outputs, --force wipes the
// directory first. Without either flag the directory must be empty. A lock
// file guards against concurrent runs. Writes report.jsonl and report.txt.
EvalReport run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                          const RunOptions& options = {});

std::string render_report_text(const EvalReport& report);
std::string render_report_machine(const EvalReport& report);  // JSON lines
EvalReport parse_report_machine(const std::string& text);
EvalReport load_report(const std::string& out_dir);

}  // namespace orderkit::pipeline
