#include "orderkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "orderkit/dictxlate.hpp"
#include "orderkit/preorder.hpp"
#include "orderkit/synthlang.hpp"
#include "orderkit/treebank.hpp"

namespace orderkit::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

namespace {

nmt::TrainConfig train_config_from_json(const json& j, nmt::TrainConfig base) {
    if (j.contains("initial_lr")) base.initial_lr = j.at("initial_lr").get<double>();
    if (j.contains("lr_decay")) base.lr_decay = j.at("lr_decay").get<double>();
    if (j.contains("lr_floor")) base.lr_floor = j.at("lr_floor").get<double>();
    if (j.contains("clip_norm")) base.clip_norm = j.at("clip_norm").get<double>();
    if (j.contains("dropout")) base.dropout = j.at("dropout").get<double>();
    if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_epochs")) base.max_epochs = j.at("max_epochs").get<int>();
    return base;
}

std::string resolve_relative(const fs::path& base_dir, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (base_dir / path).lexically_normal().string();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (ladder.empty() || ladder.front() != 0)
        throw PipelineError("ladder must start at 0 (the no-child-corpus scenario)");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1]) throw PipelineError("ladder must be strictly increasing");
    if (ladder.back() > child_pool)
        throw PipelineError("largest ladder size exceeds the child pool");
    for (const std::string& p : {grammar_path, rules_generic_path, rules_tuned_path})
        if (!fs::exists(p)) throw PipelineError("referenced file does not exist: " + p);
    parent_training.validate();
    finetune_training.validate();
    if (bootstrap_n < 100) throw PipelineError("bootstrap_n must be >= 100");
    if (!(lebleu_threshold > 0.0 && lebleu_threshold <= 1.0))
        throw PipelineError("lebleu_threshold must be in (0,1]");
}

ExperimentConfig load_config(const std::string& path) {
    std::string bytes = read_file(path);
    json j = json::parse(bytes, nullptr, true, /*ignore_comments=*/true);
    fs::path base_dir = fs::absolute(fs::path(path)).parent_path();

    ExperimentConfig c;
    c.config_hash = fnv1a64_hex(bytes);
    if (j.contains("version")) c.version = j.at("version").get<int>();
    if (c.version != 1) throw PipelineError("unsupported config version");

    c.grammar_path = resolve_relative(base_dir, j.at("grammar").get<std::string>());
    c.rules_generic_path = resolve_relative(base_dir, j.at("rules").at("generic").get<std::string>());
    c.rules_tuned_path = resolve_relative(base_dir, j.at("rules").at("tuned").get<std::string>());

    const json& data = j.at("data");
    c.parent_train = data.at("parent_train").get<std::size_t>();
    c.child_pool = data.at("child_pool").get<std::size_t>();
    c.dev = data.at("dev").get<std::size_t>();
    c.test = data.at("test").get<std::size_t>();
    if (data.contains("noise")) c.noise = data.at("noise").get<double>();
    if (data.contains("seed")) c.seed = data.at("seed").get<std::uint64_t>();

    if (j.contains("ladder")) c.ladder = j.at("ladder").get<std::vector<std::size_t>>();

    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("d_emb")) c.d_emb = m.at("d_emb").get<int>();
        if (m.contains("d_hid")) c.d_hid = m.at("d_hid").get<int>();
        if (m.contains("enc_layers")) c.enc_layers = m.at("enc_layers").get<int>();
        if (m.contains("dec_layers")) c.dec_layers = m.at("dec_layers").get<int>();
        if (m.contains("input_feeding")) c.input_feeding = m.at("input_feeding").get<bool>();
        if (m.contains("cell") && m.at("cell").get<std::string>() != "gru")
            throw PipelineError("only the gru cell is built");
    }
    if (j.contains("vocab")) {
        const json& v = j.at("vocab");
        if (v.contains("min_freq_src")) c.min_freq_src = v.at("min_freq_src").get<int>();
        if (v.contains("min_freq_tgt")) c.min_freq_tgt = v.at("min_freq_tgt").get<int>();
    }
    if (j.contains("decode_max_len")) c.decode_max_len = j.at("decode_max_len").get<int>();
    if (j.contains("parent_training"))
        c.parent_training = train_config_from_json(j.at("parent_training"), c.parent_training);
    if (j.contains("finetune_training"))
        c.finetune_training = train_config_from_json(j.at("finetune_training"), c.finetune_training);
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        if (m.contains("lebleu_threshold")) c.lebleu_threshold = m.at("lebleu_threshold").get<double>();
        if (m.contains("bootstrap_n")) c.bootstrap_n = m.at("bootstrap_n").get<int>();
    }
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Report lookups

const Cell* EvalReport::find_cell(const std::string& system, std::size_t size) const {
    for (const Cell& c : cells)
        if (c.system == system && c.child_size == size) return &c;
    return nullptr;
}

const SigCell* EvalReport::find_sig(const std::string& system, std::size_t size) const {
    for (const SigCell& s : significance)
        if (s.system == system && s.child_size == size) return &s;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Stage cache and locking

namespace {

struct DirLock {
    std::string path;
    explicit DirLock(const std::string& dir) : path(dir + "/.lock") {
        if (fs::exists(path))
            throw PipelineError("output directory is locked by another run (remove " + path +
                                " if stale)");
        write_file(path, "locked\n");
    }
    ~DirLock() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

struct Stage {
    std::string name;
    std::vector<std::string> inputs;   // files hashed into the cache key
    std::string params;                // config fields the stage depends on
    std::vector<std::string> outputs;  // files the stage produces
};

std::string stage_manifest_path(const std::string& out_dir, const std::string& name) {
    return out_dir + "/stages/" + name + ".json";
}

bool stage_is_current(const std::string& out_dir, const Stage& st) {
    std::string mpath = stage_manifest_path(out_dir, st.name);
    if (!fs::exists(mpath)) return false;
    json m;
    try {
        m = json::parse(read_file(mpath));
    } catch (...) {
        return false;
    }
    if (!m.contains("version") || m.at("version").get<std::string>() != kVersion) return false;
    if (m.at("params").get<std::string>() != fnv1a64_hex(st.params)) return false;
    try {
        const json& inputs = m.at("inputs");
        if (inputs.size() != st.inputs.size()) return false;
        for (const std::string& in : st.inputs)
            if (inputs.at(in).get<std::string>() != file_hash_hex(in)) return false;
    } catch (...) {
        return false;
    }
    for (const std::string& out : st.outputs)
        if (!fs::exists(out)) return false;
    return true;
}

void stage_commit(const std::string& out_dir, const Stage& st) {
    ordered_json m;
    m["version"] = kVersion;
    m["params"] = fnv1a64_hex(st.params);
    json inputs = json::object();
    for (const std::string& in : st.inputs) inputs[in] = file_hash_hex(in);
    m["inputs"] = inputs;
    m["outputs"] = st.outputs;
    write_file(stage_manifest_path(out_dir, st.name), m.dump(2) + "\n");
}

// Runs `fn` unless the stage's cached outputs are still valid.
template <typename Fn>
void run_stage(const std::string& out_dir, const Stage& st, Fn&& fn) {
    for (const std::string& in : st.inputs)
        if (std::find(st.outputs.begin(), st.outputs.end(), in) != st.outputs.end())
            throw PipelineError("stage " + st.name + " reads its own output " + in);
    if (stage_is_current(out_dir, st)) return;
    // a failed stage must not look complete on resume
    std::error_code ec;
    fs::remove(stage_manifest_path(out_dir, st.name), ec);
    fn();
    stage_commit(out_dir, st);
}

void parallel_tasks(std::vector<std::function<void()>> tasks, int threads) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    if (threads == 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            try {
                tasks[i]();
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string train_params_string(const nmt::TrainConfig& c) {
    return format_double(c.initial_lr, 9) + "," + format_double(c.lr_decay, 9) + "," +
           format_double(c.lr_floor, 9) + "," + format_double(c.clip_norm, 9) + "," +
           format_double(c.dropout, 9) + "," + std::to_string(c.batch_size) + "," +
           std::to_string(c.max_epochs) + "," + std::to_string(c.seed);
}

std::string model_params_string(const ExperimentConfig& c) {
    return std::to_string(c.d_emb) + "," + std::to_string(c.d_hid) + "," +
           std::to_string(c.enc_layers) + "," + std::to_string(c.dec_layers) + "," +
           (c.input_feeding ? "feed" : "nofeed") + "," + std::to_string(c.min_freq_src) + "," +
           std::to_string(c.min_freq_tgt);
}

// Per-phase seed derivations; scoring reports these in the cells.
std::uint64_t parent_seed(const ExperimentConfig& c, const std::string& sys) {
    return mix_seed(c.seed, fnv1a64("parent:" + sys));
}
std::uint64_t finetune_seed(const ExperimentConfig& c, const std::string& sys, std::size_t size) {
    return mix_seed(c.seed, fnv1a64("ft:" + sys + ":" + std::to_string(size)));
}
std::uint64_t scratch_seed(const ExperimentConfig& c, std::size_t size) {
    return mix_seed(c.seed, fnv1a64("scratch:" + std::to_string(size)));
}

std::vector<std::vector<std::string>> tokenize_lines(const std::vector<std::string>& lines) {
    std::vector<std::vector<std::string>> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back(split_ws(l));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// run_experiment

EvalReport run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                          const RunOptions& options) {
    config.validate();

    if (options.force && fs::exists(out_dir)) fs::remove_all(out_dir);
    if (!options.resume && fs::exists(out_dir) && !fs::is_empty(out_dir))
        throw PipelineError("output directory is not empty (use force or resume): " + out_dir);
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/stages");
    fs::create_directories(out_dir + "/data");
    fs::create_directories(out_dir + "/models");
    fs::create_directories(out_dir + "/hyps");
    DirLock lock(out_dir);

    const std::string data_dir = out_dir + "/data";
    const std::string model_dir = out_dir + "/models";
    const std::string hyp_dir = out_dir + "/hyps";

    // -- stage: synthetic data generation + splits ---------------------------
    const std::size_t n_total = config.parent_train + config.child_pool + config.dev + config.test;
    const std::string gen_params = std::to_string(n_total) + "," + std::to_string(config.seed) +
                                   "," + format_double(config.noise, 9) + "," +
                                   std::to_string(config.parent_train) + "," +
                                   std::to_string(config.child_pool) + "," +
                                   std::to_string(config.dev) + "," + std::to_string(config.test);
    Stage data_stage{"data",
                     {config.grammar_path},
                     gen_params,
                     {data_dir + "/parent.trees", data_dir + "/parent.assist.snt",
                      data_dir + "/parent.target.snt", data_dir + "/dev.trees",
                      data_dir + "/dev.assist.snt", data_dir + "/dev.pivot.snt",
                      data_dir + "/dev.target.snt", data_dir + "/child.pivot.snt",
                      data_dir + "/child.target.snt", data_dir + "/test.pivot.snt",
                      data_dir + "/test.target.snt", data_dir + "/dict.tsv"}};
    run_stage(out_dir, data_stage, [&] {
        synthlang::Grammar grammar = synthlang::load_grammar(config.grammar_path);
        synthlang::GeneratedCorpus corpus =
            synthlang::generate_corpus(grammar, n_total, config.seed, config.noise);
        synthlang::SplitSizes sizes{config.parent_train, config.child_pool, config.dev,
                                    config.test};
        synthlang::Splits splits = synthlang::split_corpus(n_total, sizes, config.seed);

        auto emit = [&](const std::vector<std::size_t>& idx, const std::string& prefix,
                        bool with_tree, bool with_assist, bool with_pivot, bool with_target) {
            std::vector<std::string> trees, assist, pivot, target;
            for (std::size_t i : idx) {
                const synthlang::ParallelExample& ex = corpus.examples[i];
                if (with_tree) trees.push_back(treebank::serialize_tree(ex.assisting_tree));
                if (with_assist) assist.push_back(join(ex.assisting));
                if (with_pivot) pivot.push_back(join(ex.pivoted));
                if (with_target) target.push_back(join(ex.target));
            }
            if (with_tree) write_lines(data_dir + "/" + prefix + ".trees", trees);
            if (with_assist) write_lines(data_dir + "/" + prefix + ".assist.snt", assist);
            if (with_pivot) write_lines(data_dir + "/" + prefix + ".pivot.snt", pivot);
            if (with_target) write_lines(data_dir + "/" + prefix + ".target.snt", target);
        };
        emit(splits.parent, "parent", true, true, false, true);
        emit(splits.dev, "dev", true, true, true, true);
        emit(splits.child_pool, "child", false, false, true, true);
        emit(splits.test, "test", false, false, true, true);

        std::vector<std::string> dict_lines;
        for (const auto& [s, a] : corpus.dictionary) dict_lines.push_back(s + "\t" + a);
        write_lines(data_dir + "/dict.tsv", dict_lines);
    });

    // -- stages: pre-ordered parent + dev inputs per system ------------------
    auto system_src = [&](const std::string& sys, const std::string& split) {
        return data_dir + "/" + split + ".src." + sys + ".snt";
    };
    for (const std::string sys : kSystems) {
        std::string rules_path;
        if (sys == std::string("generic")) rules_path = config.rules_generic_path;
        if (sys == std::string("tuned")) rules_path = config.rules_tuned_path;

        Stage st{"preorder_" + sys,
                 {data_dir + "/parent.trees", data_dir + "/dev.trees"},
                 sys,
                 {system_src(sys, "parent"), system_src(sys, "dev")}};
        if (!rules_path.empty()) st.inputs.push_back(rules_path);
        run_stage(out_dir, st, [&] {
            if (rules_path.empty()) {
                // no pre-ordering: plain SVO yields
                for (const char* split : {"parent", "dev"}) {
                    std::vector<std::string> out;
                    for (const auto& line : read_lines(data_dir + "/" + split + std::string(".trees")))
                        out.push_back(join(treebank::tree_yield(treebank::parse_tree(line))));
                    write_lines(system_src(sys, split), out);
                }
            } else {
                preorder::RuleSet rules = preorder::load_rules(rules_path);
                for (const char* split : {"parent", "dev"})
                    preorder::preorder_corpus_file(data_dir + "/" + split + std::string(".trees"),
                                                   rules, system_src(sys, split));
            }
        });
    }

    // -- stages: parent training ---------------------------------------------
    auto parent_ckpt = [&](const std::string& sys) { return model_dir + "/parent." + sys + ".ckpt"; };
    {
        std::vector<std::function<void()>> tasks;
        for (const std::string sys : kSystems) {
            Stage st{"parent_" + sys,
                     {system_src(sys, "parent"), data_dir + "/parent.target.snt",
                      system_src(sys, "dev"), data_dir + "/dev.target.snt"},
                     model_params_string(config) + ";" + train_params_string(config.parent_training) +
                         ";" + std::to_string(config.seed),
                     {parent_ckpt(sys)}};
            tasks.push_back([&, sys, st] {
                run_stage(out_dir, st, [&] {
                    auto src = tokenize_lines(read_lines(system_src(sys, "parent")));
                    auto tgt = tokenize_lines(read_lines(data_dir + "/parent.target.snt"));
                    auto dev_src = tokenize_lines(read_lines(system_src(sys, "dev")));
                    auto dev_tgt = tokenize_lines(read_lines(data_dir + "/dev.target.snt"));

                    nmt::Vocabulary vs = nmt::Vocabulary::build(src, config.min_freq_src);
                    nmt::Vocabulary vt = nmt::Vocabulary::build(tgt, config.min_freq_tgt);
                    nmt::ModelDims dims;
                    dims.vocab_src = vs.size();
                    dims.vocab_tgt = vt.size();
                    dims.d_emb = config.d_emb;
                    dims.d_hid = config.d_hid;
                    dims.enc_layers = config.enc_layers;
                    dims.dec_layers = config.dec_layers;
                    dims.input_feeding = config.input_feeding;

                    std::uint64_t sys_seed = parent_seed(config, sys);
                    nmt::Seq2SeqModel model(dims, sys_seed);
                    nmt::TrainConfig tc = config.parent_training;
                    tc.seed = sys_seed;
                    nmt::EncodedCorpus train_c = nmt::encode_corpus(src, tgt, vs, vt);
                    nmt::EncodedCorpus dev_c = nmt::encode_corpus(dev_src, dev_tgt, vs, vt);
                    nmt::TrainResult tr = nmt::train(model, train_c, dev_c, tc);

                    nmt::save_checkpoint(parent_ckpt(sys), model, vs, vt);
                    vs.save(model_dir + "/parent." + sys + ".src.vocab");
                    vt.save(model_dir + "/parent." + sys + ".tgt.vocab");
                    ordered_json hist = ordered_json::array();
                    for (const auto& e : tr.history)
                        hist.push_back({{"epoch", e.epoch},
                                        {"train_loss", e.train_loss},
                                        {"dev_loss", e.dev_loss},
                                        {"lr", e.lr}});
                    ordered_json hj{{"history", hist},
                                    {"best_epoch", tr.best_epoch},
                                    {"final_lr", tr.final_lr},
                                    {"diverged", tr.diverged},
                                    {"precision", tr.precision}};
                    write_file(model_dir + "/parent." + sys + ".history.json", hj.dump(2) + "\n");
                });
            });
        }
        parallel_tasks(std::move(tasks), config.threads);
    }

    // -- stages: fine-tuning ladder + scratch baseline ------------------------
    auto ladder_ckpt = [&](const std::string& sys, std::size_t size) {
        return model_dir + "/" + sys + "." + std::to_string(size) + ".ckpt";
    };
    {
        std::vector<std::function<void()>> tasks;
        for (std::size_t size : config.ladder) {
            if (size == 0) continue;
            for (const std::string sys : kSystems) {
                Stage st{"ft_" + sys + "_" + std::to_string(size),
                         {parent_ckpt(sys), data_dir + "/child.pivot.snt",
                          data_dir + "/child.target.snt", data_dir + "/dev.pivot.snt",
                          data_dir + "/dev.target.snt"},
                         train_params_string(config.finetune_training) + ";" +
                             std::to_string(size) + ";" + std::to_string(config.seed),
                         {ladder_ckpt(sys, size)}};
                tasks.push_back([&, sys, size, st] {
                    run_stage(out_dir, st, [&] {
                        nmt::Checkpoint ck = nmt::load_checkpoint(parent_ckpt(sys));
                        auto src = tokenize_lines(read_lines(data_dir + "/child.pivot.snt"));
                        auto tgt = tokenize_lines(read_lines(data_dir + "/child.target.snt"));
                        src.resize(size);
                        tgt.resize(size);
                        auto dev_src = tokenize_lines(read_lines(data_dir + "/dev.pivot.snt"));
                        auto dev_tgt = tokenize_lines(read_lines(data_dir + "/dev.target.snt"));
                        nmt::TrainConfig tc = config.finetune_training;
                        tc.seed = finetune_seed(config, sys, size);
                        nmt::EncodedCorpus child_c =
                            nmt::encode_corpus(src, tgt, ck.src_vocab, ck.tgt_vocab);
                        nmt::EncodedCorpus dev_c =
                            nmt::encode_corpus(dev_src, dev_tgt, ck.src_vocab, ck.tgt_vocab);
                        nmt::finetune(ck.model, child_c, dev_c, tc);
                        nmt::save_checkpoint(ladder_ckpt(sys, size), ck.model, ck.src_vocab,
                                             ck.tgt_vocab);
                    });
                });
            }
            // from-scratch baseline, trained only on the child subset
            Stage st{"scratch_" + std::to_string(size),
                     {data_dir + "/child.pivot.snt", data_dir + "/child.target.snt",
                      data_dir + "/dev.pivot.snt", data_dir + "/dev.target.snt"},
                     model_params_string(config) + ";" +
                         train_params_string(config.finetune_training) + ";" +
                         std::to_string(size) + ";" + std::to_string(config.seed),
                     {ladder_ckpt(kBaseline, size)}};
            tasks.push_back([&, size, st] {
                run_stage(out_dir, st, [&] {
                    auto src = tokenize_lines(read_lines(data_dir + "/child.pivot.snt"));
                    auto tgt = tokenize_lines(read_lines(data_dir + "/child.target.snt"));
                    src.resize(size);
                    tgt.resize(size);
                    auto dev_src = tokenize_lines(read_lines(data_dir + "/dev.pivot.snt"));
                    auto dev_tgt = tokenize_lines(read_lines(data_dir + "/dev.target.snt"));
                    nmt::Vocabulary vs = nmt::Vocabulary::build(src, config.min_freq_src);
                    nmt::Vocabulary vt = nmt::Vocabulary::build(tgt, config.min_freq_tgt);
                    nmt::ModelDims dims;
                    dims.vocab_src = vs.size();
                    dims.vocab_tgt = vt.size();
                    dims.d_emb = config.d_emb;
                    dims.d_hid = config.d_hid;
                    dims.enc_layers = config.enc_layers;
                    dims.dec_layers = config.dec_layers;
                    dims.input_feeding = config.input_feeding;
                    std::uint64_t seed = scratch_seed(config, size);
                    nmt::Seq2SeqModel model(dims, seed);
                    nmt::TrainConfig tc = config.finetune_training;
                    tc.seed = seed;
                    nmt::EncodedCorpus child_c = nmt::encode_corpus(src, tgt, vs, vt);
                    nmt::EncodedCorpus dev_c = nmt::encode_corpus(dev_src, dev_tgt, vs, vt);
                    nmt::train(model, child_c, dev_c, tc);
                    nmt::save_checkpoint(ladder_ckpt(kBaseline, size), model, vs, vt);
                });
            });
        }
        parallel_tasks(std::move(tasks), config.threads);
    }

    // -- stages: decoding ------------------------------------------------------
    auto hyp_path = [&](const std::string& sys, std::size_t size) {
        return hyp_dir + "/" + sys + "." + std::to_string(size) + ".snt";
    };
    {
        std::vector<std::function<void()>> tasks;
        for (std::size_t size : config.ladder) {
            for (const std::string sys : kSystems) {
                std::string ckpt = size == 0 ? parent_ckpt(sys) : ladder_ckpt(sys, size);
                Stage st{"decode_" + sys + "_" + std::to_string(size),
                         {ckpt, data_dir + "/test.pivot.snt"},
                         std::to_string(config.decode_max_len),
                         {hyp_path(sys, size)}};
                tasks.push_back([&, sys, size, ckpt, st] {
                    run_stage(out_dir, st, [&] {
                        nmt::Checkpoint ck = nmt::load_checkpoint(ckpt);
                        auto src = tokenize_lines(read_lines(data_dir + "/test.pivot.snt"));
                        auto hyps = nmt::decode_corpus(ck.model, ck.src_vocab, ck.tgt_vocab, src,
                                                       config.decode_max_len);
                        std::vector<std::string> lines;
                        lines.reserve(hyps.size());
                        for (const auto& h : hyps) lines.push_back(join(h));
                        write_lines(hyp_path(sys, size), lines);
                    });
                });
            }
            if (size > 0) {
                Stage st{"decode_scratch_" + std::to_string(size),
                         {ladder_ckpt(kBaseline, size), data_dir + "/test.pivot.snt"},
                         std::to_string(config.decode_max_len),
                         {hyp_path(kBaseline, size)}};
                tasks.push_back([&, size, st] {
                    run_stage(out_dir, st, [&] {
                        nmt::Checkpoint ck = nmt::load_checkpoint(ladder_ckpt(kBaseline, size));
                        auto src = tokenize_lines(read_lines(data_dir + "/test.pivot.snt"));
                        auto hyps = nmt::decode_corpus(ck.model, ck.src_vocab, ck.tgt_vocab, src,
                                                       config.decode_max_len);
                        std::vector<std::string> lines;
                        lines.reserve(hyps.size());
                        for (const auto& h : hyps) lines.push_back(join(h));
                        write_lines(hyp_path(kBaseline, size), lines);
                    });
                });
            }
        }
        parallel_tasks(std::move(tasks), config.threads);
    }

    // -- scoring + report -------------------------------------------------------
    EvalReport report;
    report.ladder = config.ladder;
    report.provenance.artifact_version = kVersion;
    report.provenance.config_hash = config.config_hash;
    report.provenance.grammar_hash = file_hash_hex(config.grammar_path);
    report.provenance.rules_generic_hash = file_hash_hex(config.rules_generic_path);
    report.provenance.rules_tuned_hash = file_hash_hex(config.rules_tuned_path);
    report.provenance.seed = config.seed;
    report.provenance.lebleu_threshold = config.lebleu_threshold;
    report.provenance.bootstrap_n = config.bootstrap_n;

    metrics::Corpus refs = metrics::tokenize_corpus(read_lines(data_dir + "/test.target.snt"));
    auto load_hyps = [&](const std::string& sys, std::size_t size) {
        return metrics::tokenize_corpus(read_lines(hyp_path(sys, size)));
    };

    for (std::size_t size : config.ladder) {
        Cell scratch_cell;
        scratch_cell.system = kBaseline;
        scratch_cell.child_size = size;
        if (size == 0) {
            scratch_cell.available = false;  // no model without child data
        } else {
            scratch_cell.seed = scratch_seed(config, size);
            metrics::Corpus hyps = load_hyps(kBaseline, size);
            scratch_cell.bleu = metrics::bleu(hyps, refs).score;
            scratch_cell.lebleu = metrics::lebleu(hyps, refs, config.lebleu_threshold).score;
            scratch_cell.unk = static_cast<long long>(metrics::count_unk(hyps));
            for (std::size_t k = 0; k < 5 && k < hyps.size(); ++k)
                scratch_cell.samples.push_back(join(hyps[k]));
        }
        report.cells.push_back(std::move(scratch_cell));

        std::map<std::string, metrics::Corpus> sys_hyps;
        for (const std::string sys : kSystems) {
            metrics::Corpus hyps = load_hyps(sys, size);
            Cell cell;
            cell.system = sys;
            cell.child_size = size;
            cell.seed = size == 0 ? parent_seed(config, sys) : finetune_seed(config, sys, size);
            cell.bleu = metrics::bleu(hyps, refs).score;
            cell.lebleu = metrics::lebleu(hyps, refs, config.lebleu_threshold).score;
            cell.unk = static_cast<long long>(metrics::count_unk(hyps));
            for (std::size_t k = 0; k < 5 && k < hyps.size(); ++k)
                cell.samples.push_back(join(hyps[k]));
            report.cells.push_back(std::move(cell));
            sys_hyps[sys] = std::move(hyps);
        }

        for (const std::string sys : {"generic", "tuned"}) {
            SigCell sig;
            sig.system = sys;
            sig.child_size = size;
            std::uint64_t boot_seed =
                mix_seed(config.seed, fnv1a64("boot:" + sys + ":" + std::to_string(size)));
            sig.result = metrics::paired_bootstrap(sys_hyps[sys], sys_hyps["none"], refs,
                                                   config.bootstrap_n, boot_seed);
            report.significance.push_back(std::move(sig));
        }
    }

    write_file(out_dir + "/report.jsonl", render_report_machine(report));
    write_file(out_dir + "/report.txt", render_report_text(report));
    return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string cell_text(const Cell* c, bool dagger) {
    if (!c || !c->available) return "-";
    std::string s = format_double(c->bleu, 2);
    if (dagger) s += "+";
    return s;
}

}  // namespace

std::string render_report_text(const EvalReport& report) {
    std::string out;
    out += "experiment report (version " + report.provenance.artifact_version + ")\n";
    out += "config " + report.provenance.config_hash + "  seed " +
           std::to_string(report.provenance.seed) + "\n";
    out += "rules generic " + report.provenance.rules_generic_hash + "  tuned " +
           report.provenance.rules_tuned_hash + "\n";
    out += "smoothing " + report.provenance.smoothing + "  lebleu_threshold " +
           format_double(report.provenance.lebleu_threshold, 2) + "  bootstrap_n " +
           std::to_string(report.provenance.bootstrap_n) + "  decoding " +
           report.provenance.decoding + "\n";
    out += "\n'+' marks p < 0.05 against the no-preorder system (paired bootstrap).\n";

    auto table = [&](const std::string& title, auto value) {
        std::string t = "\n== " + title + " ==\n";
        t += "child_size\tscratch\tnone\tgeneric\ttuned\n";
        for (std::size_t size : report.ladder) {
            t += std::to_string(size);
            for (const char* sys : {"scratch", "none", "generic", "tuned"}) {
                const Cell* c = report.find_cell(sys, size);
                t += "\t" + value(sys, size, c);
            }
            t += "\n";
        }
        return t;
    };

    out += table("BLEU", [&](const std::string& sys, std::size_t size, const Cell* c) {
        bool dagger = false;
        if (sys == "generic" || sys == "tuned") {
            const SigCell* s = report.find_sig(sys, size);
            dagger = s && s->result.p_value < 0.05;
        }
        return cell_text(c, dagger);
    });
    out += table("LeBLEU", [&](const std::string&, std::size_t, const Cell* c) {
        return !c || !c->available ? std::string("-") : format_double(c->lebleu, 2);
    });
    out += table("UNK count", [&](const std::string&, std::size_t, const Cell* c) {
        return !c || !c->available ? std::string("-") : std::to_string(c->unk);
    });

    out += "\n== paired bootstrap p-values vs none ==\n";
    out += "child_size\tgeneric\ttuned\n";
    for (std::size_t size : report.ladder) {
        out += std::to_string(size);
        for (const char* sys : {"generic", "tuned"}) {
            const SigCell* s = report.find_sig(sys, size);
            out += "\t" + (s ? format_double(s->result.p_value, 4) : std::string("-"));
        }
        out += "\n";
    }

    out += "\n== decode samples (first test sentences) ==\n";
    for (const Cell& c : report.cells) {
        if (!c.available || c.samples.empty()) continue;
        out += c.system + " @" + std::to_string(c.child_size) + ":\n";
        for (const auto& s : c.samples) out += "  " + s + "\n";
    }
    return out;
}

std::string render_report_machine(const EvalReport& report) {
    std::string out;
    ordered_json meta{{"record", "meta"},
                      {"artifact_version", report.provenance.artifact_version},
                      {"config_hash", report.provenance.config_hash},
                      {"grammar_hash", report.provenance.grammar_hash},
                      {"rules_generic_hash", report.provenance.rules_generic_hash},
                      {"rules_tuned_hash", report.provenance.rules_tuned_hash},
                      {"seed", report.provenance.seed},
                      {"lebleu_threshold", report.provenance.lebleu_threshold},
                      {"bootstrap_n", report.provenance.bootstrap_n},
                      {"smoothing", report.provenance.smoothing},
                      {"decoding", report.provenance.decoding},
                      {"lr_trigger", report.provenance.lr_trigger},
                      {"ladder", report.ladder}};
    out += meta.dump() + "\n";
    for (const Cell& c : report.cells) {
        ordered_json j{{"record", "cell"},      {"system", c.system},
                       {"child_size", c.child_size}, {"available", c.available},
                       {"seed", c.seed},        {"bleu", c.bleu},
                       {"lebleu", c.lebleu},    {"unk", c.unk},
                       {"samples", c.samples}};
        out += j.dump() + "\n";
    }
    for (const SigCell& s : report.significance) {
        ordered_json j{{"record", "sig"},
                       {"system", s.system},
                       {"child_size", s.child_size},
                       {"p_value", s.result.p_value},
                       {"n_resamples", s.result.n_resamples},
                       {"seed", s.result.seed},
                       {"wins_a", s.result.wins_a},
                       {"wins_b", s.result.wins_b},
                       {"ties", s.result.ties},
                       {"score_a", s.result.score_a},
                       {"score_b", s.result.score_b},
                       {"observed_winner", std::string(1, s.result.observed_winner)}};
        out += j.dump() + "\n";
    }
    return out;
}

EvalReport parse_report_machine(const std::string& text) {
    EvalReport report;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string record = j.at("record").get<std::string>();
        if (record == "meta") {
            report.provenance.artifact_version = j.at("artifact_version").get<std::string>();
            report.provenance.config_hash = j.at("config_hash").get<std::string>();
            report.provenance.grammar_hash = j.at("grammar_hash").get<std::string>();
            report.provenance.rules_generic_hash = j.at("rules_generic_hash").get<std::string>();
            report.provenance.rules_tuned_hash = j.at("rules_tuned_hash").get<std::string>();
            report.provenance.seed = j.at("seed").get<std::uint64_t>();
            report.provenance.lebleu_threshold = j.at("lebleu_threshold").get<double>();
            report.provenance.bootstrap_n = j.at("bootstrap_n").get<int>();
            report.provenance.smoothing = j.at("smoothing").get<std::string>();
            report.provenance.decoding = j.at("decoding").get<std::string>();
            report.provenance.lr_trigger = j.at("lr_trigger").get<std::string>();
            report.ladder = j.at("ladder").get<std::vector<std::size_t>>();
        } else if (record == "cell") {
            Cell c;
            c.system = j.at("system").get<std::string>();
            c.child_size = j.at("child_size").get<std::size_t>();
            c.available = j.at("available").get<bool>();
            c.seed = j.at("seed").get<std::uint64_t>();
            c.bleu = j.at("bleu").get<double>();
            c.lebleu = j.at("lebleu").get<double>();
            c.unk = j.at("unk").get<long long>();
            c.samples = j.at("samples").get<std::vector<std::string>>();
            report.cells.push_back(std::move(c));
        } else if (record == "sig") {
            SigCell s;
            s.system = j.at("system").get<std::string>();
            s.child_size = j.at("child_size").get<std::size_t>();
            s.result.p_value = j.at("p_value").get<double>();
            s.result.n_resamples = j.at("n_resamples").get<int>();
            s.result.seed = j.at("seed").get<std::uint64_t>();
            s.result.wins_a = j.at("wins_a").get<int>();
            s.result.wins_b = j.at("wins_b").get<int>();
            s.result.ties = j.at("ties").get<int>();
            s.result.score_a = j.at("score_a").get<double>();
            s.result.score_b = j.at("score_b").get<double>();
            s.result.observed_winner = j.at("observed_winner").get<std::string>().at(0);
            report.significance.push_back(std::move(s));
        } else {
            throw PipelineError("unknown report record type: " + record);
        }
    }
    return report;
}

EvalReport load_report(const std::string& out_dir) {
    return parse_report_machine(read_file(out_dir + "/report.jsonl"));
}

}  // namespace orderkit::pipeline
