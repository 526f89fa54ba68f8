#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "orderkit/nmt/train.hpp"

namespace {

using namespace orderkit;
namespace fs = std::filesystem;

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path.string() : (base / path).lexically_normal().string();
}

struct CliConfig {
    nmt::ModelDims dims;  // vocab sizes filled after vocab build
    int min_freq_src = 2, min_freq_tgt = 2;
    nmt::TrainConfig training;
    std::string train_src, train_tgt, dev_src, dev_tgt;
};

CliConfig load_cli_config(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, true, true);
    fs::path base = fs::absolute(fs::path(path)).parent_path();
    CliConfig c;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.contains("d_emb")) c.dims.d_emb = m.at("d_emb").get<int>();
        if (m.contains("d_hid")) c.dims.d_hid = m.at("d_hid").get<int>();
        if (m.contains("enc_layers")) c.dims.enc_layers = m.at("enc_layers").get<int>();
        if (m.contains("dec_layers")) c.dims.dec_layers = m.at("dec_layers").get<int>();
        if (m.contains("input_feeding")) c.dims.input_feeding = m.at("input_feeding").get<bool>();
        if (m.contains("cell") && m.at("cell").get<std::string>() != "gru")
            throw Error("only the gru cell is built");
    }
    if (j.contains("vocab")) {
        const auto& v = j.at("vocab");
        if (v.contains("min_freq_src")) c.min_freq_src = v.at("min_freq_src").get<int>();
        if (v.contains("min_freq_tgt")) c.min_freq_tgt = v.at("min_freq_tgt").get<int>();
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        if (t.contains("initial_lr")) c.training.initial_lr = t.at("initial_lr").get<double>();
        if (t.contains("lr_decay")) c.training.lr_decay = t.at("lr_decay").get<double>();
        if (t.contains("lr_floor")) c.training.lr_floor = t.at("lr_floor").get<double>();
        if (t.contains("clip_norm")) c.training.clip_norm = t.at("clip_norm").get<double>();
        if (t.contains("dropout")) c.training.dropout = t.at("dropout").get<double>();
        if (t.contains("batch_size")) c.training.batch_size = t.at("batch_size").get<int>();
        if (t.contains("max_epochs")) c.training.max_epochs = t.at("max_epochs").get<int>();
        if (t.contains("seed")) c.training.seed = t.at("seed").get<std::uint64_t>();
    }
    const auto& d = j.at("data");
    c.train_src = resolve(base, d.at("train_src").get<std::string>());
    c.train_tgt = resolve(base, d.at("train_tgt").get<std::string>());
    if (d.contains("dev_src")) c.dev_src = resolve(base, d.at("dev_src").get<std::string>());
    if (d.contains("dev_tgt")) c.dev_tgt = resolve(base, d.at("dev_tgt").get<std::string>());
    return c;
}

std::vector<std::vector<std::string>> read_tokenized(const std::string& path) {
    std::vector<std::vector<std::string>> out;
    for (const auto& line : read_lines(path)) out.push_back(split_ws(line));
    return out;
}

void print_history(const nmt::TrainResult& r) {
    for (const auto& e : r.history)
        std::cout << "epoch " << e.epoch << " lr " << format_double(e.lr, 6) << " train "
                  << format_double(e.train_loss, 4) << " dev " << format_double(e.dev_loss, 4)
                  << "\n";
    std::cout << "best epoch " << r.best_epoch << (r.diverged ? " (diverged, kept best)" : "")
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimal attention-based encoder-decoder"};
    app.require_subcommand(1);

    std::string config_path, model_path, init_path, input_path, output_path;
    int max_len = 32;

    CLI::App* train = app.add_subcommand("train", "train a model from scratch");
    train->add_option("--config", config_path, "JSON config")->required();
    train->add_option("--model", model_path, "output checkpoint")->required();

    CLI::App* finetune = app.add_subcommand("finetune", "continue training from a checkpoint");
    finetune->add_option("--config", config_path, "JSON config")->required();
    finetune->add_option("--init", init_path, "parent checkpoint")->required();
    finetune->add_option("--model", model_path, "output checkpoint")->required();

    CLI::App* decode = app.add_subcommand("decode", "greedy-decode a sentence file");
    decode->add_option("--model", model_path, "checkpoint")->required();
    decode->add_option("--input", input_path, "tokenized source file")->required();
    decode->add_option("--output", output_path, "hypothesis file")->required();
    decode->add_option("--max-len", max_len, "maximum output length");

    CLI11_PARSE(app, argc, argv);

    using namespace orderkit;
    try {
        if (train->parsed()) {
            CliConfig c = load_cli_config(config_path);
            auto src = read_tokenized(c.train_src);
            auto tgt = read_tokenized(c.train_tgt);
            nmt::Vocabulary vs = nmt::Vocabulary::build(src, c.min_freq_src);
            nmt::Vocabulary vt = nmt::Vocabulary::build(tgt, c.min_freq_tgt);
            c.dims.vocab_src = vs.size();
            c.dims.vocab_tgt = vt.size();
            nmt::Seq2SeqModel model(c.dims, c.training.seed);
            nmt::EncodedCorpus train_c = nmt::encode_corpus(src, tgt, vs, vt);
            nmt::EncodedCorpus dev_c;
            if (!c.dev_src.empty())
                dev_c = nmt::encode_corpus(read_tokenized(c.dev_src), read_tokenized(c.dev_tgt),
                                           vs, vt);
            nmt::TrainResult r = nmt::train(model, train_c, dev_c, c.training);
            nmt::save_checkpoint(model_path, model, vs, vt);
            vs.save(model_path + ".src.vocab");
            vt.save(model_path + ".tgt.vocab");
            print_history(r);
        } else if (finetune->parsed()) {
            CliConfig c = load_cli_config(config_path);
            nmt::Checkpoint ck = nmt::load_checkpoint(init_path);
            auto src = read_tokenized(c.train_src);
            auto tgt = read_tokenized(c.train_tgt);
            nmt::EncodedCorpus child = nmt::encode_corpus(src, tgt, ck.src_vocab, ck.tgt_vocab);
            nmt::EncodedCorpus dev_c;
            if (!c.dev_src.empty())
                dev_c = nmt::encode_corpus(read_tokenized(c.dev_src), read_tokenized(c.dev_tgt),
                                           ck.src_vocab, ck.tgt_vocab);
            nmt::TrainResult r = nmt::finetune(ck.model, child, dev_c, c.training);
            nmt::save_checkpoint(model_path, ck.model, ck.src_vocab, ck.tgt_vocab);
            print_history(r);
        } else {
            nmt::Checkpoint ck = nmt::load_checkpoint(model_path);
            auto src = read_tokenized(input_path);
            auto hyps = nmt::decode_corpus(ck.model, ck.src_vocab, ck.tgt_vocab, src, max_len);
            std::vector<std::string> lines;
            for (const auto& h : hyps) lines.push_back(join(h));
            write_lines(output_path, lines);
            std::cout << "decoded " << lines.size() << " sentences\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
