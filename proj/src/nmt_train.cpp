#include "orderkit/nmt/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace orderkit::nmt {

void TrainConfig::validate() const {
    if (!(initial_lr > lr_floor) || !(lr_floor > 0))
        throw NmtError("require initial_lr > lr_floor > 0");
    if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw NmtError("require 0 < lr_decay < 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw NmtError("require dropout in [0,1)");
    if (batch_size <= 0 || max_epochs <= 0) throw NmtError("batch_size and max_epochs must be > 0");
}

EncodedCorpus encode_corpus(const std::vector<std::vector<std::string>>& src,
                            const std::vector<std::vector<std::string>>& tgt,
                            const Vocabulary& vocab_src, const Vocabulary& vocab_tgt) {
    if (src.size() != tgt.size()) throw NmtError("parallel corpus sides differ in length");
    EncodedCorpus out;
    out.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        Example ex;
        ex.src = vocab_src.encode(src[i]);
        ex.tgt.push_back(Vocabulary::kBos);
        for (int id : vocab_tgt.encode(tgt[i])) ex.tgt.push_back(id);
        ex.tgt.push_back(Vocabulary::kEos);
        out.push_back(std::move(ex));
    }
    return out;
}

namespace {

Batch make_batch(const EncodedCorpus& corpus, const std::vector<std::size_t>& idx,
                 std::size_t begin, std::size_t end) {
    Batch b;
    std::size_t src_w = 0, tgt_w = 0;
    for (std::size_t k = begin; k < end; ++k) {
        src_w = std::max(src_w, corpus[idx[k]].src.size());
        tgt_w = std::max(tgt_w, corpus[idx[k]].tgt.size());
    }
    for (std::size_t k = begin; k < end; ++k) {
        const Example& ex = corpus[idx[k]];
        std::vector<int> s = ex.src, t = ex.tgt;
        s.resize(src_w, Vocabulary::kPad);
        t.resize(tgt_w, Vocabulary::kPad);
        b.src.push_back(std::move(s));
        b.tgt.push_back(std::move(t));
    }
    return b;
}

}  // namespace

double evaluate_loss(const Seq2SeqModel& model, const EncodedCorpus& corpus, int batch_size) {
    if (corpus.empty()) return 0.0;
    std::vector<std::size_t> idx(corpus.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    double loss_sum = 0.0;
    long long tokens = 0;
    for (std::size_t at = 0; at < corpus.size(); at += batch_size) {
        std::size_t end = std::min(corpus.size(), at + static_cast<std::size_t>(batch_size));
        Batch b = make_batch(corpus, idx, at, end);
        ForwardResult r = model.forward_loss(b);
        loss_sum += r.loss * static_cast<double>(r.n_tokens);
        tokens += r.n_tokens;
    }
    return tokens > 0 ? loss_sum / static_cast<double>(tokens) : 0.0;
}

TrainResult train(Seq2SeqModel& model, const EncodedCorpus& train_corpus,
                  const EncodedCorpus& dev_corpus, const TrainConfig& config) {
    config.validate();
    if (train_corpus.empty()) throw NmtError("training corpus is empty");

    TrainResult result;
    double lr = config.initial_lr;
    std::vector<double> best_params = model.params();
    double best_dev = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    // chunks of this many sentences are length-bucketed after the shuffle
    const std::size_t chunk = static_cast<std::size_t>(config.batch_size) * 16;

    for (int epoch = 0; epoch < config.max_epochs && lr >= config.lr_floor; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, 0x700 + static_cast<std::uint64_t>(epoch)));
        Rng dropout_rng(mix_seed(config.seed, 0xd00 + static_cast<std::uint64_t>(epoch)));

        std::vector<std::size_t> idx(train_corpus.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[shuffle_rng.next_below(i)]);
        for (std::size_t at = 0; at < idx.size(); at += chunk) {
            std::size_t end = std::min(idx.size(), at + chunk);
            std::stable_sort(idx.begin() + at, idx.begin() + end,
                             [&](std::size_t a, std::size_t b) {
                                 return train_corpus[a].src.size() < train_corpus[b].src.size();
                             });
        }

        double loss_sum = 0.0;
        long long tokens = 0;
        bool bad = false;
        for (std::size_t at = 0; at < idx.size() && !bad; at += config.batch_size) {
            std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(config.batch_size));
            Batch b = make_batch(train_corpus, idx, at, end);
            ForwardResult fwd;
            try {
                fwd = model.forward_loss(b, config.dropout,
                                         config.dropout > 0.0 ? &dropout_rng : nullptr);
            } catch (const NmtError&) {
                bad = true;
                break;
            }
            loss_sum += fwd.loss * static_cast<double>(fwd.n_tokens);
            tokens += fwd.n_tokens;

            std::vector<double> grad = model.backward(fwd);
            double norm2 = 0.0;
            for (double g : grad) norm2 += g * g;
            double norm = std::sqrt(norm2);
            if (!std::isfinite(norm)) {
                bad = true;
                break;
            }
            double scale = lr;
            if (config.clip_norm > 0.0 && norm > config.clip_norm)
                scale = lr * config.clip_norm / norm;
            std::vector<double>& p = model.params();
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * grad[i];
        }

        if (bad) {
            model.params() = best_params;
            result.diverged = true;
            break;
        }

        EpochStats st;
        st.epoch = epoch;
        st.lr = lr;
        st.train_loss = tokens > 0 ? loss_sum / static_cast<double>(tokens) : 0.0;
        st.dev_loss = dev_corpus.empty() ? st.train_loss : evaluate_loss(model, dev_corpus);
        result.history.push_back(st);

        if (st.dev_loss < best_dev) {
            best_dev = st.dev_loss;
            best_params = model.params();
            best_epoch = epoch;
        } else {
            lr *= config.lr_decay;
        }
    }

    model.params() = best_params;
    result.best_epoch = best_epoch;
    result.best_dev = best_dev == std::numeric_limits<double>::infinity() ? 0.0 : best_dev;
    result.final_lr = lr;
    return result;
}

TrainResult finetune(Seq2SeqModel& model, const EncodedCorpus& child_corpus,
                     const EncodedCorpus& dev_corpus, const TrainConfig& config) {
    if (child_corpus.empty()) {
        TrainResult result;
        result.final_lr = config.initial_lr;
        return result;  // no data: model unchanged, empty history
    }
    return train(model, child_corpus, dev_corpus, config);
}

std::vector<std::vector<std::string>> decode_corpus(const Seq2SeqModel& model,
                                                    const Vocabulary& vocab_src,
                                                    const Vocabulary& vocab_tgt,
                                                    const std::vector<std::vector<std::string>>& src,
                                                    int max_len) {
    std::vector<std::vector<std::string>> out;
    out.reserve(src.size());
    for (const auto& sent : src) {
        std::vector<int> ids = model.greedy_decode(vocab_src.encode(sent), max_len);
        out.push_back(vocab_tgt.decode(ids));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic line, JSON manifest line, then params as raw
// little-endian float64.

namespace {
constexpr const char* kMagic = "OKCKPT1";

nlohmann::json vocab_to_json(const Vocabulary& v) {
    nlohmann::json tokens = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i)
        tokens.push_back({{"t", v.token(i)}, {"f", v.frequency(i)}});
    return {{"min_frequency", v.min_frequency()}, {"tokens", tokens}};
}

}  // namespace

void save_checkpoint(const std::string& path, const Seq2SeqModel& model, const Vocabulary& src,
                     const Vocabulary& tgt) {
    const ModelDims& d = model.dims();
    nlohmann::ordered_json manifest{
        {"version", kVersion},
        {"precision", "float64"},
        {"seed", model.init_seed()},
        {"dims",
         {{"vocab_src", d.vocab_src},
          {"vocab_tgt", d.vocab_tgt},
          {"d_emb", d.d_emb},
          {"d_hid", d.d_hid},
          {"enc_layers", d.enc_layers},
          {"dec_layers", d.dec_layers},
          {"input_feeding", d.input_feeding}}},
        {"param_count", model.params().size()},
        {"src_vocab_hash", src.hash()},
        {"tgt_vocab_hash", tgt.hash()},
        {"src_vocab", vocab_to_json(src)},
        {"tgt_vocab", vocab_to_json(tgt)},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NmtError("cannot write checkpoint: " + path);
    out << kMagic << '\n' << manifest.dump() << '\n';
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.params().size() * sizeof(double)));
    if (!out) throw NmtError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NmtError("cannot open checkpoint: " + path);
    std::string magic, manifest_line;
    if (!std::getline(in, magic) || magic != kMagic)
        throw NmtError("bad checkpoint magic in " + path);
    if (!std::getline(in, manifest_line)) throw NmtError("missing checkpoint manifest in " + path);
    nlohmann::json manifest = nlohmann::json::parse(manifest_line);

    ModelDims d;
    const auto& jd = manifest.at("dims");
    d.vocab_src = jd.at("vocab_src").get<int>();
    d.vocab_tgt = jd.at("vocab_tgt").get<int>();
    d.d_emb = jd.at("d_emb").get<int>();
    d.d_hid = jd.at("d_hid").get<int>();
    d.enc_layers = jd.at("enc_layers").get<int>();
    d.dec_layers = jd.at("dec_layers").get<int>();
    d.input_feeding = jd.at("input_feeding").get<bool>();

    Checkpoint ck;
    ck.model = Seq2SeqModel(d, manifest.at("seed").get<std::uint64_t>());
    std::size_t count = manifest.at("param_count").get<std::size_t>();
    if (count != ck.model.params().size())
        throw NmtError("checkpoint parameter count mismatch in " + path);
    in.read(reinterpret_cast<char*>(ck.model.params().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw NmtError("truncated checkpoint: " + path);

    auto read_vocab = [](const nlohmann::json& j) {
        std::vector<std::pair<std::string, long long>> entries;
        for (const auto& e : j.at("tokens"))
            entries.push_back({e.at("t").get<std::string>(), e.at("f").get<long long>()});
        return Vocabulary::from_entries(entries, j.at("min_frequency").get<int>());
    };
    ck.src_vocab = read_vocab(manifest.at("src_vocab"));
    ck.tgt_vocab = read_vocab(manifest.at("tgt_vocab"));
    if (ck.src_vocab.hash() != manifest.at("src_vocab_hash").get<std::string>() ||
        ck.tgt_vocab.hash() != manifest.at("tgt_vocab_hash").get<std::string>())
        throw NmtError("checkpoint vocabulary hash mismatch in " + path);
    return ck;
}

}  // namespace orderkit::nmt
