#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orderkit/nmt/model.hpp"
#include "orderkit/nmt/vocab.hpp"

namespace orderkit::nmt {

struct TrainConfig {
    double initial_lr = 1.0;
    double lr_decay = 0.5;     // applied after an epoch without dev improvement
    double lr_floor = 0.001;   // training stops once lr falls below this
    double clip_norm = 5.0;    // global gradient-norm clip
    double dropout = 0.1;
    int batch_size = 16;
    int max_epochs = 50;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double lr = 0.0;  // learning rate in effect during this epoch

    bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = -1;      // epoch of the checkpointed (returned) model
    double best_dev = 0.0;
    double final_lr = 0.0;    // lr after the last decay, may be below the floor
    bool diverged = false;    // non-finite loss hit; model is the last good checkpoint
    std::string precision = "float64";
};

// One encoded sentence pair: src = plain token ids, tgt = BOS ... EOS.
struct Example {
    std::vector<int> src, tgt;
};
using EncodedCorpus = std::vector<Example>;

EncodedCorpus encode_corpus(const std::vector<std::vector<std::string>>& src,
                            const std::vector<std::vector<std::string>>& tgt,
                            const Vocabulary& vocab_src, const Vocabulary& vocab_tgt);

// Mean token cross-entropy with dropout off.
double evaluate_loss(const Seq2SeqModel& model, const EncodedCorpus& corpus, int batch_size = 32);

// SGD with gradient clipping. Sentences are shuffled per epoch, bucketed by
// source length within shuffled chunks, and padded per batch. The learning
// rate decays by lr_decay after any epoch whose dev loss does not improve
// on the best so far; training stops when the rate falls below lr_floor or
// max_epochs is reached. The model ends at the best-dev checkpoint.
TrainResult train(Seq2SeqModel& model, const EncodedCorpus& train_corpus,
                  const EncodedCorpus& dev_corpus, const TrainConfig& config);

// Identical contract to train, except an empty corpus is a no-op (the
// zero-child-corpus scenario) rather than an error.
TrainResult finetune(Seq2SeqModel& model, const EncodedCorpus& child_corpus,
                     const EncodedCorpus& dev_corpus, const TrainConfig& config);

// Greedy decoding of a tokenized corpus; unknown output ids render as the
// target vocabulary's unk token.
std::vector<std::vector<std::string>> decode_corpus(const Seq2SeqModel& model,
                                                    const Vocabulary& vocab_src,
                                                    const Vocabulary& vocab_tgt,
                                                    const std::vector<std::vector<std::string>>& src,
                                                    int max_len = 32);

// Single-file checkpoint: versioned text manifest (dims, vocab hashes,
// seed, precision) followed by raw little-endian float64 parameters, with
// both vocabularies embedded.
void save_checkpoint(const std::string& path, const Seq2SeqModel& model, const Vocabulary& src,
                     const Vocabulary& tgt);
struct Checkpoint {
    Seq2SeqModel model;
    Vocabulary src_vocab, tgt_vocab;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace orderkit::nmt
