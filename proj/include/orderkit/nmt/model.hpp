#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "orderkit/nmt/vocab.hpp"
#include "orderkit/util.hpp"

namespace orderkit::nmt {

struct ModelDims {
    int vocab_src = 0;
    int vocab_tgt = 0;
    int d_emb = 32;
    int d_hid = 32;
    int enc_layers = 1;
    int dec_layers = 1;
    bool input_feeding = false;

    bool operator==(const ModelDims&) const = default;
};

// Named segment of the flat parameter store.
struct Segment {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;  // 1 for vectors
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Deterministic flat layout of every weight matrix; gradients share the
// same indexing. Total size is the closed-form parameter count:
//   gru(d_in)  = 3*(d_hid*d_in + d_hid^2 + d_hid)
//   encoder    = sum_l 2*gru(l==0 ? d_emb : 2*d_hid)          (bidirectional)
//   decoder    = sum_l gru(l==0 ? d_emb+2*d_hid+feed*d_hid : d_hid)
//   dec init   = dec_layers*(2*d_hid^2 + d_hid)
//   attention  = d_hid^2 + 2*d_hid^2 + d_hid
//   readout    = 3*d_hid^2 + d_hid
//   embeddings = (vocab_src + vocab_tgt)*d_emb
//   projection = vocab_tgt*d_hid + vocab_tgt
class ParamLayout {
  public:
    explicit ParamLayout(const ModelDims& dims);

    const Segment& at(const std::string& name) const;
    std::size_t total() const { return total_; }
    const std::vector<Segment>& segments() const { return segments_; }

  private:
    std::vector<Segment> segments_;
    std::map<std::string, std::size_t> index_;
    std::size_t total_ = 0;

    void add(const std::string& name, int rows, int cols);
};

std::size_t parameter_count(const ModelDims& dims);

// Padded id matrices; rows are sentences, PAD-filled to equal width.
// Target rows must begin with BOS and end with EOS before any padding.
struct Batch {
    std::vector<std::vector<int>> src;
    std::vector<std::vector<int>> tgt;
};

// Activation cache for one batch (opaque to callers; backward consumes it,
// tests inspect attention weights through attention_matrix).
struct StepCache;
struct SentenceCache;
struct ForwardCache;

struct ForwardResult {
    double loss = 0.0;       // mean cross-entropy over non-PAD target positions
    long long n_tokens = 0;  // number of scored target positions
    std::shared_ptr<ForwardCache> cache;
};

class Seq2SeqModel {
  public:
    Seq2SeqModel() = default;
    Seq2SeqModel(const ModelDims& dims, std::uint64_t seed);  // uniform [-0.1, 0.1]

    const ModelDims& dims() const { return dims_; }
    const ParamLayout& layout() const { return *layout_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::uint64_t init_seed() const { return init_seed_; }

    // Teacher-forced loss. dropout_rate > 0 with a non-null rng applies
    // inverted dropout to encoder annotations and decoder readouts.
    // Throws NmtError on out-of-range ids or non-finite loss.
    ForwardResult forward_loss(const Batch& batch, double dropout_rate = 0.0,
                               Rng* dropout_rng = nullptr) const;

    // Gradient for every parameter, same flat indexing as params().
    std::vector<double> backward(const ForwardResult& fwd) const;

    // Attention weights [tgt_steps x src_width] for sentence b of the batch
    // that produced `fwd`; PAD source columns are exactly 0.
    std::vector<std::vector<double>> attention_matrix(const ForwardResult& fwd, std::size_t b,
                                                      std::size_t src_width) const;

    // Argmax decoding until EOS or max_len; ties break toward the lowest id.
    std::vector<int> greedy_decode(const std::vector<int>& src_ids, int max_len) const;

    // Parent-to-child initialization. With equal vocabularies this is an
    // exact parameter copy; otherwise embedding/projection rows are copied
    // by token identity and new rows keep their fresh initialization.
    // Throws NmtError if the non-vocabulary dimensions differ.
    static Seq2SeqModel transfer_init(const Seq2SeqModel& parent, const Vocabulary& parent_src,
                                      const Vocabulary& parent_tgt, const Vocabulary& child_src,
                                      const Vocabulary& child_tgt, std::uint64_t seed);
    // Same, with the child shape requested explicitly; any non-vocabulary
    // dimension differing from the parent's is rejected.
    static Seq2SeqModel transfer_init(const Seq2SeqModel& parent, const Vocabulary& parent_src,
                                      const Vocabulary& parent_tgt, const Vocabulary& child_src,
                                      const Vocabulary& child_tgt, std::uint64_t seed,
                                      const ModelDims& child_dims);

    bool operator==(const Seq2SeqModel& o) const {
        return dims_ == o.dims_ && params_ == o.params_;
    }

  private:
    ModelDims dims_;
    std::shared_ptr<const ParamLayout> layout_;
    std::vector<double> params_;
    std::uint64_t init_seed_ = 0;

    friend struct ModelOps;
};

}  // namespace orderkit::nmt
