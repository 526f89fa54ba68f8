#include "orderkit/nmt/model.hpp"

#include <algorithm>
#include <cmath>

namespace orderkit::nmt {

namespace {

// y += W x, W stored row-major [rows x cols]
void addmv(const double* W, int rows, int cols, const double* x, double* y) {
    for (int i = 0; i < rows; ++i) {
        const double* row = W + static_cast<std::size_t>(i) * cols;
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] += acc;
    }
}

// dx += W^T dy
void addmv_t(const double* W, int rows, int cols, const double* dy, double* dx) {
    for (int i = 0; i < rows; ++i) {
        const double* row = W + static_cast<std::size_t>(i) * cols;
        const double d = dy[i];
        if (d == 0.0) continue;
        for (int j = 0; j < cols; ++j) dx[j] += row[j] * d;
    }
}

// dW += dy x^T
void add_outer(double* dW, int rows, int cols, const double* dy, const double* x) {
    for (int i = 0; i < rows; ++i) {
        double* row = dW + static_cast<std::size_t>(i) * cols;
        const double d = dy[i];
        if (d == 0.0) continue;
        for (int j = 0; j < cols; ++j) row[j] += d * x[j];
    }
}

void add_vec(double* y, const double* x, int n) {
    for (int i = 0; i < n; ++i) y[i] += x[i];
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax_inplace(std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter layout

void ParamLayout::add(const std::string& name, int rows, int cols) {
    index_[name] = segments_.size();
    segments_.push_back({name, total_, rows, cols});
    total_ += static_cast<std::size_t>(rows) * cols;
}

ParamLayout::ParamLayout(const ModelDims& d) {
    const int dh = d.d_hid;
    auto add_gru = [&](const std::string& prefix, int din) {
        add(prefix + ".Wz", dh, din);
        add(prefix + ".Wr", dh, din);
        add(prefix + ".Wh", dh, din);
        add(prefix + ".Uz", dh, dh);
        add(prefix + ".Ur", dh, dh);
        add(prefix + ".Uh", dh, dh);
        add(prefix + ".bz", dh, 1);
        add(prefix + ".br", dh, 1);
        add(prefix + ".bh", dh, 1);
    };

    add("emb_src", d.vocab_src, d.d_emb);
    for (int l = 0; l < d.enc_layers; ++l) {
        int din = l == 0 ? d.d_emb : 2 * dh;
        add_gru("enc" + std::to_string(l) + ".fwd", din);
        add_gru("enc" + std::to_string(l) + ".bwd", din);
    }
    for (int l = 0; l < d.dec_layers; ++l) {
        int din = l == 0 ? d.d_emb + 2 * dh + (d.input_feeding ? dh : 0) : dh;
        add_gru("dec" + std::to_string(l), din);
        add("init" + std::to_string(l) + ".W", dh, 2 * dh);
        add("init" + std::to_string(l) + ".b", dh, 1);
    }
    add("att.Wq", dh, dh);
    add("att.Wk", dh, 2 * dh);
    add("att.v", dh, 1);
    add("readout.W", dh, 3 * dh);
    add("readout.b", dh, 1);
    add("emb_tgt", d.vocab_tgt, d.d_emb);
    add("out.W", d.vocab_tgt, dh);
    add("out.b", d.vocab_tgt, 1);
}

const Segment& ParamLayout::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw NmtError("unknown parameter segment: " + name);
    return segments_[it->second];
}

std::size_t parameter_count(const ModelDims& d) { return ParamLayout(d).total(); }

// ---------------------------------------------------------------------------
// GRU cell

namespace {

struct GruView {
    const double *Wz, *Wr, *Wh, *Uz, *Ur, *Uh, *bz, *br, *bh;
    int din, dh;
};

struct GruGradView {
    double *Wz, *Wr, *Wh, *Uz, *Ur, *Uh, *bz, *br, *bh;
};

struct GruCache {
    std::vector<double> z, r, hbar, h, rh;  // rh = r * h_prev
};

GruView gru_view(const ParamLayout& layout, const double* p, const std::string& prefix, int din,
                 int dh) {
    auto seg = [&](const char* n) { return p + layout.at(prefix + n).offset; };
    return GruView{seg(".Wz"), seg(".Wr"), seg(".Wh"), seg(".Uz"), seg(".Ur"),
                   seg(".Uh"), seg(".bz"), seg(".br"), seg(".bh"), din, dh};
}

GruGradView gru_grad_view(const ParamLayout& layout, double* g, const std::string& prefix) {
    auto seg = [&](const char* n) { return g + layout.at(prefix + n).offset; };
    return GruGradView{seg(".Wz"), seg(".Wr"), seg(".Wh"), seg(".Uz"), seg(".Ur"),
                       seg(".Uh"), seg(".bz"), seg(".br"), seg(".bh")};
}

// h = (1-z)*h_prev + z*hbar;  z = sig(Wz x + Uz h_prev + bz)
// r = sig(Wr x + Ur h_prev + br);  hbar = tanh(Wh x + Uh (r*h_prev) + bh)
void gru_forward(const GruView& p, const double* x, const double* h_prev, GruCache& c) {
    const int dh = p.dh;
    c.z.assign(p.bz, p.bz + dh);
    c.r.assign(p.br, p.br + dh);
    addmv(p.Wz, dh, p.din, x, c.z.data());
    addmv(p.Uz, dh, dh, h_prev, c.z.data());
    addmv(p.Wr, dh, p.din, x, c.r.data());
    addmv(p.Ur, dh, dh, h_prev, c.r.data());
    for (int i = 0; i < dh; ++i) {
        c.z[i] = sigmoid(c.z[i]);
        c.r[i] = sigmoid(c.r[i]);
    }
    c.rh.resize(dh);
    for (int i = 0; i < dh; ++i) c.rh[i] = c.r[i] * h_prev[i];
    c.hbar.assign(p.bh, p.bh + dh);
    addmv(p.Wh, dh, p.din, x, c.hbar.data());
    addmv(p.Uh, dh, dh, c.rh.data(), c.hbar.data());
    for (int i = 0; i < dh; ++i) c.hbar[i] = std::tanh(c.hbar[i]);
    c.h.resize(dh);
    for (int i = 0; i < dh; ++i) c.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.hbar[i];
}

// Accumulates into dx and dh_prev; consumes dh (grad wrt c.h).
void gru_backward(const GruView& p, const GruGradView& g, const GruCache& c, const double* x,
                  const double* h_prev, const double* dh, double* dx, double* dh_prev) {
    const int dh_n = p.dh;
    std::vector<double> dz(dh_n), dhbar(dh_n), dag(dh_n), dar(dh_n), daz(dh_n), drh(dh_n);
    for (int i = 0; i < dh_n; ++i) {
        dz[i] = dh[i] * (c.hbar[i] - h_prev[i]);
        dhbar[i] = dh[i] * c.z[i];
        dh_prev[i] += dh[i] * (1.0 - c.z[i]);
    }
    for (int i = 0; i < dh_n; ++i) dag[i] = dhbar[i] * (1.0 - c.hbar[i] * c.hbar[i]);
    add_outer(g.Wh, dh_n, p.din, dag.data(), x);
    add_outer(g.Uh, dh_n, dh_n, dag.data(), c.rh.data());
    add_vec(g.bh, dag.data(), dh_n);
    addmv_t(p.Wh, dh_n, p.din, dag.data(), dx);
    std::fill(drh.begin(), drh.end(), 0.0);
    addmv_t(p.Uh, dh_n, dh_n, dag.data(), drh.data());
    for (int i = 0; i < dh_n; ++i) {
        dh_prev[i] += drh[i] * c.r[i];
        double dr = drh[i] * h_prev[i];
        dar[i] = dr * c.r[i] * (1.0 - c.r[i]);
        daz[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
    }
    add_outer(g.Wr, dh_n, p.din, dar.data(), x);
    add_outer(g.Ur, dh_n, dh_n, dar.data(), h_prev);
    add_vec(g.br, dar.data(), dh_n);
    addmv_t(p.Wr, dh_n, p.din, dar.data(), dx);
    addmv_t(p.Ur, dh_n, dh_n, dar.data(), dh_prev);
    add_outer(g.Wz, dh_n, p.din, daz.data(), x);
    add_outer(g.Uz, dh_n, dh_n, daz.data(), h_prev);
    add_vec(g.bz, daz.data(), dh_n);
    addmv_t(p.Wz, dh_n, p.din, daz.data(), dx);
    addmv_t(p.Uz, dh_n, dh_n, daz.data(), dh_prev);
}

}  // namespace

// ---------------------------------------------------------------------------
// Caches

struct StepCache {
    int y_prev = 0, y_out = 0;
    std::vector<double> x0;                 // decoder layer-0 input
    std::vector<GruCache> gru;              // per decoder layer
    std::vector<std::vector<double>> s_in;  // per layer: h_prev used this step
    std::vector<double> alpha;              // [S]
    std::vector<double> u;                  // [S*dh] tanh(q + k_j)
    std::vector<double> q;                  // [dh]
    std::vector<double> ctx;                // [2*dh]
    std::vector<double> hat;                // tanh readout, pre-dropout
    std::vector<double> hat_mask;           // scaled dropout mask; empty when off
    std::vector<double> hat_out;            // post-dropout readout
    std::vector<double> prob;               // softmax over target vocab
};

struct SentenceCache {
    std::vector<int> src, tgt;                              // PAD-stripped
    std::vector<std::vector<std::vector<double>>> enc_in;   // [L][S][din]
    std::vector<std::vector<GruCache>> enc_fwd, enc_bwd;    // [L][S]
    std::vector<std::vector<double>> ann;                   // [S][2dh], post-dropout
    std::vector<std::vector<double>> ann_mask;              // scaled masks; empty when off
    std::vector<double> mean_a;                             // [2dh]
    std::vector<std::vector<double>> s0;                    // [L][dh]
    std::vector<std::vector<double>> keys;                  // [S][dh]
    std::vector<StepCache> steps;
};

struct ForwardCache {
    std::vector<SentenceCache> sentences;
    double dropout_rate = 0.0;
};

// ---------------------------------------------------------------------------
// Model

Seq2SeqModel::Seq2SeqModel(const ModelDims& dims, std::uint64_t seed)
    : dims_(dims), layout_(std::make_shared<ParamLayout>(dims)), init_seed_(seed) {
    if (dims.vocab_src < 4 || dims.vocab_tgt < 4 || dims.d_emb <= 0 || dims.d_hid <= 0 ||
        dims.enc_layers <= 0 || dims.dec_layers <= 0)
        throw NmtError("invalid model dimensions");
    params_.resize(layout_->total());
    Rng rng(seed);
    for (double& w : params_) w = rng.uniform(-0.1, 0.1);
}

struct ModelOps {
    const Seq2SeqModel& m;
    const ParamLayout& L;
    const double* P;
    const ModelDims& d;

    explicit ModelOps(const Seq2SeqModel& model)
        : m(model), L(model.layout()), P(model.params().data()), d(model.dims()) {}

    const double* seg(const std::string& name) const { return P + L.at(name).offset; }

    int dec_in0() const { return d.d_emb + 2 * d.d_hid + (d.input_feeding ? d.d_hid : 0); }

    void encode(SentenceCache& sc, double dropout, Rng* rng) const {
        const int dh = d.d_hid;
        const std::size_t S = sc.src.size();
        sc.enc_in.resize(d.enc_layers);
        sc.enc_fwd.resize(d.enc_layers);
        sc.enc_bwd.resize(d.enc_layers);

        std::vector<std::vector<double>> layer_in(S);
        const double* emb = seg("emb_src");
        for (std::size_t j = 0; j < S; ++j)
            layer_in[j].assign(emb + static_cast<std::size_t>(sc.src[j]) * d.d_emb,
                               emb + static_cast<std::size_t>(sc.src[j] + 1) * d.d_emb);

        for (int l = 0; l < d.enc_layers; ++l) {
            const int din = l == 0 ? d.d_emb : 2 * dh;
            sc.enc_in[l] = layer_in;
            GruView fwd = gru_view(L, P, "enc" + std::to_string(l) + ".fwd", din, dh);
            GruView bwd = gru_view(L, P, "enc" + std::to_string(l) + ".bwd", din, dh);
            sc.enc_fwd[l].resize(S);
            sc.enc_bwd[l].resize(S);
            std::vector<double> h(dh, 0.0);
            for (std::size_t j = 0; j < S; ++j) {
                gru_forward(fwd, sc.enc_in[l][j].data(), h.data(), sc.enc_fwd[l][j]);
                h = sc.enc_fwd[l][j].h;
            }
            std::fill(h.begin(), h.end(), 0.0);
            for (std::size_t j = S; j-- > 0;) {
                gru_forward(bwd, sc.enc_in[l][j].data(), h.data(), sc.enc_bwd[l][j]);
                h = sc.enc_bwd[l][j].h;
            }
            std::vector<std::vector<double>> out(S);
            for (std::size_t j = 0; j < S; ++j) {
                out[j].resize(2 * dh);
                std::copy(sc.enc_fwd[l][j].h.begin(), sc.enc_fwd[l][j].h.end(), out[j].begin());
                std::copy(sc.enc_bwd[l][j].h.begin(), sc.enc_bwd[l][j].h.end(),
                          out[j].begin() + dh);
            }
            layer_in = std::move(out);
        }

        sc.ann = std::move(layer_in);
        if (dropout > 0.0 && rng) {
            sc.ann_mask.resize(S);
            const double keep = 1.0 - dropout;
            for (std::size_t j = 0; j < S; ++j) {
                sc.ann_mask[j].resize(2 * dh);
                for (int i = 0; i < 2 * dh; ++i) {
                    double mask = rng->uniform() < dropout ? 0.0 : 1.0 / keep;
                    sc.ann_mask[j][i] = mask;
                    sc.ann[j][i] *= mask;
                }
            }
        }

        sc.mean_a.assign(2 * dh, 0.0);
        for (std::size_t j = 0; j < S; ++j) add_vec(sc.mean_a.data(), sc.ann[j].data(), 2 * dh);
        for (double& x : sc.mean_a) x /= static_cast<double>(S);

        sc.s0.resize(d.dec_layers);
        for (int l = 0; l < d.dec_layers; ++l) {
            std::string n = std::to_string(l);
            sc.s0[l].assign(seg("init" + n + ".b"), seg("init" + n + ".b") + dh);
            addmv(seg("init" + n + ".W"), dh, 2 * dh, sc.mean_a.data(), sc.s0[l].data());
            for (double& x : sc.s0[l]) x = std::tanh(x);
        }

        sc.keys.resize(S);
        for (std::size_t j = 0; j < S; ++j) {
            sc.keys[j].assign(dh, 0.0);
            addmv(seg("att.Wk"), dh, 2 * dh, sc.ann[j].data(), sc.keys[j].data());
        }
    }

    // One attention + decoder-stack + readout step. `state` holds the
    // previous step's hidden per layer and is updated in place.
    void step(SentenceCache& sc, StepCache& st, std::vector<std::vector<double>>& state,
              const std::vector<double>& prev_hat, int y_prev, double dropout, Rng* rng) const {
        const int dh = d.d_hid;
        const std::size_t S = sc.src.size();
        st.y_prev = y_prev;

        st.q.assign(dh, 0.0);
        addmv(seg("att.Wq"), dh, dh, state.back().data(), st.q.data());
        st.u.resize(S * dh);
        std::vector<double> scores(S);
        const double* v = seg("att.v");
        for (std::size_t j = 0; j < S; ++j) {
            double* uj = st.u.data() + j * dh;
            double e = 0.0;
            for (int i = 0; i < dh; ++i) {
                uj[i] = std::tanh(st.q[i] + sc.keys[j][i]);
                e += v[i] * uj[i];
            }
            scores[j] = e;
        }
        softmax_inplace(scores);
        st.alpha = scores;
        st.ctx.assign(2 * dh, 0.0);
        for (std::size_t j = 0; j < S; ++j) {
            const double a = st.alpha[j];
            const double* aj = sc.ann[j].data();
            for (int i = 0; i < 2 * dh; ++i) st.ctx[i] += a * aj[i];
        }

        st.x0.resize(dec_in0());
        const double* etgt = seg("emb_tgt");
        std::copy(etgt + static_cast<std::size_t>(y_prev) * d.d_emb,
                  etgt + static_cast<std::size_t>(y_prev + 1) * d.d_emb, st.x0.begin());
        std::copy(st.ctx.begin(), st.ctx.end(), st.x0.begin() + d.d_emb);
        if (d.input_feeding)
            std::copy(prev_hat.begin(), prev_hat.end(), st.x0.begin() + d.d_emb + 2 * dh);

        st.gru.resize(d.dec_layers);
        st.s_in.resize(d.dec_layers);
        const double* x = st.x0.data();
        for (int l = 0; l < d.dec_layers; ++l) {
            const int din = l == 0 ? dec_in0() : dh;
            GruView cell = gru_view(L, P, "dec" + std::to_string(l), din, dh);
            st.s_in[l] = state[l];
            gru_forward(cell, x, state[l].data(), st.gru[l]);
            state[l] = st.gru[l].h;
            x = state[l].data();
        }

        std::vector<double> cat(3 * dh);
        std::copy(state.back().begin(), state.back().end(), cat.begin());
        std::copy(st.ctx.begin(), st.ctx.end(), cat.begin() + dh);
        st.hat.assign(seg("readout.b"), seg("readout.b") + dh);
        addmv(seg("readout.W"), dh, 3 * dh, cat.data(), st.hat.data());
        for (double& xv : st.hat) xv = std::tanh(xv);

        st.hat_out = st.hat;
        if (dropout > 0.0 && rng) {
            st.hat_mask.resize(dh);
            const double keep = 1.0 - dropout;
            for (int i = 0; i < dh; ++i) {
                double mask = rng->uniform() < dropout ? 0.0 : 1.0 / keep;
                st.hat_mask[i] = mask;
                st.hat_out[i] *= mask;
            }
        }

        st.prob.assign(seg("out.b"), seg("out.b") + d.vocab_tgt);
        addmv(seg("out.W"), d.vocab_tgt, dh, st.hat_out.data(), st.prob.data());
        softmax_inplace(st.prob);
    }
};

ForwardResult Seq2SeqModel::forward_loss(const Batch& batch, double dropout_rate,
                                         Rng* dropout_rng) const {
    if (batch.src.size() != batch.tgt.size())
        throw NmtError("batch src/tgt row counts differ");
    ModelOps ops(*this);
    auto cache = std::make_shared<ForwardCache>();
    cache->dropout_rate = dropout_rate;

    double loss_sum = 0.0;
    long long n_tokens = 0;
    for (std::size_t b = 0; b < batch.src.size(); ++b) {
        SentenceCache sc;
        for (int id : batch.src[b]) {
            if (id < 0 || id >= dims_.vocab_src)
                throw NmtError("source id out of range: " + std::to_string(id));
            if (id == Vocabulary::kPad) break;
            sc.src.push_back(id);
        }
        for (int id : batch.tgt[b]) {
            if (id < 0 || id >= dims_.vocab_tgt)
                throw NmtError("target id out of range: " + std::to_string(id));
            if (id == Vocabulary::kPad) break;
            sc.tgt.push_back(id);
        }
        if (sc.tgt.empty()) {
            cache->sentences.push_back(std::move(sc));
            continue;  // all-PAD row: no loss terms
        }
        if (sc.src.empty()) throw NmtError("empty source with non-empty target");
        if (sc.tgt.front() != Vocabulary::kBos || sc.tgt.back() != Vocabulary::kEos ||
            sc.tgt.size() < 2)
            throw NmtError("target must begin with BOS and end with EOS");

        ops.encode(sc, dropout_rate, dropout_rng);
        std::vector<std::vector<double>> state = sc.s0;
        std::vector<double> prev_hat(dims_.d_hid, 0.0);
        sc.steps.resize(sc.tgt.size() - 1);
        for (std::size_t t = 0; t + 1 < sc.tgt.size(); ++t) {
            StepCache& st = sc.steps[t];
            ops.step(sc, st, state, prev_hat, sc.tgt[t], dropout_rate, dropout_rng);
            st.y_out = sc.tgt[t + 1];
            prev_hat = st.hat_out;
            loss_sum += -std::log(std::max(st.prob[st.y_out], 1e-300));
            ++n_tokens;
        }
        cache->sentences.push_back(std::move(sc));
    }

    ForwardResult result;
    result.n_tokens = n_tokens;
    result.loss = n_tokens > 0 ? loss_sum / static_cast<double>(n_tokens) : 0.0;
    result.cache = cache;
    if (!std::isfinite(result.loss)) throw NmtError("non-finite loss");
    return result;
}

std::vector<double> Seq2SeqModel::backward(const ForwardResult& fwd) const {
    if (!fwd.cache) throw NmtError("backward needs the cache from forward_loss");
    ModelOps ops(*this);
    const ParamLayout& L = *layout_;
    const ModelDims& d = dims_;
    const int dh = d.d_hid;
    std::vector<double> grad(params_.size(), 0.0);
    if (fwd.n_tokens == 0) return grad;
    const double scale = 1.0 / static_cast<double>(fwd.n_tokens);

    double* demb_src = grad.data() + L.at("emb_src").offset;
    double* demb_tgt = grad.data() + L.at("emb_tgt").offset;

    for (const SentenceCache& sc : fwd.cache->sentences) {
        if (sc.steps.empty()) continue;
        const std::size_t S = sc.src.size();
        const std::size_t T = sc.steps.size();

        std::vector<std::vector<double>> dann(S, std::vector<double>(2 * dh, 0.0));
        std::vector<std::vector<double>> ds_carry(d.dec_layers, std::vector<double>(dh, 0.0));
        std::vector<double> dhat_carry(dh, 0.0);  // input-feeding path into hat_out

        for (std::size_t t = T; t-- > 0;) {
            const StepCache& st = sc.steps[t];

            // softmax + cross entropy
            std::vector<double> dlogits = st.prob;
            dlogits[st.y_out] -= 1.0;
            for (double& x : dlogits) x *= scale;

            // output projection
            add_outer(grad.data() + L.at("out.W").offset, d.vocab_tgt, dh, dlogits.data(),
                      st.hat_out.data());
            add_vec(grad.data() + L.at("out.b").offset, dlogits.data(), d.vocab_tgt);
            std::vector<double> dhat_out(dh, 0.0);
            addmv_t(ops.seg("out.W"), d.vocab_tgt, dh, dlogits.data(), dhat_out.data());
            add_vec(dhat_out.data(), dhat_carry.data(), dh);
            std::fill(dhat_carry.begin(), dhat_carry.end(), 0.0);

            // dropout, then tanh readout
            std::vector<double> dhat(dh);
            for (int i = 0; i < dh; ++i) {
                double m = st.hat_mask.empty() ? 1.0 : st.hat_mask[i];
                dhat[i] = dhat_out[i] * m;
            }
            std::vector<double> dpre(dh);
            for (int i = 0; i < dh; ++i) dpre[i] = dhat[i] * (1.0 - st.hat[i] * st.hat[i]);
            std::vector<double> cat(3 * dh);
            std::copy(st.gru.back().h.begin(), st.gru.back().h.end(), cat.begin());
            std::copy(st.ctx.begin(), st.ctx.end(), cat.begin() + dh);
            add_outer(grad.data() + L.at("readout.W").offset, dh, 3 * dh, dpre.data(), cat.data());
            add_vec(grad.data() + L.at("readout.b").offset, dpre.data(), dh);
            std::vector<double> dcat(3 * dh, 0.0);
            addmv_t(ops.seg("readout.W"), dh, 3 * dh, dpre.data(), dcat.data());

            std::vector<double> dctx(2 * dh, 0.0);
            for (int i = 0; i < 2 * dh; ++i) dctx[i] = dcat[dh + i];

            // decoder GRU stack, top layer first
            std::vector<std::vector<double>> ds(d.dec_layers, std::vector<double>(dh, 0.0));
            for (int i = 0; i < dh; ++i) ds[d.dec_layers - 1][i] = dcat[i];
            for (int l = 0; l < d.dec_layers; ++l) add_vec(ds[l].data(), ds_carry[l].data(), dh);
            for (auto& v : ds_carry) std::fill(v.begin(), v.end(), 0.0);

            std::vector<double> dx0(ops.dec_in0(), 0.0);
            for (int l = d.dec_layers - 1; l >= 0; --l) {
                const int din = l == 0 ? ops.dec_in0() : dh;
                GruView cell = gru_view(L, ops.P, "dec" + std::to_string(l), din, dh);
                GruGradView gcell = gru_grad_view(L, grad.data(), "dec" + std::to_string(l));
                const double* x = l == 0 ? st.x0.data() : st.gru[l - 1].h.data();
                std::vector<double> dx(din, 0.0);
                gru_backward(cell, gcell, st.gru[l], x, st.s_in[l].data(), ds[l].data(), dx.data(),
                             ds_carry[l].data());
                if (l == 0)
                    dx0 = std::move(dx);
                else
                    add_vec(ds[l - 1].data(), dx.data(), dh);
            }

            // split layer-0 input gradient: [emb_tgt(y_prev); ctx; feed]
            add_vec(demb_tgt + static_cast<std::size_t>(st.y_prev) * d.d_emb, dx0.data(), d.d_emb);
            for (int i = 0; i < 2 * dh; ++i) dctx[i] += dx0[d.d_emb + i];
            if (d.input_feeding && t > 0)
                add_vec(dhat_carry.data(), dx0.data() + d.d_emb + 2 * dh, dh);

            // attention backward
            std::vector<double> dalpha(S, 0.0);
            for (std::size_t j = 0; j < S; ++j) {
                const double* aj = sc.ann[j].data();
                double acc = 0.0;
                for (int i = 0; i < 2 * dh; ++i) acc += dctx[i] * aj[i];
                dalpha[j] = acc;
                for (int i = 0; i < 2 * dh; ++i) dann[j][i] += st.alpha[j] * dctx[i];
            }
            double inner = 0.0;
            for (std::size_t j = 0; j < S; ++j) inner += st.alpha[j] * dalpha[j];
            std::vector<double> dq(dh, 0.0);
            const double* v = ops.seg("att.v");
            double* dv = grad.data() + L.at("att.v").offset;
            for (std::size_t j = 0; j < S; ++j) {
                double de = st.alpha[j] * (dalpha[j] - inner);
                const double* uj = st.u.data() + j * dh;
                std::vector<double> dpre_u(dh);
                for (int i = 0; i < dh; ++i) {
                    dv[i] += de * uj[i];
                    dpre_u[i] = de * v[i] * (1.0 - uj[i] * uj[i]);
                    dq[i] += dpre_u[i];
                }
                add_outer(grad.data() + L.at("att.Wk").offset, dh, 2 * dh, dpre_u.data(),
                          sc.ann[j].data());
                addmv_t(ops.seg("att.Wk"), dh, 2 * dh, dpre_u.data(), dann[j].data());
            }
            const std::vector<double>& query_state = t == 0 ? sc.s0.back() : sc.steps[t - 1].gru.back().h;
            add_outer(grad.data() + L.at("att.Wq").offset, dh, dh, dq.data(), query_state.data());
            addmv_t(ops.seg("att.Wq"), dh, dh, dq.data(), ds_carry[d.dec_layers - 1].data());
        }

        // leftover input-feeding grad flows into hat_0 == 0: dropped

        // initial decoder states
        std::vector<double> dmean(2 * dh, 0.0);
        for (int l = 0; l < d.dec_layers; ++l) {
            std::string n = std::to_string(l);
            std::vector<double> dpre(dh);
            for (int i = 0; i < dh; ++i)
                dpre[i] = ds_carry[l][i] * (1.0 - sc.s0[l][i] * sc.s0[l][i]);
            add_outer(grad.data() + L.at("init" + n + ".W").offset, dh, 2 * dh, dpre.data(),
                      sc.mean_a.data());
            add_vec(grad.data() + L.at("init" + n + ".b").offset, dpre.data(), dh);
            addmv_t(ops.seg("init" + n + ".W"), dh, 2 * dh, dpre.data(), dmean.data());
        }
        for (std::size_t j = 0; j < S; ++j)
            for (int i = 0; i < 2 * dh; ++i)
                dann[j][i] += dmean[i] / static_cast<double>(S);

        // annotation dropout
        if (!sc.ann_mask.empty())
            for (std::size_t j = 0; j < S; ++j)
                for (int i = 0; i < 2 * dh; ++i) dann[j][i] *= sc.ann_mask[j][i];

        // encoder stack, top layer first
        std::vector<std::vector<double>> dlayer_out = std::move(dann);
        for (int l = d.enc_layers - 1; l >= 0; --l) {
            const int din = l == 0 ? d.d_emb : 2 * dh;
            GruView fwd = gru_view(L, ops.P, "enc" + std::to_string(l) + ".fwd", din, dh);
            GruView bwd = gru_view(L, ops.P, "enc" + std::to_string(l) + ".bwd", din, dh);
            GruGradView gfwd = gru_grad_view(L, grad.data(), "enc" + std::to_string(l) + ".fwd");
            GruGradView gbwd = gru_grad_view(L, grad.data(), "enc" + std::to_string(l) + ".bwd");
            std::vector<std::vector<double>> dx(S, std::vector<double>(din, 0.0));
            std::vector<double> zeros(dh, 0.0);

            // forward direction: h_j depends on h_{j-1}
            std::vector<double> carry(dh, 0.0);
            for (std::size_t j = S; j-- > 0;) {
                std::vector<double> dht(dh);
                for (int i = 0; i < dh; ++i) dht[i] = dlayer_out[j][i] + carry[i];
                const double* h_prev = j == 0 ? zeros.data() : sc.enc_fwd[l][j - 1].h.data();
                std::fill(carry.begin(), carry.end(), 0.0);
                gru_backward(fwd, gfwd, sc.enc_fwd[l][j], sc.enc_in[l][j].data(), h_prev,
                             dht.data(), dx[j].data(), carry.data());
            }
            // backward direction: g_j depends on g_{j+1}; computed j=S..1,
            // so reverse order is j=1..S
            std::fill(carry.begin(), carry.end(), 0.0);
            for (std::size_t j = 0; j < S; ++j) {
                std::vector<double> dht(dh);
                for (int i = 0; i < dh; ++i) dht[i] = dlayer_out[j][dh + i] + carry[i];
                const double* h_prev = j + 1 < S ? sc.enc_bwd[l][j + 1].h.data() : zeros.data();
                std::fill(carry.begin(), carry.end(), 0.0);
                gru_backward(bwd, gbwd, sc.enc_bwd[l][j], sc.enc_in[l][j].data(), h_prev,
                             dht.data(), dx[j].data(), carry.data());
            }
            if (l == 0) {
                for (std::size_t j = 0; j < S; ++j)
                    add_vec(demb_src + static_cast<std::size_t>(sc.src[j]) * d.d_emb,
                            dx[j].data(), d.d_emb);
            } else {
                dlayer_out = std::move(dx);
            }
        }
    }
    return grad;
}

std::vector<std::vector<double>> Seq2SeqModel::attention_matrix(const ForwardResult& fwd,
                                                                std::size_t b,
                                                                std::size_t src_width) const {
    const SentenceCache& sc = fwd.cache->sentences.at(b);
    std::vector<std::vector<double>> out;
    out.reserve(sc.steps.size());
    for (const StepCache& st : sc.steps) {
        std::vector<double> row(src_width, 0.0);
        for (std::size_t j = 0; j < st.alpha.size() && j < src_width; ++j) row[j] = st.alpha[j];
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<int> Seq2SeqModel::greedy_decode(const std::vector<int>& src_ids, int max_len) const {
    for (int id : src_ids)
        if (id < 0 || id >= dims_.vocab_src)
            throw NmtError("source id out of range: " + std::to_string(id));
    if (src_ids.empty() || max_len <= 0) return {};
    ModelOps ops(*this);
    SentenceCache sc;
    sc.src = src_ids;
    ops.encode(sc, 0.0, nullptr);

    std::vector<std::vector<double>> state = sc.s0;
    std::vector<double> prev_hat(dims_.d_hid, 0.0);
    std::vector<int> out;
    int y_prev = Vocabulary::kBos;
    for (int t = 0; t < max_len; ++t) {
        StepCache st;
        ops.step(sc, st, state, prev_hat, y_prev, 0.0, nullptr);
        prev_hat = st.hat_out;
        int best = 0;
        double best_p = st.prob[0];
        for (int i = 1; i < dims_.vocab_tgt; ++i) {
            if (st.prob[i] > best_p) {  // strict: ties keep the lowest id
                best_p = st.prob[i];
                best = i;
            }
        }
        if (best == Vocabulary::kEos) break;
        out.push_back(best);
        y_prev = best;
    }
    return out;
}

Seq2SeqModel Seq2SeqModel::transfer_init(const Seq2SeqModel& parent, const Vocabulary& parent_src,
                                         const Vocabulary& parent_tgt, const Vocabulary& child_src,
                                         const Vocabulary& child_tgt, std::uint64_t seed,
                                         const ModelDims& child_dims) {
    const ModelDims& pd = parent.dims();
    if (child_dims.d_emb != pd.d_emb || child_dims.d_hid != pd.d_hid ||
        child_dims.enc_layers != pd.enc_layers || child_dims.dec_layers != pd.dec_layers ||
        child_dims.input_feeding != pd.input_feeding)
        throw NmtError("incompatible dims: child shape differs from parent");
    if (child_dims.vocab_src != child_src.size() || child_dims.vocab_tgt != child_tgt.size())
        throw NmtError("incompatible dims: child vocab sizes do not match vocabularies");
    return transfer_init(parent, parent_src, parent_tgt, child_src, child_tgt, seed);
}

Seq2SeqModel Seq2SeqModel::transfer_init(const Seq2SeqModel& parent, const Vocabulary& parent_src,
                                         const Vocabulary& parent_tgt, const Vocabulary& child_src,
                                         const Vocabulary& child_tgt, std::uint64_t seed) {
    const ModelDims& pd = parent.dims();
    if (parent_src.size() != pd.vocab_src || parent_tgt.size() != pd.vocab_tgt)
        throw NmtError("parent vocabularies do not match parent dims");

    if (child_src == parent_src && child_tgt == parent_tgt) {
        Seq2SeqModel child = parent;  // deep copy, parameters identical
        return child;
    }

    ModelDims cd = pd;
    cd.vocab_src = child_src.size();
    cd.vocab_tgt = child_tgt.size();
    Seq2SeqModel child(cd, seed);

    // copy everything except the vocabulary-indexed segments
    for (const Segment& seg : child.layout().segments()) {
        if (seg.name == "emb_src" || seg.name == "emb_tgt" || seg.name == "out.W" ||
            seg.name == "out.b")
            continue;
        const Segment& pseg = parent.layout().at(seg.name);
        if (pseg.size() != seg.size())
            throw NmtError("incompatible dims for segment " + seg.name);
        std::copy(parent.params_.begin() + pseg.offset,
                  parent.params_.begin() + pseg.offset + pseg.size(),
                  child.params_.begin() + seg.offset);
    }

    // shared vocabulary rows copy over; new tokens keep fresh init
    auto copy_rows = [&](const std::string& name, const Vocabulary& pv, const Vocabulary& cv,
                         int cols) {
        const Segment& ps = parent.layout().at(name);
        const Segment& cs = child.layout().at(name);
        for (int cid = 0; cid < cv.size(); ++cid) {
            const std::string& tok = cv.token(cid);
            int pid = pv.id(tok);
            if (pid == Vocabulary::kUnk && tok != pv.token(Vocabulary::kUnk)) continue;
            std::copy(parent.params_.begin() + ps.offset + static_cast<std::size_t>(pid) * cols,
                      parent.params_.begin() + ps.offset + static_cast<std::size_t>(pid + 1) * cols,
                      child.params_.begin() + cs.offset + static_cast<std::size_t>(cid) * cols);
        }
    };
    copy_rows("emb_src", parent_src, child_src, pd.d_emb);
    copy_rows("emb_tgt", parent_tgt, child_tgt, pd.d_emb);
    copy_rows("out.W", parent_tgt, child_tgt, pd.d_hid);
    copy_rows("out.b", parent_tgt, child_tgt, 1);
    return child;
}

}  // namespace orderkit::nmt
