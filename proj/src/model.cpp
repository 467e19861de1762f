#include "corank/model.hpp"

#include <algorithm>
#include <cmath>

#include "corank/kernels.hpp"

namespace corank {

namespace {

constexpr double kMaskPenalty = -1e9;
constexpr double kClipLo = 1e-7;
constexpr double kClipHi = 1.0 - 1e-7;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(std::vector<double>& v, double limit, std::mt19937_64& g) {
    for (auto& x : v) x = (2.0 * rng_unit(g) - 1.0) * limit;
}

void xavier_init(Mat& w, std::mt19937_64& g) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    fill_uniform(w.v, limit, g);
}

// d(sum over rows) for bias gradients
void add_column_sums(const Mat& m, Vec& out) {
    for (std::size_t r = 0; r < m.rows; ++r) kernels::axpy(m.cols, 1.0, m.row(r), out.data());
}

void copy_block_out(const Mat& src, std::size_t col0, std::size_t width, Mat& dst) {
    for (std::size_t r = 0; r < src.rows; ++r)
        std::copy(src.row(r) + col0, src.row(r) + col0 + width, dst.row(r));
}

// Gradient of the clipped mean BCE with respect to the logits, scaled.
void bce_logit_grad(const Vec& s, const std::vector<std::uint8_t>& t, double scale, Vec& dlogit) {
    const double w = scale / static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < kClipLo || s[i] > kClipHi) continue;  // flat region of the clip
        dlogit[i] += w * (s[i] - static_cast<double>(t[i]));
    }
}

}  // namespace

Ablation ablation_from_string(const std::string& name) {
    if (name == "none" || name.empty()) return Ablation::None;
    if (name == "no_cooccur") return Ablation::NoCooccur;
    if (name == "no_freq_rank") return Ablation::NoFreqRank;
    if (name == "no_position") return Ablation::NoPosition;
    if (name == "no_rerank_all") return Ablation::NoRerankAll;
    throw Error("unknown ablation: " + name +
                " (expected none, no_cooccur, no_freq_rank, no_position, no_rerank_all)");
}

const char* ablation_to_string(Ablation a) {
    switch (a) {
        case Ablation::None: return "none";
        case Ablation::NoCooccur: return "no_cooccur";
        case Ablation::NoFreqRank: return "no_freq_rank";
        case Ablation::NoPosition: return "no_position";
        case Ablation::NoRerankAll: return "no_rerank_all";
    }
    return "?";
}

RerankOptions ModelConfig::rerank_options() const {
    RerankOptions opt;
    opt.use_cooccur = ablation != Ablation::NoCooccur;
    opt.use_freq_rank = ablation != Ablation::NoFreqRank;
    return opt;
}

void ModelConfig::validate() const {
    if (label_count <= 0) throw Error("config: label_count must be positive");
    if (vocab_size < 2) throw Error("config: vocab_size must cover CLS and UNK");
    if (max_len < 2) throw Error("config: max_len must be at least 2");
    if (delta <= 0) throw Error("config: delta must be positive");
    if (eta <= 0) throw Error("config: eta must be positive");
    if (delta % eta != 0)
        throw Error("config: delta (" + std::to_string(delta) + ") must be divisible by eta (" +
                    std::to_string(eta) + ")");
    if (gamma < 1) throw Error("config: gamma must be at least 1");
    if (gamma > label_count)
        throw Error("config: gamma (" + std::to_string(gamma) + ") exceeds label count (" +
                    std::to_string(label_count) + ")");
    if (ffn_dim() <= 0) throw Error("config: d_ff must be positive");
    if (alpha < 0.0 || alpha >= 1.0) throw Error("config: alpha must be in [0, 1)");
    if (beta < 0.0 || beta > 1.0) throw Error("config: beta must be in [0, 1]");
    if (drop_rate < 0.0 || drop_rate >= 1.0) throw Error("config: drop_rate must be in [0, 1)");
}

std::vector<ModelParams::Group> ModelParams::groups() {
    std::vector<Group> g = {
        {"embed", &embed.v},   {"pos_embed", &pos_embed.v},
        {"w1", &w1.v},         {"b1", &b1},
        {"w2", &w2.v},         {"b2", &b2},
        {"label_embed", &label_embed.v},
        {"label_pos", &label_pos.v},
        {"w3", &w3.v},         {"b3", &b3},
        {"w4", &w4.v},         {"b4", &b4},
    };
    for (std::size_t h = 0; h < wq.size(); ++h) g.push_back({"wq" + std::to_string(h), &wq[h].v});
    for (std::size_t h = 0; h < wk.size(); ++h) g.push_back({"wk" + std::to_string(h), &wk[h].v});
    for (std::size_t h = 0; h < wv.size(); ++h) g.push_back({"wv" + std::to_string(h), &wv[h].v});
    g.push_back({"w5", &w5.v});
    g.push_back({"b5", &b5});
    return g;
}

std::vector<ModelParams::ConstGroup> ModelParams::groups() const {
    std::vector<ConstGroup> out;
    for (const auto& g : const_cast<ModelParams*>(this)->groups()) out.push_back({g.name, g.data});
    return out;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    cfg.validate();
    const auto d = static_cast<std::size_t>(cfg.delta);
    const auto k = static_cast<std::size_t>(cfg.label_count);
    const auto ff = static_cast<std::size_t>(cfg.ffn_dim());
    const auto hd = static_cast<std::size_t>(cfg.head_dim());
    const auto ga = static_cast<std::size_t>(cfg.gamma);

    ModelParams p;
    p.embed = Mat(static_cast<std::size_t>(cfg.vocab_size), d);
    p.pos_embed = Mat(static_cast<std::size_t>(cfg.max_len), d);
    p.w1 = Mat(d, d);
    p.b1.assign(d, 0.0);
    p.w2 = Mat(d, k);
    p.b2.assign(k, 0.0);
    p.label_embed = Mat(k, d);
    p.label_pos = Mat(ga, d);
    p.w3 = Mat(d, ff);
    p.b3.assign(ff, 0.0);
    p.w4 = Mat(ff, d);
    p.b4.assign(d, 0.0);
    for (std::int32_t h = 0; h < cfg.eta; ++h) {
        p.wq.emplace_back(d, hd);
        p.wk.emplace_back(d, hd);
        p.wv.emplace_back(d, hd);
    }
    p.w5 = Mat(ga * d, k);
    p.b5.assign(k, 0.0);
    return p;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams p = zeros(cfg);
    std::mt19937_64 g(seed);
    fill_uniform(p.embed.v, 0.05, g);
    fill_uniform(p.pos_embed.v, 0.05, g);
    xavier_init(p.w1, g);
    xavier_init(p.w2, g);
    fill_uniform(p.label_embed.v, 0.05, g);
    fill_uniform(p.label_pos.v, 0.05, g);
    xavier_init(p.w3, g);
    xavier_init(p.w4, g);
    for (auto& w : p.wq) xavier_init(w, g);
    for (auto& w : p.wk) xavier_init(w, g);
    for (auto& w : p.wv) xavier_init(w, g);
    xavier_init(p.w5, g);
    return p;
}

Mat encode(const std::vector<std::int32_t>& tokens, const ModelParams& p, const ModelConfig& cfg) {
    if (tokens.empty()) throw Error("encode: empty token sequence");
    if (tokens.size() > static_cast<std::size_t>(cfg.max_len))
        throw Error("encode: sequence longer than max_len");

    Mat h(tokens.size(), static_cast<std::size_t>(cfg.delta));
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto id = tokens[t];
        if (id < 0 || id >= cfg.vocab_size)
            throw Error("encode: token id " + std::to_string(id) + " outside [0, " +
                        std::to_string(cfg.vocab_size) + ")");
        const double* e = p.embed.row(static_cast<std::size_t>(id));
        const double* pe = p.pos_embed.row(t);
        double* out = h.row(t);
        for (std::size_t j = 0; j < h.cols; ++j) out[j] = e[j] + pe[j];
    }
    return h;
}

Vec pool(const double* h_cls, const ModelParams& p, const ModelConfig& cfg) {
    const auto d = static_cast<std::size_t>(cfg.delta);
    Vec out(d);
    kernels::matmul_nn(h_cls, p.w1.data(), out.data(), 1, d, d, false);
    for (std::size_t j = 0; j < d; ++j) out[j] = std::tanh(out[j] + p.b1[j]);
    return out;
}

Vec initial_scores(const Vec& pooled, const ModelParams& p, const ModelConfig& cfg) {
    const auto d = static_cast<std::size_t>(cfg.delta);
    const auto k = static_cast<std::size_t>(cfg.label_count);
    Vec out(k);
    kernels::matmul_nn(pooled.data(), p.w2.data(), out.data(), 1, d, k, false);
    for (std::size_t j = 0; j < k; ++j) out[j] = sigmoid(out[j] + p.b2[j]);
    return out;
}

Mat fuse_label_features(const RerankedSequence& seq, const ModelParams& p, const ModelConfig& cfg,
                        bool training, std::mt19937_64* rng, Mat* act_out, Mat* drop_out,
                        Mat* f_out) {
    const auto ga = static_cast<std::size_t>(cfg.gamma);
    const auto d = static_cast<std::size_t>(cfg.delta);
    const auto ff = static_cast<std::size_t>(cfg.ffn_dim());
    if (seq.labels.size() != ga)
        throw Error("fuse: sequence length " + std::to_string(seq.labels.size()) +
                    " does not match gamma " + std::to_string(cfg.gamma));

    Mat f(ga, d);
    for (std::size_t pos = 0; pos < ga; ++pos) {
        const auto l = seq.labels[pos];
        if (l < 0 || l >= cfg.label_count) throw Error("fuse: label id out of range");
        const double* le = p.label_embed.row(static_cast<std::size_t>(l));
        double* out = f.row(pos);
        std::copy(le, le + d, out);
        if (cfg.position_enabled()) kernels::axpy(d, 1.0, p.label_pos.row(pos), out);
    }

    Mat z(ga, ff);
    kernels::matmul_nn(f.data(), p.w3.data(), z.data(), ga, d, ff, false);
    kernels::add_bias(z.data(), p.b3.data(), ga, ff);

    const bool dropping = training && cfg.drop_rate > 0.0;
    Mat drop;
    if (dropping) {
        if (rng == nullptr) throw Error("fuse: dropout requires a generator");
        drop = Mat(ga, ff);
        const double keep_scale = 1.0 / (1.0 - cfg.drop_rate);
        for (auto& s : drop.v) s = (rng_unit(*rng) < cfg.drop_rate) ? 0.0 : keep_scale;
        for (std::size_t i = 0; i < z.v.size(); ++i) z.v[i] *= drop.v[i];
    }

    Mat act(ga, ff);
    kernels::relu(z.v.size(), z.data(), act.data());

    Mat out(ga, d);
    kernels::matmul_nn(act.data(), p.w4.data(), out.data(), ga, ff, d, false);
    kernels::add_bias(out.data(), p.b4.data(), ga, d);

    if (act_out) *act_out = std::move(act);
    if (drop_out) *drop_out = std::move(drop);
    if (f_out) *f_out = std::move(f);
    return out;
}

Mat masked_attention(const Mat& fhat, const Mat& h, const std::vector<std::uint8_t>& valid,
                     const ModelParams& p, const ModelConfig& cfg, std::vector<Mat>* weights_out) {
    const auto ga = fhat.rows;
    const auto d = static_cast<std::size_t>(cfg.delta);
    const auto hd = static_cast<std::size_t>(cfg.head_dim());
    const auto n = h.rows;
    if (fhat.cols != d || h.cols != d) throw Error("attention: width mismatch");
    if (valid.size() != n) throw Error("attention: validity mask length mismatch");
    if (std::find(valid.begin(), valid.end(), std::uint8_t{1}) == valid.end())
        throw Error("attention: no valid positions");

    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(hd));
    Mat out(ga, d);
    if (weights_out) weights_out->clear();

    for (std::int32_t head = 0; head < cfg.eta; ++head) {
        Mat q(ga, hd), km(n, hd), vm(n, hd);
        kernels::matmul_nn(fhat.data(), p.wq[head].data(), q.data(), ga, d, hd, false);
        kernels::matmul_nn(h.data(), p.wk[head].data(), km.data(), n, d, hd, false);
        kernels::matmul_nn(h.data(), p.wv[head].data(), vm.data(), n, d, hd, false);

        Mat w(ga, n);
        kernels::matmul_nt(q.data(), km.data(), w.data(), ga, hd, n, false);
        for (std::size_t r = 0; r < ga; ++r) {
            double* row = w.row(r);
            for (std::size_t j = 0; j < n; ++j) {
                row[j] *= inv_sqrt_dk;
                if (!valid[j]) row[j] += kMaskPenalty;
            }
            const double mx = *std::max_element(row, row + n);
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            kernels::scale(n, 1.0 / sum, row);
        }

        Mat ctx(ga, hd);
        kernels::matmul_nn(w.data(), vm.data(), ctx.data(), ga, n, hd, false);
        for (std::size_t r = 0; r < ga; ++r)
            std::copy(ctx.row(r), ctx.row(r) + hd, out.row(r) + static_cast<std::size_t>(head) * hd);

        if (weights_out) weights_out->push_back(std::move(w));
    }
    return out;
}

Vec final_scores(const Mat& attended, const ModelParams& p, const ModelConfig& cfg) {
    const auto k = static_cast<std::size_t>(cfg.label_count);
    const auto in = attended.v.size();
    if (in != p.w5.rows) throw Error("final scores: flattened width mismatch");
    Vec out(k);
    kernels::matmul_nn(attended.data(), p.w5.data(), out.data(), 1, in, k, false);
    for (std::size_t j = 0; j < k; ++j) out[j] = sigmoid(out[j] + p.b5[j]);
    return out;
}

double bce_loss(const Vec& pred, const std::vector<std::uint8_t>& truth01) {
    if (pred.size() != truth01.size()) throw Error("bce: prediction and truth lengths differ");
    if (pred.empty()) throw Error("bce: empty prediction");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kClipLo, kClipHi);
        total += truth01[i] ? std::log(p) : std::log(1.0 - p);
    }
    return -total / static_cast<double>(pred.size());
}

std::vector<std::uint8_t> truth_mask(const std::vector<std::int32_t>& labels,
                                     std::int32_t label_count) {
    std::vector<std::uint8_t> t(static_cast<std::size_t>(label_count), 0);
    for (auto l : labels) {
        if (l < 0 || l >= label_count) throw Error("truth label id out of range");
        t[l] = 1;
    }
    return t;
}

ForwardTrace forward(const Document& doc, const ModelParams& p, const CooccurrenceMatrix& m,
                     const std::vector<std::uint64_t>& freq, const ModelConfig& cfg, bool training,
                     std::mt19937_64* rng) {
    cfg.validate();

    ForwardTrace tr;
    tr.tokens = doc.tokens;
    tr.h = encode(tr.tokens, p, cfg);
    tr.valid.assign(tr.h.rows, 1);
    tr.pooled = pool(tr.h.row(0), p, cfg);
    tr.s1 = initial_scores(tr.pooled, p, cfg);

    if (!cfg.rerank_enabled()) return tr;

    tr.seq = rerank_with_options(tr.s1, m, freq, cfg.alpha, cfg.gamma, cfg.rerank_options());
    tr.fhat = fuse_label_features(tr.seq, p, cfg, training, rng, &tr.ffn_act, &tr.drop_scale, &tr.f);
    tr.attended = masked_attention(tr.fhat, tr.h, tr.valid, p, cfg, &tr.attn);
    tr.y = final_scores(tr.attended, p, cfg);
    return tr;
}

LossParts compute_loss(const ForwardTrace& trace, const std::vector<std::int32_t>& labels,
                       const ModelConfig& cfg) {
    auto t01 = truth_mask(labels, cfg.label_count);
    LossParts parts;
    parts.l1 = bce_loss(trace.s1, t01);
    if (cfg.rerank_enabled()) {
        parts.l2 = bce_loss(trace.y, t01);
        parts.combined = cfg.beta * parts.l1 + (1.0 - cfg.beta) * parts.l2;
    } else {
        parts.combined = parts.l1;
    }
    return parts;
}

const Vec& predict_scores(const ForwardTrace& trace, const ModelConfig& cfg) {
    return cfg.rerank_enabled() ? trace.y : trace.s1;
}

void backward(const ForwardTrace& tr, const std::vector<std::int32_t>& labels,
              const ModelParams& p, const ModelConfig& cfg, ModelParams& grads,
              double loss_scale) {
    const auto d = static_cast<std::size_t>(cfg.delta);
    const auto k = static_cast<std::size_t>(cfg.label_count);
    const auto ga = static_cast<std::size_t>(cfg.gamma);
    const auto ff = static_cast<std::size_t>(cfg.ffn_dim());
    const auto hd = static_cast<std::size_t>(cfg.head_dim());
    const auto n = tr.h.rows;
    auto t01 = truth_mask(labels, cfg.label_count);

    Mat dh(n, d);

    if (cfg.rerank_enabled()) {
        // Final classifier.
        Vec dy(k, 0.0);
        bce_logit_grad(tr.y, t01, loss_scale * (1.0 - cfg.beta), dy);

        kernels::matmul_tn(tr.f_cat().data(), dy.data(), grads.w5.data(), 1, ga * d, k, true);
        kernels::axpy(k, 1.0, dy.data(), grads.b5.data());
        Mat dattended(ga, d);
        kernels::matmul_nt(dy.data(), p.w5.data(), dattended.data(), 1, k, ga * d, false);

        // Attention heads.
        const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(hd));
        Mat dfhat(ga, d);
        for (std::int32_t head = 0; head < cfg.eta; ++head) {
            const auto col0 = static_cast<std::size_t>(head) * hd;
            Mat dctx(ga, hd);
            copy_block_out(dattended, col0, hd, dctx);

            // Recompute the head projections; cheaper than caching them all.
            Mat q(ga, hd), km(n, hd), vm(n, hd);
            kernels::matmul_nn(tr.fhat.data(), p.wq[head].data(), q.data(), ga, d, hd, false);
            kernels::matmul_nn(tr.h.data(), p.wk[head].data(), km.data(), n, d, hd, false);
            kernels::matmul_nn(tr.h.data(), p.wv[head].data(), vm.data(), n, d, hd, false);

            const Mat& w = tr.attn[static_cast<std::size_t>(head)];

            Mat dvm(n, hd);
            kernels::matmul_tn(w.data(), dctx.data(), dvm.data(), ga, n, hd, false);
            Mat dw(ga, n);
            kernels::matmul_nt(dctx.data(), vm.data(), dw.data(), ga, hd, n, false);

            // Softmax backward per row; masked weights are zero, so their
            // score gradients vanish on their own.
            Mat dscore(ga, n);
            for (std::size_t r = 0; r < ga; ++r) {
                const double* wr = w.row(r);
                const double* dwr = dw.row(r);
                const double inner = kernels::dot(n, wr, dwr);
                double* out = dscore.row(r);
                for (std::size_t j = 0; j < n; ++j)
                    out[j] = wr[j] * (dwr[j] - inner) * inv_sqrt_dk;
            }

            Mat dq(ga, hd);
            kernels::matmul_nn(dscore.data(), km.data(), dq.data(), ga, n, hd, false);
            Mat dkm(n, hd);
            kernels::matmul_tn(dscore.data(), q.data(), dkm.data(), ga, n, hd, false);

            kernels::matmul_tn(tr.fhat.data(), dq.data(), grads.wq[head].data(), ga, d, hd, true);
            kernels::matmul_nt(dq.data(), p.wq[head].data(), dfhat.data(), ga, hd, d, true);

            kernels::matmul_tn(tr.h.data(), dkm.data(), grads.wk[head].data(), n, d, hd, true);
            kernels::matmul_nt(dkm.data(), p.wk[head].data(), dh.data(), n, hd, d, true);

            kernels::matmul_tn(tr.h.data(), dvm.data(), grads.wv[head].data(), n, d, hd, true);
            kernels::matmul_nt(dvm.data(), p.wv[head].data(), dh.data(), n, hd, d, true);
        }

        // Fusion FFN.
        add_column_sums(dfhat, grads.b4);
        kernels::matmul_tn(tr.ffn_act.data(), dfhat.data(), grads.w4.data(), ga, ff, d, true);
        Mat dact(ga, ff);
        kernels::matmul_nt(dfhat.data(), p.w4.data(), dact.data(), ga, d, ff, false);

        const bool dropped = tr.drop_scale.v.size() == dact.v.size();
        for (std::size_t i = 0; i < dact.v.size(); ++i) {
            double gmask = tr.ffn_act.v[i] > 0.0 ? 1.0 : 0.0;
            if (dropped) gmask *= tr.drop_scale.v[i];
            dact.v[i] *= gmask;
        }

        add_column_sums(dact, grads.b3);
        kernels::matmul_tn(tr.f.data(), dact.data(), grads.w3.data(), ga, d, ff, true);
        Mat df(ga, d);
        kernels::matmul_nt(dact.data(), p.w3.data(), df.data(), ga, ff, d, false);

        for (std::size_t pos = 0; pos < ga; ++pos) {
            const auto l = static_cast<std::size_t>(tr.seq.labels[pos]);
            kernels::axpy(d, 1.0, df.row(pos), grads.label_embed.row(l));
            if (cfg.position_enabled())
                kernels::axpy(d, 1.0, df.row(pos), grads.label_pos.row(pos));
        }
    }

    // First-stage classifier and pooler.
    Vec ds1(k, 0.0);
    const double stage1_scale = cfg.rerank_enabled() ? loss_scale * cfg.beta : loss_scale;
    bce_logit_grad(tr.s1, t01, stage1_scale, ds1);

    kernels::axpy(k, 1.0, ds1.data(), grads.b2.data());
    kernels::matmul_tn(tr.pooled.data(), ds1.data(), grads.w2.data(), 1, d, k, true);
    Vec dpooled(d, 0.0);
    kernels::matmul_nt(ds1.data(), p.w2.data(), dpooled.data(), 1, k, d, false);

    for (std::size_t j = 0; j < d; ++j) dpooled[j] *= 1.0 - tr.pooled[j] * tr.pooled[j];
    kernels::axpy(d, 1.0, dpooled.data(), grads.b1.data());
    kernels::matmul_tn(tr.h.row(0), dpooled.data(), grads.w1.data(), 1, d, d, true);
    kernels::matmul_nt(dpooled.data(), p.w1.data(), dh.data(), 1, d, d, true);

    // Token and position embeddings.
    for (std::size_t t = 0; t < n; ++t) {
        const auto id = static_cast<std::size_t>(tr.tokens[t]);
        kernels::axpy(d, 1.0, dh.row(t), grads.embed.row(id));
        kernels::axpy(d, 1.0, dh.row(t), grads.pos_embed.row(t));
    }
}

}  // namespace corank
