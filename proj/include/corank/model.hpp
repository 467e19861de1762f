#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "corank/cooccur.hpp"
#include "corank/mat.hpp"
#include "corank/rerank.hpp"

namespace corank {

// Pipeline variants that drop one mechanism at a time. NoRerankAll keeps
// only the first-stage classifier.
enum class Ablation { None, NoCooccur, NoFreqRank, NoPosition, NoRerankAll };

Ablation ablation_from_string(const std::string& name);
const char* ablation_to_string(Ablation a);

struct ModelConfig {
    std::int32_t label_count = 0;  // K
    std::int32_t vocab_size = 0;
    std::int32_t max_len = 512;
    std::int32_t delta = 64;  // hidden width
    std::int32_t gamma = 20;  // reranked sequence length
    std::int32_t eta = 4;     // attention heads
    std::int32_t d_ff = 0;    // fusion FFN width; 0 means 4*delta
    double alpha = 0.3;       // seed threshold
    double beta = 0.3;        // first-stage loss weight
    double drop_rate = 0.1;
    Ablation ablation = Ablation::None;

    std::int32_t ffn_dim() const { return d_ff > 0 ? d_ff : 4 * delta; }
    std::int32_t head_dim() const { return delta / eta; }
    bool rerank_enabled() const { return ablation != Ablation::NoRerankAll; }
    bool position_enabled() const { return ablation != Ablation::NoPosition; }
    RerankOptions rerank_options() const;
    void validate() const;
};

struct ModelParams {
    Mat embed;        // vocab_size x delta token embeddings
    Mat pos_embed;    // max_len x delta position embeddings
    Mat w1;           // delta x delta pooler
    Vec b1;
    Mat w2;           // delta x K first-stage classifier
    Vec b2;
    Mat label_embed;  // K x delta label features
    Mat label_pos;    // gamma x delta label position features
    Mat w3;           // delta x d_ff fusion expansion
    Vec b3;
    Mat w4;           // d_ff x delta fusion projection
    Vec b4;
    std::vector<Mat> wq, wk, wv;  // per head, delta x head_dim
    Mat w5;                       // (gamma*delta) x K final classifier
    Vec b5;

    struct Group {
        std::string name;
        std::vector<double>* data;
    };
    struct ConstGroup {
        std::string name;
        const std::vector<double>* data;
    };
    std::vector<Group> groups();  // stable order shared by optimizer, IO, checks
    std::vector<ConstGroup> groups() const;

    static ModelParams zeros(const ModelConfig& cfg);
    static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
};

struct ForwardTrace {
    std::vector<std::int32_t> tokens;
    std::vector<std::uint8_t> valid;  // per token row; 0 rows are masked out
    Mat h;                            // n x delta encoder output
    Vec pooled;                       // delta
    Vec s1;                           // K first-stage scores
    RerankedSequence seq;             // length gamma unless rerank disabled
    Mat f;                            // gamma x delta fused label features
    Mat ffn_act;                      // gamma x d_ff post-ReLU activations
    Mat drop_scale;                   // gamma x d_ff inverted-dropout factors; empty when off
    Mat fhat;                         // gamma x delta
    std::vector<Mat> attn;            // per head: gamma x n attention weights
    Mat attended;                     // gamma x delta, heads concatenated
    Vec y;                            // K second-stage scores; empty if rerank disabled

    // Flattened attended features feeding the final classifier.
    const Vec& f_cat() const { return attended.v; }
};

// ---------------------------------------------------------------------
// Forward ops. forward() composes exactly these.
// ---------------------------------------------------------------------

// H[t] = token_embedding[tokens[t]] + position_embedding[t]
Mat encode(const std::vector<std::int32_t>& tokens, const ModelParams& p, const ModelConfig& cfg);

// tanh(h_cls * W + b)
Vec pool(const double* h_cls, const ModelParams& p, const ModelConfig& cfg);

// sigmoid(pooled * W + b)
Vec initial_scores(const Vec& pooled, const ModelParams& p, const ModelConfig& cfg);

// Rows: label feature + (optionally) position feature, pushed through the
// two-layer ReLU FFN with inverted dropout between the layers.
Mat fuse_label_features(const RerankedSequence& seq, const ModelParams& p, const ModelConfig& cfg,
                        bool training, std::mt19937_64* rng, Mat* act_out, Mat* drop_out,
                        Mat* f_out);

// Rows of fhat attend over token states; per-head weights optionally
// returned. Masked (invalid) positions receive exactly zero weight.
Mat masked_attention(const Mat& fhat, const Mat& h, const std::vector<std::uint8_t>& valid,
                     const ModelParams& p, const ModelConfig& cfg, std::vector<Mat>* weights_out);

// sigmoid(flatten(attended) * W + b)
Vec final_scores(const Mat& attended, const ModelParams& p, const ModelConfig& cfg);

// Mean binary cross-entropy over labels, probabilities clipped to
// [1e-7, 1 - 1e-7].
double bce_loss(const Vec& pred, const std::vector<std::uint8_t>& truth01);

std::vector<std::uint8_t> truth_mask(const std::vector<std::int32_t>& labels,
                                     std::int32_t label_count);

struct LossParts {
    double l1 = 0.0;
    double l2 = 0.0;
    double combined = 0.0;
};

ForwardTrace forward(const Document& doc, const ModelParams& p, const CooccurrenceMatrix& m,
                     const std::vector<std::uint64_t>& freq, const ModelConfig& cfg, bool training,
                     std::mt19937_64* rng);

LossParts compute_loss(const ForwardTrace& trace, const std::vector<std::int32_t>& labels,
                       const ModelConfig& cfg);

// Accumulates gradients of loss_scale * combined loss into grads. The label
// sequence is treated as a constant of the forward pass.
void backward(const ForwardTrace& trace, const std::vector<std::int32_t>& labels,
              const ModelParams& p, const ModelConfig& cfg, ModelParams& grads,
              double loss_scale = 1.0);

// Scores used for ranking at prediction time: second-stage when present,
// first-stage otherwise.
const Vec& predict_scores(const ForwardTrace& trace, const ModelConfig& cfg);

}  // namespace corank
