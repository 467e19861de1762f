#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corank/cooccur.hpp"
#include "corank/corpus.hpp"
#include "corank/metrics.hpp"
#include "corank/model.hpp"

namespace corank {

struct TrainConfig {
    ModelConfig model;  // label_count and vocab_size are filled from the corpus
    double lr = 1e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::int32_t batch_size = 16;
    std::int32_t epochs = 5;
    std::uint64_t seed = 1;

    void validate() const;  // optimizer fields only; model shapes are checked at use
};

// Strict JSON parsing: unknown keys and wrong types are errors. origin names
// the source in messages (a path, usually).
TrainConfig parse_train_config(const std::string& text, const std::string& origin);
TrainConfig load_train_config(const std::string& path);

// Adam with decoupled weight decay over the parameter groups. Gradients are
// checked for non-finite values group by group before each update.
class AdamW {
public:
    AdamW(const TrainConfig& cfg, ModelParams& params);
    void step(ModelParams& grads);
    std::int64_t steps_taken() const { return t_; }

private:
    double lr_, wd_, beta1_, beta2_, eps_;
    ModelParams* params_;
    std::vector<Vec> m_, v_;
    std::int64_t t_ = 0;
};

struct EpochLog {
    std::int32_t epoch = 0;  // 1-based
    double loss = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

struct TrainResult {
    ModelParams params;
    ModelConfig config;  // with label_count and vocab_size resolved
    std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Shuffled mini-batch training with batch-mean gradients. Deterministic for
// a fixed config: shuffling and dropout draw from one per-epoch stream.
TrainResult train_model(const Corpus& corpus, const CooccurrenceMatrix& cooc, TrainConfig cfg,
                        const EpochCallback& on_epoch = {});

// Forward pass in evaluation mode over every document, then mean metrics.
MetricsReport evaluate_model(const ModelParams& params, const ModelConfig& cfg,
                             const CooccurrenceMatrix& cooc,
                             const std::vector<std::uint64_t>& freq, const Dataset& data,
                             const std::vector<int>& p_ks, const std::vector<int>& ndcg_ks);

// Retrains from scratch for each value of one hyperparameter (same seed) and
// evaluates on the given split.
struct SweepPoint {
    double value = 0.0;
    MetricsReport report;
};

void set_sweep_parameter(TrainConfig& cfg, const std::string& param, double value);

std::vector<SweepPoint> sweep_parameter(const Corpus& corpus, const CooccurrenceMatrix& cooc,
                                        const TrainConfig& base, const std::string& param,
                                        const std::vector<double>& values, const Dataset& eval,
                                        const std::vector<int>& p_ks,
                                        const std::vector<int>& ndcg_ks,
                                        const EpochCallback& on_epoch = {});

}  // namespace corank
