#include "corank/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "corank/kernels.hpp"
#include "json.hpp"

namespace corank {

namespace {

using nlohmann::json;

std::uint64_t epoch_seed(std::uint64_t seed, std::int32_t epoch) {
    return seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch));
}

double get_double(const json& j, const char* key) {
    if (!j.at(key).is_number()) throw Error(std::string("config: key \"") + key + "\" must be a number");
    return j.at(key).get<double>();
}

std::int32_t get_int(const json& j, const char* key) {
    if (!j.at(key).is_number_integer())
        throw Error(std::string("config: key \"") + key + "\" must be an integer");
    return j.at(key).get<std::int32_t>();
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("config: lr must be positive and finite");
    if (weight_decay < 0.0 || !std::isfinite(weight_decay))
        throw Error("config: weight_decay must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0) throw Error("config: beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw Error("config: beta2 must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw Error("config: adam_eps must be positive");
    if (batch_size < 1) throw Error("config: batch_size must be at least 1");
    if (epochs < 1) throw Error("config: epochs must be at least 1");
}

TrainConfig parse_train_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": " + e.what());
    }
    if (!j.is_object()) throw Error(origin + ": config must be a JSON object");

    TrainConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "lr") cfg.lr = get_double(j, "lr");
        else if (key == "weight_decay") cfg.weight_decay = get_double(j, "weight_decay");
        else if (key == "beta1") cfg.beta1 = get_double(j, "beta1");
        else if (key == "beta2") cfg.beta2 = get_double(j, "beta2");
        else if (key == "adam_eps") cfg.adam_eps = get_double(j, "adam_eps");
        else if (key == "batch_size") cfg.batch_size = get_int(j, "batch_size");
        else if (key == "epochs") cfg.epochs = get_int(j, "epochs");
        else if (key == "seed") {
            if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
                throw Error("config: key \"seed\" must be a non-negative integer");
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "max_len") cfg.model.max_len = get_int(j, "max_len");
        else if (key == "delta") cfg.model.delta = get_int(j, "delta");
        else if (key == "gamma") cfg.model.gamma = get_int(j, "gamma");
        else if (key == "eta") cfg.model.eta = get_int(j, "eta");
        else if (key == "d_ff") cfg.model.d_ff = get_int(j, "d_ff");
        else if (key == "alpha") cfg.model.alpha = get_double(j, "alpha");
        else if (key == "beta") cfg.model.beta = get_double(j, "beta");
        else if (key == "drop_rate") cfg.model.drop_rate = get_double(j, "drop_rate");
        else if (key == "ablation") {
            if (!value.is_string()) throw Error("config: key \"ablation\" must be a string");
            cfg.model.ablation = ablation_from_string(value.get<std::string>());
        } else {
            throw Error("config: unknown key \"" + key + "\"");
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_train_config(text, path);
}

AdamW::AdamW(const TrainConfig& cfg, ModelParams& params)
    : lr_(cfg.lr),
      wd_(cfg.weight_decay),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps),
      params_(&params) {
    cfg.validate();
    for (const auto& g : params.groups()) {
        m_.emplace_back(g.data->size(), 0.0);
        v_.emplace_back(g.data->size(), 0.0);
    }
}

void AdamW::step(ModelParams& grads) {
    auto pg = params_->groups();
    auto gg = grads.groups();
    if (pg.size() != m_.size() || gg.size() != m_.size())
        throw Error("optimizer: parameter group mismatch");

    ++t_;
    const double inv_bc1 = 1.0 / (1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const double inv_bc2 = 1.0 / (1.0 - std::pow(beta2_, static_cast<double>(t_)));

    for (std::size_t i = 0; i < pg.size(); ++i) {
        auto& p = *pg[i].data;
        const auto& g = *gg[i].data;
        if (p.size() != g.size() || p.size() != m_[i].size())
            throw Error("optimizer: size mismatch in group " + pg[i].name);
        for (double x : g)
            if (!std::isfinite(x))
                throw Error("optimizer: non-finite gradient in group " + pg[i].name);
        kernels::adamw_update(p.size(), p.data(), g.data(), m_[i].data(), v_[i].data(), lr_,
                              beta1_, beta2_, eps_, wd_, inv_bc1, inv_bc2);
    }
}

TrainResult train_model(const Corpus& corpus, const CooccurrenceMatrix& cooc, TrainConfig cfg,
                        const EpochCallback& on_epoch) {
    cfg.validate();
    cfg.model.label_count = corpus.labels.size();
    cfg.model.vocab_size = corpus.tokens.size();
    cfg.model.validate();
    if (corpus.train.docs.empty()) throw Error("training split is empty");
    if (cooc.label_count() != cfg.model.label_count)
        throw Error("co-occurrence matrix does not match the label vocabulary");

    const auto& docs = corpus.train.docs;
    const auto& freq = corpus.labels.frequency;
    const std::size_t n = docs.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    TrainResult result;
    result.config = cfg.model;
    result.params = ModelParams::init(cfg.model, cfg.seed);
    AdamW opt(cfg, result.params);
    auto grads = ModelParams::zeros(cfg.model);
    auto grad_groups = grads.groups();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::int32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
        deterministic_shuffle(order, rng);

        double sum_loss = 0.0, sum_l1 = 0.0, sum_l2 = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            for (auto& g : grad_groups) std::fill(g.data->begin(), g.data->end(), 0.0);
            for (std::size_t i = start; i < start + count; ++i) {
                const auto& doc = docs[order[i]];
                auto tr = forward(doc, result.params, cooc, freq, cfg.model, true, &rng);
                auto parts = compute_loss(tr, doc.labels, cfg.model);
                sum_loss += parts.combined;
                sum_l1 += parts.l1;
                sum_l2 += parts.l2;
                backward(tr, doc.labels, result.params, cfg.model, grads,
                         1.0 / static_cast<double>(count));
            }
            opt.step(grads);
        }

        EpochLog log;
        log.epoch = epoch;
        log.loss = sum_loss / static_cast<double>(n);
        log.l1 = sum_l1 / static_cast<double>(n);
        log.l2 = sum_l2 / static_cast<double>(n);
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return result;
}

MetricsReport evaluate_model(const ModelParams& params, const ModelConfig& cfg,
                             const CooccurrenceMatrix& cooc,
                             const std::vector<std::uint64_t>& freq, const Dataset& data,
                             const std::vector<int>& p_ks, const std::vector<int>& ndcg_ks) {
    if (data.docs.empty()) throw Error("evaluation split is empty");
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<std::int32_t>> truths;
    scores.reserve(data.docs.size());
    truths.reserve(data.docs.size());
    for (const auto& doc : data.docs) {
        auto tr = forward(doc, params, cooc, freq, cfg, false, nullptr);
        scores.push_back(predict_scores(tr, cfg));
        truths.push_back(doc.labels);
    }
    return evaluate_scores(scores, truths, p_ks, ndcg_ks);
}

void set_sweep_parameter(TrainConfig& cfg, const std::string& param, double value) {
    auto as_int = [&](const char* what) {
        if (value != std::floor(value) || !std::isfinite(value))
            throw Error(std::string("sweep: ") + what + " requires an integer value");
        return static_cast<std::int32_t>(value);
    };
    if (param == "lr") cfg.lr = value;
    else if (param == "weight_decay") cfg.weight_decay = value;
    else if (param == "batch_size") cfg.batch_size = as_int("batch_size");
    else if (param == "epochs") cfg.epochs = as_int("epochs");
    else if (param == "delta") cfg.model.delta = as_int("delta");
    else if (param == "gamma") cfg.model.gamma = as_int("gamma");
    else if (param == "eta") cfg.model.eta = as_int("eta");
    else if (param == "d_ff") cfg.model.d_ff = as_int("d_ff");
    else if (param == "alpha") cfg.model.alpha = value;
    else if (param == "beta") cfg.model.beta = value;
    else if (param == "drop_rate") cfg.model.drop_rate = value;
    else
        throw Error("sweep: unknown parameter \"" + param +
                    "\" (expected lr, weight_decay, batch_size, epochs, delta, gamma, eta, d_ff, "
                    "alpha, beta, drop_rate)");
}

std::vector<SweepPoint> sweep_parameter(const Corpus& corpus, const CooccurrenceMatrix& cooc,
                                        const TrainConfig& base, const std::string& param,
                                        const std::vector<double>& values, const Dataset& eval,
                                        const std::vector<int>& p_ks,
                                        const std::vector<int>& ndcg_ks,
                                        const EpochCallback& on_epoch) {
    if (values.empty()) throw Error("sweep: no values given");
    std::vector<SweepPoint> points;
    for (double value : values) {
        TrainConfig cfg = base;
        set_sweep_parameter(cfg, param, value);
        auto trained = train_model(corpus, cooc, cfg, on_epoch);
        SweepPoint pt;
        pt.value = value;
        pt.report = evaluate_model(trained.params, trained.config, cooc, corpus.labels.frequency,
                                   eval, p_ks, ndcg_ks);
        points.push_back(std::move(pt));
    }
    return points;
}

}  // namespace corank
