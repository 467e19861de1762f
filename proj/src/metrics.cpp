#include "corank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace corank {

namespace {

void check_instance(const std::vector<double>& scores, const std::vector<std::int32_t>& truth,
                    int k) {
    if (scores.empty()) throw Error("metrics: empty score vector");
    if (k < 1 || static_cast<std::size_t>(k) > scores.size())
        throw Error("metrics: k=" + std::to_string(k) + " outside [1, " +
                    std::to_string(scores.size()) + "]");
    for (auto t : truth)
        if (t < 0 || static_cast<std::size_t>(t) >= scores.size())
            throw Error("metrics: relevant label id " + std::to_string(t) + " out of range");
}

std::vector<std::uint8_t> relevance_mask(std::size_t n, const std::vector<std::int32_t>& truth) {
    std::vector<std::uint8_t> rel(n, 0);
    for (auto t : truth) rel[t] = 1;
    return rel;
}

}  // namespace

std::vector<std::int32_t> rank_labels(const std::vector<double>& scores) {
    std::vector<std::int32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

double precision_at_k(const std::vector<double>& scores, const std::vector<std::int32_t>& truth,
                      int k) {
    check_instance(scores, truth, k);
    auto rel = relevance_mask(scores.size(), truth);
    auto order = rank_labels(scores);
    int hits = 0;
    for (int i = 0; i < k; ++i) hits += rel[order[i]];
    return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(const std::vector<double>& scores, const std::vector<std::int32_t>& truth, int k) {
    check_instance(scores, truth, k);
    std::size_t distinct = 0;
    {
        auto rel = relevance_mask(scores.size(), truth);
        distinct = static_cast<std::size_t>(std::count(rel.begin(), rel.end(), 1));
        if (distinct == 0) throw Error("metrics: NDCG undefined without relevant labels");

        auto order = rank_labels(scores);
        double dcg = 0.0;
        for (int i = 0; i < k; ++i)
            if (rel[order[i]]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);

        double ideal = 0.0;
        const int ideal_positions = std::min<int>(k, static_cast<int>(distinct));
        for (int i = 0; i < ideal_positions; ++i)
            ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        return dcg / ideal;
    }
}

MetricsReport evaluate_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::vector<std::int32_t>>& truths,
                              const std::vector<int>& p_ks, const std::vector<int>& ndcg_ks) {
    if (scores.empty()) throw Error("metrics: no documents to evaluate");
    if (scores.size() != truths.size())
        throw Error("metrics: score and truth table sizes differ");

    MetricsReport report;
    std::map<int, std::vector<double>> p_values, n_values;
    for (int k : p_ks) p_values[k];
    for (int k : ndcg_ks) n_values[k];

    for (std::size_t d = 0; d < scores.size(); ++d) {
        if (truths[d].empty()) {
            ++report.skipped;
            continue;
        }
        for (int k : p_ks) p_values[k].push_back(precision_at_k(scores[d], truths[d], k));
        for (int k : ndcg_ks) n_values[k].push_back(ndcg_at_k(scores[d], truths[d], k));
        ++report.n_docs;
    }
    if (report.n_docs == 0) throw Error("metrics: every document had empty truth");

    for (auto& [k, vals] : p_values) report.p_at[k] = pairwise_mean(vals);
    for (auto& [k, vals] : n_values) report.ndcg_at[k] = pairwise_mean(vals);
    return report;
}

namespace {

nlohmann::json report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    for (const auto& [k, v] : report.p_at) j["P@" + std::to_string(k)] = v;
    for (const auto& [k, v] : report.ndcg_at) j["NDCG@" + std::to_string(k)] = v;
    j["n_docs"] = report.n_docs;
    if (report.skipped > 0) j["skipped"] = report.skipped;
    for (const auto& [name, sub] : report.per_subset) j["per_subset"][name] = report_to_json(sub);
    return j;
}

}  // namespace

std::string metrics_report_json(const MetricsReport& report) {
    return report_to_json(report).dump();
}

}  // namespace corank
