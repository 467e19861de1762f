#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corank/common.hpp"

namespace corank {

// Label ids ordered by (score desc, id asc).
std::vector<std::int32_t> rank_labels(const std::vector<double>& scores);

// Fraction of the top-k ranked labels that are relevant. k must be within
// [1, label count]; truth ids must be in range.
double precision_at_k(const std::vector<double>& scores, const std::vector<std::int32_t>& truth,
                      int k);

// DCG@k over binary relevance divided by the ideal DCG, whose positions run
// to min(k, number of relevant labels). Empty truth raises.
double ndcg_at_k(const std::vector<double>& scores, const std::vector<std::int32_t>& truth, int k);

struct MetricsReport {
    std::map<int, double> p_at;
    std::map<int, double> ndcg_at;
    std::size_t n_docs = 0;   // documents contributing to the means
    std::size_t skipped = 0;  // documents with no relevant labels
    std::map<std::string, MetricsReport> per_subset;
};

// Mean per-document metrics over a score table. Documents with empty truth
// are skipped and counted.
MetricsReport evaluate_scores(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::vector<std::int32_t>>& truths,
                              const std::vector<int>& p_ks, const std::vector<int>& ndcg_ks);

std::string metrics_report_json(const MetricsReport& report);

}  // namespace corank
