#pragma once

#include <cstdint>
#include <vector>

#include "corank/cooccur.hpp"

namespace corank {

enum class LabelSource : std::uint8_t { Seed, Expanded };

struct RerankedSequence {
    std::vector<std::int32_t> labels;
    std::vector<LabelSource> provenance;
};

// Seed labels: scores strictly above alpha, ordered by (score desc, id asc),
// truncated to gamma. An empty result falls back to the argmax label.
std::vector<std::int32_t> select_seed_labels(const std::vector<double>& s1, double alpha,
                                             std::int32_t gamma);

// Sum of matrix rows over the seed labels; integer, so order independent.
std::vector<std::uint64_t> cooccur_sums(const std::vector<std::int32_t>& seeds,
                                        const CooccurrenceMatrix& m);

// Top (gamma - |seeds|) labels outside the seed set by (summed co-occurrence
// desc, id asc), counting only nonzero sums as support; the remainder pads by
// (training frequency desc, id asc).
std::vector<std::int32_t> expand_labels(const std::vector<std::int32_t>& seeds,
                                        const CooccurrenceMatrix& m,
                                        const std::vector<std::uint64_t>& freq, std::int32_t gamma);

// Orders seeds plus expansion by (training frequency desc, id asc), keeping
// each label's provenance.
RerankedSequence frequency_rank(const std::vector<std::int32_t>& seeds,
                                const std::vector<std::int32_t>& expanded,
                                const std::vector<std::uint64_t>& freq);

RerankedSequence rerank_pipeline(const std::vector<double>& s1, const CooccurrenceMatrix& m,
                                 const std::vector<std::uint64_t>& freq, double alpha,
                                 std::int32_t gamma);

// Stage variants used by ablations: expansion from next-best scores instead
// of the matrix, and selection order instead of frequency order.
struct RerankOptions {
    bool use_cooccur = true;
    bool use_freq_rank = true;
};

RerankedSequence rerank_with_options(const std::vector<double>& s1, const CooccurrenceMatrix& m,
                                     const std::vector<std::uint64_t>& freq, double alpha,
                                     std::int32_t gamma, const RerankOptions& opt);

}  // namespace corank
