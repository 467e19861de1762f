#include "corank/rerank.hpp"

#include <algorithm>

namespace corank {

namespace {

void check_args(std::size_t k, const std::vector<double>& s1,
                const std::vector<std::uint64_t>& freq, double alpha, std::int32_t gamma) {
    if (s1.size() != k) throw Error("rerank: score vector length does not match label count");
    if (freq.size() != k) throw Error("rerank: frequency vector length does not match label count");
    if (alpha < 0.0 || alpha >= 1.0) throw Error("rerank: alpha must be in [0, 1)");
    if (gamma < 1) throw Error("rerank: gamma must be at least 1");
    if (static_cast<std::size_t>(gamma) > k)
        throw Error("rerank: gamma exceeds label count (" + std::to_string(gamma) + " > " +
                    std::to_string(k) + ")");
}

}  // namespace

std::vector<std::int32_t> select_seed_labels(const std::vector<double>& s1, double alpha,
                                             std::int32_t gamma) {
    if (s1.empty()) throw Error("rerank: empty score vector");
    if (gamma < 1) throw Error("rerank: gamma must be at least 1");

    std::vector<std::int32_t> picked;
    for (std::size_t i = 0; i < s1.size(); ++i)
        if (s1[i] > alpha) picked.push_back(static_cast<std::int32_t>(i));

    std::sort(picked.begin(), picked.end(), [&](std::int32_t a, std::int32_t b) {
        if (s1[a] != s1[b]) return s1[a] > s1[b];
        return a < b;
    });
    if (picked.size() > static_cast<std::size_t>(gamma)) picked.resize(gamma);

    if (picked.empty()) {
        std::int32_t best = 0;
        for (std::size_t i = 1; i < s1.size(); ++i)
            if (s1[i] > s1[best]) best = static_cast<std::int32_t>(i);
        picked.push_back(best);
    }
    return picked;
}

std::vector<std::uint64_t> cooccur_sums(const std::vector<std::int32_t>& seeds,
                                        const CooccurrenceMatrix& m) {
    std::vector<std::uint64_t> sums(static_cast<std::size_t>(m.label_count()), 0);
    for (auto s : seeds) m.add_row_to(s, sums);
    return sums;
}

std::vector<std::int32_t> expand_labels(const std::vector<std::int32_t>& seeds,
                                        const CooccurrenceMatrix& m,
                                        const std::vector<std::uint64_t>& freq, std::int32_t gamma) {
    const auto k = static_cast<std::size_t>(m.label_count());
    if (freq.size() != k) throw Error("rerank: frequency vector length does not match label count");
    if (seeds.size() >= static_cast<std::size_t>(gamma)) return {};

    auto sums = cooccur_sums(seeds, m);
    std::vector<std::uint8_t> taken(k, 0);
    for (auto s : seeds) taken[s] = 1;

    std::vector<std::int32_t> supported, rest;
    for (std::size_t i = 0; i < k; ++i) {
        if (taken[i]) continue;
        if (sums[i] > 0)
            supported.push_back(static_cast<std::int32_t>(i));
        else
            rest.push_back(static_cast<std::int32_t>(i));
    }
    std::sort(supported.begin(), supported.end(), [&](std::int32_t a, std::int32_t b) {
        if (sums[a] != sums[b]) return sums[a] > sums[b];
        return a < b;
    });
    std::sort(rest.begin(), rest.end(), [&](std::int32_t a, std::int32_t b) {
        if (freq[a] != freq[b]) return freq[a] > freq[b];
        return a < b;
    });

    const std::size_t want = static_cast<std::size_t>(gamma) - seeds.size();
    std::vector<std::int32_t> out;
    for (auto l : supported) {
        if (out.size() == want) break;
        out.push_back(l);
    }
    for (auto l : rest) {
        if (out.size() == want) break;
        out.push_back(l);
    }
    return out;
}

RerankedSequence frequency_rank(const std::vector<std::int32_t>& seeds,
                                const std::vector<std::int32_t>& expanded,
                                const std::vector<std::uint64_t>& freq) {
    struct Entry {
        std::int32_t label;
        LabelSource source;
    };
    std::vector<Entry> entries;
    entries.reserve(seeds.size() + expanded.size());
    for (auto l : seeds) entries.push_back({l, LabelSource::Seed});
    for (auto l : expanded) entries.push_back({l, LabelSource::Expanded});
    for (const auto& e : entries)
        if (e.label < 0 || static_cast<std::size_t>(e.label) >= freq.size())
            throw Error("rerank: label id outside frequency table");

    std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
        if (freq[a.label] != freq[b.label]) return freq[a.label] > freq[b.label];
        return a.label < b.label;
    });

    RerankedSequence seq;
    for (const auto& e : entries) {
        seq.labels.push_back(e.label);
        seq.provenance.push_back(e.source);
    }
    return seq;
}

RerankedSequence rerank_pipeline(const std::vector<double>& s1, const CooccurrenceMatrix& m,
                                 const std::vector<std::uint64_t>& freq, double alpha,
                                 std::int32_t gamma) {
    return rerank_with_options(s1, m, freq, alpha, gamma, RerankOptions{});
}

RerankedSequence rerank_with_options(const std::vector<double>& s1, const CooccurrenceMatrix& m,
                                     const std::vector<std::uint64_t>& freq, double alpha,
                                     std::int32_t gamma, const RerankOptions& opt) {
    check_args(static_cast<std::size_t>(m.label_count()), s1, freq, alpha, gamma);

    auto seeds = select_seed_labels(s1, alpha, gamma);

    std::vector<std::int32_t> expanded;
    if (opt.use_cooccur) {
        expanded = expand_labels(seeds, m, freq, gamma);
    } else if (seeds.size() < static_cast<std::size_t>(gamma)) {
        // Next-best initial scores stand in for the matrix.
        std::vector<std::uint8_t> taken(s1.size(), 0);
        for (auto s : seeds) taken[s] = 1;
        std::vector<std::int32_t> rest;
        for (std::size_t i = 0; i < s1.size(); ++i)
            if (!taken[i]) rest.push_back(static_cast<std::int32_t>(i));
        std::sort(rest.begin(), rest.end(), [&](std::int32_t a, std::int32_t b) {
            if (s1[a] != s1[b]) return s1[a] > s1[b];
            return a < b;
        });
        const std::size_t want = static_cast<std::size_t>(gamma) - seeds.size();
        expanded.assign(rest.begin(), rest.begin() + std::min(want, rest.size()));
    }

    if (opt.use_freq_rank) return frequency_rank(seeds, expanded, freq);

    RerankedSequence seq;
    for (auto l : seeds) {
        seq.labels.push_back(l);
        seq.provenance.push_back(LabelSource::Seed);
    }
    for (auto l : expanded) {
        seq.labels.push_back(l);
        seq.provenance.push_back(LabelSource::Expanded);
    }
    return seq;
}

}  // namespace corank
