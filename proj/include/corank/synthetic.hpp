#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corank/corpus.hpp"

namespace corank {

// Long-tail benchmark generator. Labels split into a few frequent head
// labels and many rare tail labels; every tail belongs to one head's group
// and is only emitted together with that head (or the document's secondary
// head). Head labels get strong token signatures; tail labels leak at most a
// couple of signal tokens, so ranking them well requires exploiting the
// planted head-tail co-occurrence.
struct SyntheticSpec {
    std::int32_t head_count = 6;
    std::int32_t tails_per_head = 9;
    std::int32_t train_docs = 3000;
    std::int32_t test_docs = 600;
    std::uint64_t seed = 1;

    double head_heavy_fraction = 0.3;  // docs carrying 3-4 heads and little tail
    double second_head_prob = 0.35;    // tail docs that pick up a second head
    double tail_token_prob = 0.5;      // per signal token, two per tail label
    std::int32_t head_token_pool = 25;
    std::int32_t noise_token_pool = 200;

    std::int32_t label_count() const { return head_count * (1 + tails_per_head); }
    void validate() const;
};

struct SyntheticData {
    std::vector<RawRecord> train;
    std::vector<RawRecord> test;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// One JSON object per line, ready for the corpus loaders.
std::string records_to_jsonl(const std::vector<RawRecord>& recs);

}  // namespace corank
