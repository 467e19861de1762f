#include "corank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

#include "corank/common.hpp"

namespace corank {
namespace {

std::string head_name(int h) { return "H" + std::to_string(h); }

std::string tail_name(int t) {
    std::string digits = std::to_string(t);
    if (digits.size() < 2) digits.insert(digits.begin(), '0');
    return "T" + digits;
}

int weighted_pick(const std::vector<double>& weights, double total, std::mt19937_64& g) {
    double r = rng_unit(g) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        r -= weights[i];
        if (r < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

struct Gen {
    const SyntheticSpec& spec;
    std::vector<double> head_weight;  // popularity across heads
    std::vector<double> tail_weight;  // popularity across ranks within a group
    double head_total = 0.0;
    double tail_total = 0.0;

    explicit Gen(const SyntheticSpec& s) : spec(s) {
        head_weight.resize(spec.head_count);
        for (int h = 0; h < spec.head_count; ++h) {
            head_weight[h] = 1.0 / std::pow(h + 1.0, 0.7);
            head_total += head_weight[h];
        }
        tail_weight.resize(spec.tails_per_head);
        for (int r = 0; r < spec.tails_per_head; ++r) {
            tail_weight[r] = 1.0 / (r + 1.0);
            tail_total += tail_weight[r];
        }
    }

    int pick_head(std::mt19937_64& g) const { return weighted_pick(head_weight, head_total, g); }

    std::vector<int> pick_distinct_heads(std::mt19937_64& g, int want) const {
        std::vector<int> out;
        while (static_cast<int>(out.size()) < want) {
            int h = pick_head(g);
            if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
        }
        return out;
    }

    // Tails are drawn from the given groups only, Zipf over within-group rank.
    std::vector<int> pick_tails(std::mt19937_64& g, const std::vector<int>& groups, int want,
                                double first_group_prob) const {
        std::vector<int> out;
        int guard = 0;
        while (static_cast<int>(out.size()) < want && guard < 256) {
            ++guard;
            int grp = groups[0];
            if (groups.size() > 1 && rng_unit(g) >= first_group_prob)
                grp = groups[1 + rng_below(g, groups.size() - 1)];
            int rank = weighted_pick(tail_weight, tail_total, g);
            int tail = grp * spec.tails_per_head + rank;
            if (std::find(out.begin(), out.end(), tail) == out.end()) out.push_back(tail);
        }
        return out;
    }

    RawRecord make_doc(std::mt19937_64& g, std::string id, std::size_t line) const {
        std::vector<int> heads;
        std::vector<int> tails;
        if (rng_unit(g) < spec.head_heavy_fraction) {
            int want = std::min(spec.head_count, 3 + static_cast<int>(rng_below(g, 2)));
            heads = pick_distinct_heads(g, want);
            int n_tails = rng_unit(g) < 0.5 ? 0 : 1;
            if (n_tails > 0) {
                std::vector<int> one = {heads[rng_below(g, heads.size())]};
                tails = pick_tails(g, one, n_tails, 1.0);
            }
        } else {
            heads.push_back(pick_head(g));
            if (spec.head_count > 1 && rng_unit(g) < spec.second_head_prob) {
                int second = heads[0];
                while (second == heads[0]) second = pick_head(g);
                heads.push_back(second);
            }
            tails = pick_tails(g, heads, 2 + static_cast<int>(rng_below(g, 3)), 0.7);
        }

        std::vector<std::string> words;
        for (int h : heads) {
            int cnt = 3 + static_cast<int>(rng_below(g, 4));
            for (int i = 0; i < cnt; ++i)
                words.push_back("h" + std::to_string(h) + "w" +
                                std::to_string(rng_below(g, spec.head_token_pool)));
        }
        for (int t : tails) {
            if (rng_unit(g) < spec.tail_token_prob) words.push_back("t" + std::to_string(t) + "a");
            if (rng_unit(g) < spec.tail_token_prob) words.push_back("t" + std::to_string(t) + "b");
        }
        int noise = 8 + static_cast<int>(rng_below(g, 8));
        for (int i = 0; i < noise; ++i)
            words.push_back("n" + std::to_string(rng_below(g, spec.noise_token_pool)));
        deterministic_shuffle(words, g);

        RawRecord rec;
        rec.id = std::move(id);
        rec.line = line;
        std::string text;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (i) text.push_back(' ');
            text += words[i];
        }
        rec.text = std::move(text);
        for (int h : heads) rec.labels.push_back(head_name(h));
        for (int t : tails) rec.labels.push_back(tail_name(t));
        return rec;
    }
};

}  // namespace

void SyntheticSpec::validate() const {
    if (head_count < 1) throw Error("synthetic: head_count must be positive");
    if (tails_per_head < 1) throw Error("synthetic: tails_per_head must be positive");
    if (train_docs < 1) throw Error("synthetic: train_docs must be positive");
    if (test_docs < 0) throw Error("synthetic: test_docs must be non-negative");
    if (!(head_heavy_fraction >= 0.0 && head_heavy_fraction <= 1.0))
        throw Error("synthetic: head_heavy_fraction must be in [0, 1]");
    if (!(second_head_prob >= 0.0 && second_head_prob <= 1.0))
        throw Error("synthetic: second_head_prob must be in [0, 1]");
    if (!(tail_token_prob >= 0.0 && tail_token_prob <= 1.0))
        throw Error("synthetic: tail_token_prob must be in [0, 1]");
    if (head_token_pool < 1) throw Error("synthetic: head_token_pool must be positive");
    if (noise_token_pool < 1) throw Error("synthetic: noise_token_pool must be positive");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Gen gen(spec);
    std::mt19937_64 g(spec.seed);

    SyntheticData out;
    out.train.reserve(spec.train_docs);
    for (int i = 0; i < spec.train_docs; ++i)
        out.train.push_back(gen.make_doc(g, "s" + std::to_string(i), i + 1));
    out.test.reserve(spec.test_docs);
    for (int i = 0; i < spec.test_docs; ++i)
        out.test.push_back(gen.make_doc(g, "v" + std::to_string(i), i + 1));
    return out;
}

std::string records_to_jsonl(const std::vector<RawRecord>& recs) {
    std::string out;
    for (const auto& rec : recs) {
        nlohmann::json j;
        j["id"] = rec.id;
        j["text"] = rec.text;
        j["labels"] = rec.labels;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace corank
