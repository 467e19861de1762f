#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "corank/cooccur.hpp"
#include "corank/corpus.hpp"
#include "corank/synthetic.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace corank;

namespace {

SyntheticSpec small_spec() {
    SyntheticSpec spec;
    spec.train_docs = 400;
    spec.test_docs = 80;
    spec.seed = 11;
    return spec;
}

bool parse_label(const std::string& name, bool& is_head, int& index) {
    if (name.size() < 2 || (name[0] != 'H' && name[0] != 'T')) return false;
    is_head = name[0] == 'H';
    index = std::stoi(name.substr(1));
    return true;
}

}  // namespace

TEST_CASE("generator is deterministic and respects counts") {
    auto spec = small_spec();
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);

    REQUIRE(a.train.size() == 400);
    REQUIRE(a.test.size() == 80);
    REQUIRE(b.train.size() == a.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].id == b.train[i].id);
        CHECK(a.train[i].text == b.train[i].text);
        CHECK(a.train[i].labels == b.train[i].labels);
    }
    for (std::size_t i = 0; i < a.test.size(); ++i) {
        CHECK(a.test[i].text == b.test[i].text);
        CHECK(a.test[i].labels == b.test[i].labels);
    }

    spec.seed = 12;
    auto c = generate_synthetic(spec);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.train.size() && !any_diff; ++i)
        any_diff = a.train[i].text != c.train[i].text;
    CHECK(any_diff);

    SUBCASE("invalid specs are rejected") {
        SyntheticSpec bad = small_spec();
        bad.head_count = 0;
        CHECK_THROWS_AS(generate_synthetic(bad), Error);
        bad = small_spec();
        bad.tail_token_prob = 1.5;
        CHECK_THROWS_AS(generate_synthetic(bad), Error);
        bad = small_spec();
        bad.train_docs = 0;
        CHECK_THROWS_AS(generate_synthetic(bad), Error);
    }
}

TEST_CASE("every document pairs its tail labels with a planted head") {
    auto spec = small_spec();
    auto data = generate_synthetic(spec);

    auto check_split = [&spec](const std::vector<RawRecord>& recs) {
        for (const auto& rec : recs) {
            REQUIRE(!rec.labels.empty());
            std::set<int> heads;
            std::vector<int> tails;
            for (const auto& name : rec.labels) {
                bool is_head = false;
                int index = -1;
                REQUIRE(parse_label(name, is_head, index));
                if (is_head) {
                    REQUIRE(index >= 0);
                    REQUIRE(index < spec.head_count);
                    heads.insert(index);
                } else {
                    REQUIRE(index >= 0);
                    REQUIRE(index < spec.head_count * spec.tails_per_head);
                    tails.push_back(index);
                }
            }
            CHECK(!heads.empty());
            for (int t : tails) CHECK(heads.count(t / spec.tails_per_head) == 1);
        }
    };
    check_split(data.train);
    check_split(data.test);
}

TEST_CASE("head labels dominate the frequency ranking") {
    auto spec = small_spec();
    spec.train_docs = 1500;
    auto data = generate_synthetic(spec);
    auto lv = build_label_vocab(data.train);

    REQUIRE(lv.size() == spec.label_count());
    for (int id = 0; id < spec.head_count; ++id) CHECK(lv.names[id][0] == 'H');
    CHECK(lv.names[0] == "H0");

    auto mask = head_label_mask(lv, 0.1);
    int marked = 0;
    for (int id = 0; id < lv.size(); ++id) {
        if (mask[id]) {
            ++marked;
            CHECK(lv.names[id][0] == 'H');
        }
    }
    CHECK(marked == spec.head_count);
}

TEST_CASE("co-occurrence follows the planted group structure") {
    auto spec = small_spec();
    spec.train_docs = 1500;
    auto data = generate_synthetic(spec);
    auto tv = build_token_vocab(data.train);
    auto lv = build_label_vocab(data.train);
    auto train = make_dataset(data.train, tv, lv, 64, true);
    auto m = CooccurrenceMatrix::build(train, lv.size());

    auto label_id = [&lv](const std::string& name) {
        auto it = lv.ids.find(name);
        REQUIRE(it != lv.ids.end());
        return it->second;
    };

    double within = 0.0;
    double across = 0.0;
    int within_n = 0;
    int across_n = 0;
    for (int h = 0; h < spec.head_count; ++h) {
        auto hid = label_id("H" + std::to_string(h));
        for (int t = 0; t < spec.head_count * spec.tails_per_head; ++t) {
            std::string digits = std::to_string(t);
            if (digits.size() < 2) digits.insert(digits.begin(), '0');
            auto tid = label_id("T" + digits);
            double c = static_cast<double>(m.at(hid, tid));
            if (t / spec.tails_per_head == h) {
                within += c;
                ++within_n;
            } else {
                across += c;
                ++across_n;
            }
        }
    }
    CHECK(within / within_n > 10.0 * (across / across_n + 1e-9));

    auto t0 = label_id("T00");
    CHECK(m.at(label_id("H0"), t0) > 0);
}

TEST_CASE("both splits keep a large share of tail documents") {
    auto spec = small_spec();
    auto data = generate_synthetic(spec);
    auto lv = build_label_vocab(data.train);
    auto tv = build_token_vocab(data.train);
    auto train = make_dataset(data.train, tv, lv, 64, true);
    auto test = make_dataset(data.test, tv, lv, 64, false);

    auto train_split = split_head_tail(train, lv);
    auto test_split = split_head_tail(test, lv);
    CHECK(train_split.tail.size() > train.size() / 2);
    CHECK(test_split.tail.size() > test.size() / 2);
    CHECK(train_split.head.size() > 0);
}

TEST_CASE("generated records survive a jsonl round trip") {
    auto spec = small_spec();
    spec.train_docs = 25;
    spec.test_docs = 0;
    auto data = generate_synthetic(spec);

    auto path = write_temp_file("synthetic_roundtrip.jsonl", records_to_jsonl(data.train));
    auto back = read_jsonl(path);
    REQUIRE(back.size() == data.train.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == data.train[i].id);
        CHECK(back[i].text == data.train[i].text);
        CHECK(back[i].labels == data.train[i].labels);
    }
}
