#include <random>

#include "doctest.h"

#include "corank/common.hpp"
#include "corank/cooccur.hpp"
#include "corank/corpus.hpp"
#include "test_util.hpp"

using namespace corank;

namespace {

Dataset dataset_from_label_sets(const std::vector<std::vector<std::int32_t>>& sets) {
    Dataset ds;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        Document d;
        d.id = std::to_string(i);
        d.labels = sets[i];
        std::sort(d.labels.begin(), d.labels.end());
        ds.docs.push_back(std::move(d));
    }
    return ds;
}

// Quadratic reference counter: for every ordered label pair of every
// document, bump a dense K x K table.
std::vector<std::uint64_t> dense_oracle(const Dataset& ds, std::int32_t k) {
    std::vector<std::uint64_t> m(static_cast<std::size_t>(k) * k, 0);
    for (const auto& doc : ds.docs)
        for (auto i : doc.labels)
            for (auto j : doc.labels) m[static_cast<std::size_t>(i) * k + j] += 1;
    return m;
}

}  // namespace

TEST_CASE("five document corpus produces the hand-counted rows") {
    // Label sets: {0,1} {0,1,2} {0,3} {1,2} {0}
    auto ds = dataset_from_label_sets({{0, 1}, {0, 1, 2}, {0, 3}, {1, 2}, {0}});
    auto m = CooccurrenceMatrix::build(ds, 5);

    CHECK(m.row(0) == std::vector<std::uint64_t>{4, 2, 1, 1, 0});
    CHECK(m.row(1) == std::vector<std::uint64_t>{2, 3, 2, 0, 0});
    CHECK(m.row(2) == std::vector<std::uint64_t>{1, 2, 2, 0, 0});
    CHECK(m.row(3) == std::vector<std::uint64_t>{1, 0, 0, 1, 0});
    CHECK(m.row(4) == std::vector<std::uint64_t>{0, 0, 0, 0, 0});
    CHECK(m.at(0, 1) == 2);
    CHECK(m.at(1, 0) == 2);
    CHECK(m.at(4, 4) == 0);
}

TEST_CASE("matrix matches the quadratic oracle on random corpora") {
    std::mt19937_64 g(71);
    for (int trial = 0; trial < 50; ++trial) {
        std::int32_t k = 2 + static_cast<std::int32_t>(rng_below(g, 19));
        std::size_t n_docs = 1 + rng_below(g, 40);
        std::vector<std::vector<std::int32_t>> sets(n_docs);
        for (auto& s : sets) {
            std::size_t count = 1 + rng_below(g, std::min<std::uint64_t>(k, 6));
            std::vector<std::int32_t> pool(k);
            std::iota(pool.begin(), pool.end(), 0);
            deterministic_shuffle(pool, g);
            s.assign(pool.begin(), pool.begin() + count);
        }
        auto ds = dataset_from_label_sets(sets);
        auto m = CooccurrenceMatrix::build(ds, k);
        auto want = dense_oracle(ds, k);
        for (std::int32_t i = 0; i < k; ++i) {
            auto row = m.row(i);
            for (std::int32_t j = 0; j < k; ++j)
                CHECK(row[j] == want[static_cast<std::size_t>(i) * k + j]);
        }
    }
}

TEST_CASE("matrix is symmetric and the diagonal equals training frequency") {
    std::mt19937_64 g(72);
    std::int32_t k = 30;
    std::vector<std::vector<std::int32_t>> sets;
    std::vector<std::uint64_t> freq(k, 0);
    for (int d = 0; d < 100; ++d) {
        std::vector<std::int32_t> s;
        for (std::int32_t l = 0; l < k; ++l)
            if (rng_unit(g) < 0.15) s.push_back(l);
        if (s.empty()) s.push_back(static_cast<std::int32_t>(rng_below(g, k)));
        for (auto l : s) ++freq[l];
        sets.push_back(s);
    }
    auto ds = dataset_from_label_sets(sets);
    auto m = CooccurrenceMatrix::build(ds, k);
    for (std::int32_t i = 0; i < k; ++i) {
        CHECK(m.at(i, i) == freq[i]);
        for (std::int32_t j = 0; j < k; ++j) CHECK(m.at(i, j) == m.at(j, i));
    }
}

TEST_CASE("row sums accumulate exactly") {
    auto ds = dataset_from_label_sets({{0, 1}, {0, 1, 2}, {0, 3}, {1, 2}, {0}});
    auto m = CooccurrenceMatrix::build(ds, 5);
    std::vector<std::uint64_t> acc(5, 0);
    m.add_row_to(0, acc);
    m.add_row_to(1, acc);
    CHECK(acc == std::vector<std::uint64_t>{6, 5, 3, 1, 0});
}

TEST_CASE("save and load round-trip the matrix") {
    auto ds = dataset_from_label_sets({{0, 1}, {0, 1, 2}, {0, 3}, {1, 2}, {0}});
    auto m = CooccurrenceMatrix::build(ds, 5);
    auto path = temp_path("m.cooc");
    m.save(path);
    auto r = CooccurrenceMatrix::load(path);
    REQUIRE(r.label_count() == 5);
    for (std::int32_t i = 0; i < 5; ++i) CHECK(r.row(i) == m.row(i));
}

TEST_CASE("an all-zero matrix round-trips as a header-only file") {
    Dataset empty_docs;
    auto m = CooccurrenceMatrix::build(empty_docs, 4);
    auto path = temp_path("zero.cooc");
    m.save(path);
    auto r = CooccurrenceMatrix::load(path);
    CHECK(r.label_count() == 4);
    CHECK(r.nnz() == 0);
    CHECK(r.row(2) == std::vector<std::uint64_t>{0, 0, 0, 0});
}

TEST_CASE("corrupt or truncated matrix files are rejected") {
    CHECK_THROWS_AS(CooccurrenceMatrix::load(write_temp_file("c1.cooc", "BOGUS v1 4 0\n")), Error);
    CHECK_THROWS_AS(CooccurrenceMatrix::load(write_temp_file("c2.cooc", "COOC v1 4 2\n0 1 3\n")),
                    Error);
    CHECK_THROWS_AS(CooccurrenceMatrix::load(write_temp_file("c3.cooc", "COOC v1 4 1\n0 9 3\n")),
                    Error);
    CHECK_THROWS_AS(CooccurrenceMatrix::load(write_temp_file("c4.cooc", "COOC v1 4 1\n2 1 3\n")),
                    Error);
    CHECK_THROWS_AS(CooccurrenceMatrix::load(write_temp_file("c5.cooc", "COOC v1\n")), Error);
}

TEST_CASE("out of range row access raises") {
    auto ds = dataset_from_label_sets({{0, 1}});
    auto m = CooccurrenceMatrix::build(ds, 2);
    CHECK_THROWS_AS(m.row(2), Error);
    CHECK_THROWS_AS(m.row(-1), Error);
    CHECK_THROWS_AS(m.at(0, 5), Error);
}

TEST_CASE("labels outside the vocabulary range are rejected at build") {
    auto ds = dataset_from_label_sets({{0, 7}});
    CHECK_THROWS_AS(CooccurrenceMatrix::build(ds, 3), Error);
}
