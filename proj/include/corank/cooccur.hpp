#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corank/corpus.hpp"

namespace corank {

// Symmetric label co-occurrence counts over the training split, counted at
// document level: a document labeled {i, j} contributes one count to (i, j),
// (j, i), (i, i) and (j, j). Stored sparsely (CSR over the full symmetric
// pattern) so row reads stay cheap.
class CooccurrenceMatrix {
public:
    struct UpperEntry {
        std::int32_t i = 0;
        std::int32_t j = 0;  // i <= j
        std::uint64_t count = 0;

        bool operator==(const UpperEntry&) const = default;
    };

    static CooccurrenceMatrix build(const Dataset& train, std::int32_t label_count);

    // entries must hold each pair once with 0 <= i <= j < label_count,
    // nonzero counts, ordered by (i, j).
    static CooccurrenceMatrix from_upper_entries(std::int32_t label_count,
                                                 const std::vector<UpperEntry>& entries);
    std::vector<UpperEntry> upper_entries() const;  // same order as accepted above

    std::int32_t label_count() const { return k_; }
    std::uint64_t nnz() const { return stored_; }  // stored pairs with i <= j

    std::uint64_t at(std::int32_t i, std::int32_t j) const;
    std::vector<std::uint64_t> row(std::int32_t i) const;
    void add_row_to(std::int32_t i, std::vector<std::uint64_t>& acc) const;

    // Text format: "COOC v1 <K> <nnz>" then one "i j count" line per stored
    // pair, i <= j, ordered by (i, j).
    void save(const std::string& path) const;
    static CooccurrenceMatrix load(const std::string& path);

private:
    void check_row(std::int32_t i) const;
    void finalize(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& upper);

    std::int32_t k_ = 0;
    std::uint64_t stored_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::int32_t> col_;
    std::vector<std::uint64_t> val_;
};

}  // namespace corank
