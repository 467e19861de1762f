#include "corank/cooccur.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace corank {

namespace {
inline std::uint64_t pack(std::int32_t i, std::int32_t j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}
}  // namespace

CooccurrenceMatrix CooccurrenceMatrix::build(const Dataset& train, std::int32_t label_count) {
    if (label_count <= 0) throw Error("co-occurrence build: label_count must be positive");

    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    for (const auto& doc : train.docs) {
        for (auto l : doc.labels)
            if (l < 0 || l >= label_count)
                throw Error("co-occurrence build: label id " + std::to_string(l) +
                            " outside [0, " + std::to_string(label_count) + ")");
        // doc.labels is sorted unique, so i <= j pairs come out directly.
        for (std::size_t a = 0; a < doc.labels.size(); ++a)
            for (std::size_t b = a; b < doc.labels.size(); ++b)
                ++counts[pack(doc.labels[a], doc.labels[b])];
    }

    std::vector<std::pair<std::uint64_t, std::uint64_t>> upper(counts.begin(), counts.end());
    std::sort(upper.begin(), upper.end());

    CooccurrenceMatrix m;
    m.k_ = label_count;
    m.finalize(upper);
    return m;
}

void CooccurrenceMatrix::finalize(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& upper) {
    stored_ = upper.size();

    // Expand i <= j storage to the full symmetric CSR pattern.
    std::vector<std::size_t> row_count(static_cast<std::size_t>(k_), 0);
    for (const auto& [key, cnt] : upper) {
        (void)cnt;
        auto i = static_cast<std::int32_t>(key >> 32);
        auto j = static_cast<std::int32_t>(key & 0xffffffffu);
        ++row_count[i];
        if (i != j) ++row_count[j];
    }
    row_ptr_.assign(static_cast<std::size_t>(k_) + 1, 0);
    for (std::int32_t i = 0; i < k_; ++i) row_ptr_[i + 1] = row_ptr_[i] + row_count[i];
    col_.resize(row_ptr_[k_]);
    val_.resize(row_ptr_[k_]);

    std::vector<std::size_t> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
    for (const auto& [key, cnt] : upper) {
        auto i = static_cast<std::int32_t>(key >> 32);
        auto j = static_cast<std::int32_t>(key & 0xffffffffu);
        col_[cursor[i]] = j;
        val_[cursor[i]] = cnt;
        ++cursor[i];
        if (i != j) {
            col_[cursor[j]] = i;
            val_[cursor[j]] = cnt;
            ++cursor[j];
        }
    }
    // Rows whose upper part arrives sorted still interleave with mirrored
    // entries; restore column order per row.
    for (std::int32_t i = 0; i < k_; ++i) {
        auto begin = row_ptr_[i], end = row_ptr_[i + 1];
        std::vector<std::pair<std::int32_t, std::uint64_t>> entries;
        entries.reserve(end - begin);
        for (auto p = begin; p < end; ++p) entries.emplace_back(col_[p], val_[p]);
        std::sort(entries.begin(), entries.end());
        for (std::size_t p = 0; p < entries.size(); ++p) {
            col_[begin + p] = entries[p].first;
            val_[begin + p] = entries[p].second;
        }
    }
}

CooccurrenceMatrix CooccurrenceMatrix::from_upper_entries(std::int32_t label_count,
                                                          const std::vector<UpperEntry>& entries) {
    if (label_count <= 0) throw Error("co-occurrence: label_count must be positive");
    std::vector<std::pair<std::uint64_t, std::uint64_t>> upper;
    upper.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.i < 0 || e.j < e.i || e.j >= label_count)
            throw Error("co-occurrence entry (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                        ") violates 0 <= i <= j < " + std::to_string(label_count));
        if (e.count == 0) throw Error("co-occurrence entry with zero count");
        upper.emplace_back(pack(e.i, e.j), e.count);
    }
    if (!std::is_sorted(upper.begin(), upper.end()))
        throw Error("co-occurrence entries out of order");
    if (std::adjacent_find(upper.begin(), upper.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }) !=
        upper.end())
        throw Error("duplicate co-occurrence entry");

    CooccurrenceMatrix m;
    m.k_ = label_count;
    m.finalize(upper);
    return m;
}

std::vector<CooccurrenceMatrix::UpperEntry> CooccurrenceMatrix::upper_entries() const {
    std::vector<UpperEntry> out;
    out.reserve(stored_);
    for (std::int32_t i = 0; i < k_; ++i)
        for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
            if (col_[p] >= i) out.push_back({i, col_[p], val_[p]});
    return out;
}

void CooccurrenceMatrix::check_row(std::int32_t i) const {
    if (i < 0 || i >= k_)
        throw Error("co-occurrence row " + std::to_string(i) + " outside [0, " +
                    std::to_string(k_) + ")");
}

std::uint64_t CooccurrenceMatrix::at(std::int32_t i, std::int32_t j) const {
    check_row(i);
    check_row(j);
    auto begin = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    auto end = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0;
    return val_[static_cast<std::size_t>(it - col_.begin())];
}

std::vector<std::uint64_t> CooccurrenceMatrix::row(std::int32_t i) const {
    check_row(i);
    std::vector<std::uint64_t> out(static_cast<std::size_t>(k_), 0);
    for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out[col_[p]] = val_[p];
    return out;
}

void CooccurrenceMatrix::add_row_to(std::int32_t i, std::vector<std::uint64_t>& acc) const {
    check_row(i);
    if (acc.size() != static_cast<std::size_t>(k_))
        throw Error("co-occurrence accumulator has wrong length");
    for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) acc[col_[p]] += val_[p];
}

void CooccurrenceMatrix::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write co-occurrence file: " + path);
    out << "COOC v1 " << k_ << " " << stored_ << "\n";
    for (std::int32_t i = 0; i < k_; ++i) {
        for (auto p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            if (col_[p] < i) continue;  // emit each pair once, i <= j
            out << i << " " << col_[p] << " " << val_[p] << "\n";
        }
    }
    if (!out) throw Error("failed writing co-occurrence file: " + path);
}

CooccurrenceMatrix CooccurrenceMatrix::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open co-occurrence file: " + path);

    std::string magic, version;
    long long k = 0, nnz = -1;
    in >> magic >> version >> k >> nnz;
    if (!in || magic != "COOC" || version != "v1" || k <= 0 || nnz < 0)
        throw Error("bad co-occurrence header in " + path);

    std::vector<std::pair<std::uint64_t, std::uint64_t>> upper;
    upper.reserve(static_cast<std::size_t>(nnz));
    for (long long e = 0; e < nnz; ++e) {
        long long i = 0, j = 0;
        unsigned long long cnt = 0;
        in >> i >> j >> cnt;
        if (!in) throw Error(path + ": truncated after " + std::to_string(e) + " of " +
                             std::to_string(nnz) + " entries");
        if (i < 0 || j < i || j >= k)
            throw Error(path + ": entry (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") violates 0 <= i <= j < " + std::to_string(k));
        if (cnt == 0) throw Error(path + ": zero count stored explicitly");
        upper.emplace_back(pack(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)), cnt);
    }
    std::string trailing;
    if (in >> trailing) throw Error(path + ": trailing data after declared entries");
    if (!std::is_sorted(upper.begin(), upper.end()))
        throw Error(path + ": entries out of order");

    CooccurrenceMatrix m;
    m.k_ = static_cast<std::int32_t>(k);
    m.finalize(upper);
    return m;
}

}  // namespace corank
