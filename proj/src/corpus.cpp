#include "corank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

namespace corank {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

std::vector<RawRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file: " + path);

    std::vector<RawRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !j.contains("text") || !j["text"].is_string() ||
            !j.contains("labels") || !j["labels"].is_array()) {
            throw Error(path + ":" + std::to_string(lineno) +
                        ": record must be {\"id\": str, \"text\": str, \"labels\": [str]}");
        }
        RawRecord rec;
        rec.id = j["id"].get<std::string>();
        rec.text = j["text"].get<std::string>();
        for (const auto& l : j["labels"]) {
            if (!l.is_string())
                throw Error(path + ":" + std::to_string(lineno) + ": labels must be strings");
            rec.labels.push_back(l.get<std::string>());
        }
        rec.line = lineno;
        records.push_back(std::move(rec));
    }
    return records;
}

TokenVocab build_token_vocab(const std::vector<RawRecord>& records) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& rec : records)
        for (auto& w : tokenize(rec.text)) ++counts[w];

    std::vector<std::pair<std::string, std::uint64_t>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    TokenVocab tv;
    tv.names = {"<cls>", "<unk>"};
    tv.names.reserve(order.size() + 2);
    for (const auto& [word, cnt] : order) {
        (void)cnt;
        tv.ids.emplace(word, static_cast<std::int32_t>(tv.names.size()));
        tv.names.push_back(word);
    }
    return tv;
}

LabelVocab build_label_vocab(const std::vector<RawRecord>& records) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& rec : records) {
        std::unordered_set<std::string> uniq(rec.labels.begin(), rec.labels.end());
        for (const auto& l : uniq) ++counts[l];
    }
    if (counts.empty()) throw Error("no labels found in training records");

    std::vector<std::pair<std::string, std::uint64_t>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    LabelVocab lv;
    for (const auto& [name, cnt] : order) {
        lv.ids.emplace(name, static_cast<std::int32_t>(lv.names.size()));
        lv.names.push_back(name);
        lv.frequency.push_back(cnt);
    }
    return lv;
}

Dataset make_dataset(const std::vector<RawRecord>& records, const TokenVocab& tv,
                     const LabelVocab& lv, std::size_t max_len, bool training) {
    if (max_len < 2) throw Error("max_len must be at least 2 (CLS plus one token)");

    Dataset ds;
    ds.docs.reserve(records.size());
    for (const auto& rec : records) {
        Document doc;
        doc.id = rec.id;

        auto words = tokenize(rec.text);
        ds.total_raw_words += words.size();
        for (const auto& w : words) ds.raw_vocab.insert(w);

        doc.tokens.push_back(tv.cls_id);
        for (const auto& w : words) {
            if (doc.tokens.size() >= max_len) break;
            auto it = tv.ids.find(w);
            doc.tokens.push_back(it != tv.ids.end() ? it->second : tv.unk_id);
        }

        std::unordered_set<std::string> uniq(rec.labels.begin(), rec.labels.end());
        for (const auto& name : uniq) {
            auto it = lv.ids.find(name);
            if (it == lv.ids.end()) {
                if (training)
                    throw Error("training label missing from vocabulary: " + name);
                ++ds.dropped_labels;
            } else {
                doc.labels.push_back(it->second);
            }
        }
        std::sort(doc.labels.begin(), doc.labels.end());
        if (training && doc.labels.empty())
            throw Error("training document has no labels (line " + std::to_string(rec.line) + ")");

        ds.docs.push_back(std::move(doc));
    }
    return ds;
}

Corpus load_training_corpus(const std::string& path, std::size_t max_len) {
    auto records = read_jsonl(path);
    if (records.empty()) throw Error("empty training set: " + path);

    Corpus c;
    c.tokens = build_token_vocab(records);
    c.labels = build_label_vocab(records);
    c.train = make_dataset(records, c.tokens, c.labels, max_len, true);
    return c;
}

Dataset load_eval_split(const std::string& path, const TokenVocab& tv, const LabelVocab& lv,
                        std::size_t max_len) {
    auto records = read_jsonl(path);
    return make_dataset(records, tv, lv, max_len, false);
}

DatasetStats compute_stats(const Dataset& train, const Dataset& test, std::int32_t label_count) {
    if (train.docs.empty() && test.docs.empty()) throw Error("compute_stats: no documents");

    DatasetStats s;
    s.n_train = train.size();
    s.n_test = test.size();
    s.label_count = label_count;

    std::unordered_set<std::string> words(train.raw_vocab);
    words.insert(test.raw_vocab.begin(), test.raw_vocab.end());
    s.distinct_words = words.size();

    std::size_t n = s.n_train + s.n_test;
    std::size_t label_total = 0;
    for (const auto& d : train.docs) label_total += d.labels.size();
    for (const auto& d : test.docs) label_total += d.labels.size();
    s.avg_labels_per_doc = static_cast<double>(label_total) / static_cast<double>(n);
    s.avg_words_per_doc =
        static_cast<double>(train.total_raw_words + test.total_raw_words) / static_cast<double>(n);
    return s;
}

std::vector<std::uint8_t> head_label_mask(const LabelVocab& lv, double head_fraction) {
    const std::int32_t k = lv.size();
    if (k == 0) throw Error("head_label_mask: empty label vocabulary");
    if (head_fraction <= 0.0 || head_fraction > 1.0)
        throw Error("head_fraction must be in (0, 1]");

    auto count = static_cast<std::size_t>(
        std::ceil(head_fraction * static_cast<double>(k)));
    count = std::min<std::size_t>(count, static_cast<std::size_t>(k));

    std::vector<std::int32_t> order(k);
    for (std::int32_t i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (lv.frequency[a] != lv.frequency[b]) return lv.frequency[a] > lv.frequency[b];
        return a < b;
    });

    std::vector<std::uint8_t> mask(k, 0);
    for (std::size_t i = 0; i < count; ++i) mask[order[i]] = 1;
    return mask;
}

bool is_head_doc(const std::vector<std::int32_t>& labels, const std::vector<std::uint8_t>& head_mask) {
    if (labels.empty()) return false;
    for (auto l : labels)
        if (!head_mask[l]) return false;
    return true;
}

bool is_tail_doc(const std::vector<std::int32_t>& labels, const std::vector<std::uint8_t>& head_mask,
                 int max_head_count) {
    int heads = 0;
    for (auto l : labels)
        if (head_mask[l]) ++heads;
    return heads <= max_head_count;
}

HeadTailSplit split_head_tail(const Dataset& data, const LabelVocab& lv, double head_fraction,
                              int max_head_count) {
    auto mask = head_label_mask(lv, head_fraction);
    HeadTailSplit out;
    for (const auto& doc : data.docs) {
        if (is_head_doc(doc.labels, mask)) out.head.docs.push_back(doc);
        if (is_tail_doc(doc.labels, mask, max_head_count)) out.tail.docs.push_back(doc);
    }
    return out;
}

std::uint64_t vocab_hash(const TokenVocab& tv, const LabelVocab& lv) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const unsigned char field_sep = 0x1f, section_sep = 0x1e;
    for (const auto& name : tv.names) {
        h = fnv1a64(name, h);
        h = fnv1a64(&field_sep, 1, h);
    }
    h = fnv1a64(&section_sep, 1, h);
    for (std::size_t i = 0; i < lv.names.size(); ++i) {
        h = fnv1a64(lv.names[i], h);
        std::uint64_t f = lv.frequency[i];
        h = fnv1a64(&f, sizeof(f), h);
    }
    return h;
}

}  // namespace corank
