#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corank/common.hpp"

namespace corank {

// One line of a JSONL dataset file, before tokenization.
struct RawRecord {
    std::string id;
    std::string text;
    std::vector<std::string> labels;
    std::size_t line = 0;
};

struct Document {
    std::string id;
    std::vector<std::int32_t> tokens;  // CLS first, then word ids, truncated
    std::vector<std::int32_t> labels;  // sorted unique ids
};

struct TokenVocab {
    std::unordered_map<std::string, std::int32_t> ids;
    std::vector<std::string> names;  // by id; reserved entries hold sentinels
    std::int32_t cls_id = 0;
    std::int32_t unk_id = 1;

    std::int32_t size() const { return static_cast<std::int32_t>(names.size()); }
};

struct LabelVocab {
    std::unordered_map<std::string, std::int32_t> ids;
    std::vector<std::string> names;        // by id
    std::vector<std::uint64_t> frequency;  // training document count per label

    std::int32_t size() const { return static_cast<std::int32_t>(names.size()); }
};

struct Dataset {
    std::vector<Document> docs;
    std::size_t total_raw_words = 0;                // before truncation
    std::size_t dropped_labels = 0;                 // labels unseen in training
    std::unordered_set<std::string> raw_vocab;      // distinct words, before truncation

    std::size_t size() const { return docs.size(); }
};

struct Corpus {
    TokenVocab tokens;
    LabelVocab labels;
    Dataset train;
};

struct DatasetStats {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t distinct_words = 0;  // union over both splits
    std::int32_t label_count = 0;
    double avg_labels_per_doc = 0.0;
    double avg_words_per_doc = 0.0;
};

// Lowercase, then split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// Reads one record per line; malformed lines raise Error naming the line.
std::vector<RawRecord> read_jsonl(const std::string& path);

// Ids are assigned by (count desc, token asc) so rebuilding from the same
// corpus is order independent. Reserved: cls=0, unk=1.
TokenVocab build_token_vocab(const std::vector<RawRecord>& records);

// Ids by (training frequency desc, name asc).
LabelVocab build_label_vocab(const std::vector<RawRecord>& records);

// Tokenizes and maps labels. training=true rejects unlabeled documents;
// otherwise unknown labels are dropped and counted on the Dataset.
Dataset make_dataset(const std::vector<RawRecord>& records, const TokenVocab& tv,
                     const LabelVocab& lv, std::size_t max_len, bool training);

Corpus load_training_corpus(const std::string& path, std::size_t max_len);
Dataset load_eval_split(const std::string& path, const TokenVocab& tv, const LabelVocab& lv,
                        std::size_t max_len);

DatasetStats compute_stats(const Dataset& train, const Dataset& test, std::int32_t label_count);

// Top ceil(head_fraction*K) labels by (frequency desc, id asc), as a K-length
// membership mask.
std::vector<std::uint8_t> head_label_mask(const LabelVocab& lv, double head_fraction);

// Head documents carry head labels only; tail documents carry at most
// max_head_count head labels.
bool is_head_doc(const std::vector<std::int32_t>& labels, const std::vector<std::uint8_t>& head_mask);
bool is_tail_doc(const std::vector<std::int32_t>& labels, const std::vector<std::uint8_t>& head_mask,
                 int max_head_count);

struct HeadTailSplit {
    Dataset head;
    Dataset tail;
};

HeadTailSplit split_head_tail(const Dataset& data, const LabelVocab& lv,
                              double head_fraction = 0.10, int max_head_count = 2);

std::uint64_t vocab_hash(const TokenVocab& tv, const LabelVocab& lv);

}  // namespace corank
