#pragma once

#include <string>

#include "corank/cooccur.hpp"
#include "corank/corpus.hpp"
#include "corank/model.hpp"

namespace corank {

// Self-contained trained model: config, vocabularies with training
// frequencies, co-occurrence counts and every parameter tensor. Evaluation
// needs nothing beyond the checkpoint and a test file.
//
// File layout: one "CORANKCKPT <json>\n" header line (format tag, model
// config, vocabulary hash), then little-endian binary sections for token
// names, label names with frequencies, co-occurrence entries and parameter
// groups in their canonical order.
struct Checkpoint {
    ModelConfig config;
    TokenVocab tokens;
    LabelVocab labels;
    CooccurrenceMatrix cooc;
    ModelParams params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);

// Validates the format tag, section sizes, tensor names and shapes, and the
// recomputed vocabulary hash.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace corank
