#include "corank/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "corank/checkpoint.hpp"
#include "corank/cooccur.hpp"
#include "corank/corpus.hpp"
#include "corank/metrics.hpp"
#include "corank/model.hpp"
#include "corank/rerank.hpp"
#include "corank/synthetic.hpp"
#include "corank/train.hpp"

namespace corank::cli {
namespace {

constexpr std::size_t kStatsMaxLen = 512;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Results go to stdout unless an output path was given; logs go to stderr.
void write_result(const std::string& out_path, std::string body) {
    if (body.empty() || body.back() != '\n') body.push_back('\n');
    if (out_path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error("cannot write output file: " + out_path);
    out << body;
    out.close();
    if (!out) throw Error("failed writing output file: " + out_path);
}

std::vector<int> ndcg_ks_from(const std::vector<int>& ks) {
    std::vector<int> out;
    for (int k : ks)
        if (k != 1) out.push_back(k);  // NDCG@1 is excluded from reports
    return out;
}

// Hyperparameter flags that win over the config file.
struct Overrides {
    std::int32_t gamma = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string ablation;
    CLI::Option* gamma_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* ablation_opt = nullptr;

    void add_rerank_flags(CLI::App* sub) {
        gamma_opt = sub->add_option("--gamma", gamma, "Reranked sequence length");
        alpha_opt = sub->add_option("--alpha", alpha, "Seed score threshold");
    }

    void add_train_flags(CLI::App* sub) {
        add_rerank_flags(sub);
        beta_opt = sub->add_option("--beta", beta, "First-stage loss weight");
        seed_opt = sub->add_option("--seed", seed, "Training seed");
        ablation_opt = sub->add_option(
            "--ablation", ablation,
            "Pipeline variant: none, no_cooccur, no_freq_rank, no_position, no_rerank_all");
    }

    void apply(TrainConfig& cfg) const {
        if (gamma_opt && gamma_opt->count()) cfg.model.gamma = gamma;
        if (alpha_opt && alpha_opt->count()) cfg.model.alpha = alpha;
        if (beta_opt && beta_opt->count()) cfg.model.beta = beta;
        if (seed_opt && seed_opt->count()) cfg.seed = seed;
        if (ablation_opt && ablation_opt->count())
            cfg.model.ablation = ablation_from_string(ablation);
    }
};

TrainConfig resolved_config(const std::string& config_path, const Overrides& ov) {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = load_train_config(config_path);
    ov.apply(cfg);
    return cfg;
}

Dataset select_subset(const Dataset& data, const LabelVocab& lv, const std::string& subset) {
    if (subset == "all") return data;
    auto split = split_head_tail(data, lv);
    return subset == "head" ? split.head : split.tail;
}

int cmd_stats(const std::string& train_path, const std::string& test_path,
              const std::string& out_path) {
    auto recs = read_jsonl(train_path);
    auto tv = build_token_vocab(recs);
    auto lv = build_label_vocab(recs);
    auto train = make_dataset(recs, tv, lv, kStatsMaxLen, true);
    Dataset test;
    if (!test_path.empty())
        test = make_dataset(read_jsonl(test_path), tv, lv, kStatsMaxLen, false);

    auto st = compute_stats(train, test, lv.size());
    nlohmann::json j;
    j["n_train"] = st.n_train;
    j["n_test"] = st.n_test;
    j["label_count"] = st.label_count;
    j["distinct_words"] = st.distinct_words;
    j["avg_labels_per_doc"] = st.avg_labels_per_doc;
    j["avg_words_per_doc"] = st.avg_words_per_doc;
    write_result(out_path, j.dump());
    return 0;
}

int cmd_build_cooccur(const std::string& train_path, const std::string& out_path) {
    auto corpus = load_training_corpus(train_path, kStatsMaxLen);
    auto m = CooccurrenceMatrix::build(corpus.train, corpus.labels.size());
    std::cerr << "cooccurrence: K=" << m.label_count() << " stored_pairs=" << m.nnz() << "\n";
    if (out_path.empty()) {
        std::string body = "COOC v1 " + std::to_string(m.label_count()) + " " +
                           std::to_string(m.nnz()) + "\n";
        for (const auto& e : m.upper_entries())
            body += std::to_string(e.i) + " " + std::to_string(e.j) + " " +
                    std::to_string(e.count) + "\n";
        write_result(out_path, std::move(body));
    } else {
        m.save(out_path);
    }
    return 0;
}

int cmd_train(const std::string& train_path, const std::string& config_path,
              const std::string& cooc_path, const std::string& ckpt_path,
              const std::string& out_path, const Overrides& ov) {
    auto cfg = resolved_config(config_path, ov);
    auto corpus = load_training_corpus(train_path, cfg.model.max_len);
    auto cooc = cooc_path.empty()
                    ? CooccurrenceMatrix::build(corpus.train, corpus.labels.size())
                    : CooccurrenceMatrix::load(cooc_path);

    std::string csv = "epoch,L,L1,L2\n";
    auto result = train_model(corpus, cooc, cfg, [&](const EpochLog& log) {
        std::cerr << "epoch " << log.epoch << "/" << cfg.epochs << " L=" << log.loss
                  << " L1=" << log.l1 << " L2=" << log.l2 << "\n";
        csv += std::to_string(log.epoch) + "," + fmt_double(log.loss) + "," +
               fmt_double(log.l1) + "," + fmt_double(log.l2) + "\n";
    });

    Checkpoint ck;
    ck.config = result.config;
    ck.tokens = corpus.tokens;
    ck.labels = corpus.labels;
    ck.cooc = cooc;
    ck.params = std::move(result.params);
    save_checkpoint(ckpt_path, ck);
    std::cerr << "checkpoint written: " << ckpt_path << "\n";
    write_result(out_path, std::move(csv));
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& test_path,
             const std::string& subset, const std::vector<int>& ks,
             const std::string& out_path) {
    auto ck = load_checkpoint(ckpt_path);
    auto test = load_eval_split(test_path, ck.tokens, ck.labels, ck.config.max_len);
    auto ndcg_ks = ndcg_ks_from(ks);

    auto data = select_subset(test, ck.labels, subset);
    auto rep = evaluate_model(ck.params, ck.config, ck.cooc, ck.labels.frequency, data, ks,
                              ndcg_ks);
    if (subset == "all") {
        auto split = split_head_tail(test, ck.labels);
        if (!split.head.docs.empty())
            rep.per_subset["head"] = evaluate_model(ck.params, ck.config, ck.cooc,
                                                    ck.labels.frequency, split.head, ks, ndcg_ks);
        if (!split.tail.docs.empty())
            rep.per_subset["tail"] = evaluate_model(ck.params, ck.config, ck.cooc,
                                                    ck.labels.frequency, split.tail, ks, ndcg_ks);
    }
    write_result(out_path, metrics_report_json(rep));
    return 0;
}

int cmd_rerank_inspect(const std::string& ckpt_path, const std::string& test_path,
                       const std::string& doc_id, const Overrides& ov,
                       const std::string& out_path) {
    auto ck = load_checkpoint(ckpt_path);
    // Gamma and alpha overrides change the displayed rerank stages only; the
    // forward pass keeps the checkpoint shapes.
    TrainConfig shim;
    shim.model = ck.config;
    ov.apply(shim);
    auto cfg = shim.model;
    cfg.validate();

    auto recs = read_jsonl(test_path);
    auto it = std::find_if(recs.begin(), recs.end(),
                           [&doc_id](const RawRecord& r) { return r.id == doc_id; });
    if (it == recs.end()) throw Error("document id not found: " + doc_id);
    auto ds = make_dataset({*it}, ck.tokens, ck.labels, ck.config.max_len, false);
    const auto& doc = ds.docs.at(0);

    auto trace = forward(doc, ck.params, ck.cooc, ck.labels.frequency, ck.config, false, nullptr);

    auto label_entry = [&ck](std::int32_t id) {
        nlohmann::json e;
        e["id"] = id;
        e["label"] = ck.labels.names.at(id);
        return e;
    };

    nlohmann::json j;
    j["doc_id"] = doc.id;
    j["truth"] = [&] {
        nlohmann::json a = nlohmann::json::array();
        for (auto l : doc.labels) a.push_back(label_entry(l));
        return a;
    }();

    auto order = rank_labels(trace.s1);
    nlohmann::json s1_top = nlohmann::json::array();
    for (std::size_t i = 0; i < order.size() && i < 10; ++i) {
        auto e = label_entry(order[i]);
        e["score"] = trace.s1[order[i]];
        s1_top.push_back(e);
    }
    j["s1_top"] = s1_top;

    nlohmann::json seeds_j = nlohmann::json::array();
    nlohmann::json sums_j = nlohmann::json::array();
    nlohmann::json expanded_j = nlohmann::json::array();
    nlohmann::json seq_j = nlohmann::json::array();
    if (cfg.rerank_enabled()) {
        auto seeds = select_seed_labels(trace.s1, cfg.alpha, cfg.gamma);
        for (auto l : seeds) {
            auto e = label_entry(l);
            e["score"] = trace.s1[l];
            seeds_j.push_back(e);
        }
        if (cfg.rerank_options().use_cooccur) {
            auto sums = cooccur_sums(seeds, ck.cooc);
            auto sum_order = std::vector<std::int32_t>(sums.size());
            for (std::size_t i = 0; i < sums.size(); ++i)
                sum_order[i] = static_cast<std::int32_t>(i);
            std::sort(sum_order.begin(), sum_order.end(), [&sums](auto a, auto b) {
                if (sums[a] != sums[b]) return sums[a] > sums[b];
                return a < b;
            });
            for (std::size_t i = 0; i < sum_order.size() && i < 10; ++i) {
                if (sums[sum_order[i]] == 0) break;
                auto e = label_entry(sum_order[i]);
                e["sum"] = sums[sum_order[i]];
                sums_j.push_back(e);
            }
        }
        auto seq = rerank_with_options(trace.s1, ck.cooc, ck.labels.frequency, cfg.alpha,
                                       cfg.gamma, cfg.rerank_options());
        for (std::size_t p = 0; p < seq.labels.size(); ++p) {
            auto e = label_entry(seq.labels[p]);
            e["slot"] = p;
            e["source"] = seq.provenance[p] == LabelSource::Seed ? "seed" : "expanded";
            seq_j.push_back(e);
            if (seq.provenance[p] == LabelSource::Expanded)
                expanded_j.push_back(label_entry(seq.labels[p]));
        }
    }
    j["seeds"] = seeds_j;
    j["cooccur_sums_top"] = sums_j;
    j["expanded"] = expanded_j;
    j["sequence"] = seq_j;

    write_result(out_path, j.dump());
    return 0;
}

int cmd_split_head_tail(const std::string& train_path, const std::string& test_path,
                        const std::string& prefix, const std::string& out_path) {
    auto train_recs = read_jsonl(train_path);
    auto tv = build_token_vocab(train_recs);
    auto lv = build_label_vocab(train_recs);

    bool own_split = test_path.empty();
    auto recs = own_split ? train_recs : read_jsonl(test_path);
    auto ds = make_dataset(recs, tv, lv, kStatsMaxLen, own_split);
    if (ds.docs.size() != recs.size())
        throw Error("internal: dataset and record counts diverged");

    auto mask = head_label_mask(lv, 0.10);
    std::vector<RawRecord> head_recs;
    std::vector<RawRecord> tail_recs;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (is_head_doc(ds.docs[i].labels, mask)) head_recs.push_back(recs[i]);
        if (is_tail_doc(ds.docs[i].labels, mask, 2)) tail_recs.push_back(recs[i]);
    }

    if (!prefix.empty()) {
        std::ofstream head_f(prefix + ".head.jsonl", std::ios::trunc);
        std::ofstream tail_f(prefix + ".tail.jsonl", std::ios::trunc);
        if (!head_f || !tail_f) throw Error("cannot write split files at prefix: " + prefix);
        head_f << records_to_jsonl(head_recs);
        tail_f << records_to_jsonl(tail_recs);
        head_f.close();
        tail_f.close();
        if (!head_f || !tail_f) throw Error("failed writing split files at prefix: " + prefix);
        std::cerr << "wrote " << prefix << ".head.jsonl and " << prefix << ".tail.jsonl\n";
    }

    nlohmann::json j;
    j["n_docs"] = recs.size();
    j["head_docs"] = head_recs.size();
    j["tail_docs"] = tail_recs.size();
    nlohmann::json heads = nlohmann::json::array();
    for (std::int32_t id = 0; id < lv.size(); ++id)
        if (mask[id]) heads.push_back(lv.names[id]);
    j["head_labels"] = heads;
    write_result(out_path, j.dump());
    return 0;
}

int cmd_sweep(const std::string& train_path, const std::string& test_path,
              const std::string& config_path, const std::string& param,
              const std::vector<double>& values, const std::string& subset,
              const std::vector<int>& ks, const std::string& out_path, const Overrides& ov) {
    auto cfg = resolved_config(config_path, ov);
    auto corpus = load_training_corpus(train_path, cfg.model.max_len);
    auto cooc = CooccurrenceMatrix::build(corpus.train, corpus.labels.size());
    auto test = load_eval_split(test_path, corpus.tokens, corpus.labels, cfg.model.max_len);
    auto data = select_subset(test, corpus.labels, subset);
    auto ndcg_ks = ndcg_ks_from(ks);

    auto points = sweep_parameter(corpus, cooc, cfg, param, values, data, ks, ndcg_ks,
                                  [&param](const EpochLog& log) {
                                      std::cerr << "sweep " << param << ": epoch " << log.epoch
                                                << " L=" << log.loss << "\n";
                                  });

    std::string csv = "value";
    for (int k : ks) csv += ",P@" + std::to_string(k);
    for (int k : ndcg_ks) csv += ",NDCG@" + std::to_string(k);
    csv += ",n_docs\n";
    for (const auto& pt : points) {
        csv += fmt_double(pt.value);
        for (int k : ks) csv += "," + fmt_double(pt.report.p_at.at(k));
        for (int k : ndcg_ks) csv += "," + fmt_double(pt.report.ndcg_at.at(k));
        csv += "," + std::to_string(pt.report.n_docs) + "\n";
    }
    write_result(out_path, std::move(csv));
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Multi-label text classifier with label co-occurrence reranking"};
    app.require_subcommand(1);

    std::string train_path, test_path, config_path, cooc_path, ckpt_path, out_path;
    std::string subset = "all", doc_id, param, prefix;
    std::vector<int> ks = {1, 3, 5};
    std::vector<double> values;
    Overrides train_ov, inspect_ov, sweep_ov;
    int rc = 0;

    auto* st = app.add_subcommand("stats", "Corpus statistics as JSON");
    st->add_option("--train", train_path, "Training JSONL file")->required();
    st->add_option("--test", test_path, "Test JSONL file");
    st->add_option("--out", out_path, "Output path (default stdout)");
    st->callback([&] { rc = cmd_stats(train_path, test_path, out_path); });

    auto* bc = app.add_subcommand("build-cooccur", "Build the label co-occurrence matrix");
    bc->add_option("--train", train_path, "Training JSONL file")->required();
    bc->add_option("--out", out_path, "Matrix output path (default stdout)");
    bc->callback([&] { rc = cmd_build_cooccur(train_path, out_path); });

    auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
    tr->add_option("--train", train_path, "Training JSONL file")->required();
    tr->add_option("--config", config_path, "Training config JSON");
    tr->add_option("--cooc", cooc_path, "Prebuilt co-occurrence matrix (default: built)");
    tr->add_option("--ckpt", ckpt_path, "Checkpoint output path")->required();
    tr->add_option("--out", out_path, "Loss CSV path (default stdout)");
    train_ov.add_train_flags(tr);
    tr->callback([&] {
        rc = cmd_train(train_path, config_path, cooc_path, ckpt_path, out_path, train_ov);
    });

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint as JSON");
    ev->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
    ev->add_option("--test", test_path, "Test JSONL file")->required();
    ev->add_option("--subset", subset, "Evaluation subset")
        ->check(CLI::IsMember({"all", "head", "tail"}));
    ev->add_option("--k", ks, "Cutoffs, e.g. 1,3,5")->delimiter(',');
    ev->add_option("--out", out_path, "Output path (default stdout)");
    ev->callback([&] { rc = cmd_eval(ckpt_path, test_path, subset, ks, out_path); });

    auto* ri = app.add_subcommand("rerank-inspect",
                                  "Trace the rerank stages for one document");
    ri->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
    ri->add_option("--test", test_path, "JSONL file holding the document")->required();
    ri->add_option("--doc-id", doc_id, "Document id to trace")->required();
    ri->add_option("--out", out_path, "Output path (default stdout)");
    inspect_ov.add_rerank_flags(ri);
    ri->callback([&] {
        rc = cmd_rerank_inspect(ckpt_path, test_path, doc_id, inspect_ov, out_path);
    });

    auto* sp = app.add_subcommand("split-head-tail",
                                  "Partition documents into head and tail subsets");
    sp->add_option("--train", train_path, "Training JSONL file (defines label frequencies)")
        ->required();
    sp->add_option("--test", test_path, "JSONL file to split (default: the training file)");
    sp->add_option("--prefix", prefix, "Write <prefix>.head.jsonl and <prefix>.tail.jsonl");
    sp->add_option("--out", out_path, "Summary output path (default stdout)");
    sp->callback([&] { rc = cmd_split_head_tail(train_path, test_path, prefix, out_path); });

    auto* sw = app.add_subcommand("sweep", "Retrain per hyperparameter value, emit CSV");
    sw->add_option("--train", train_path, "Training JSONL file")->required();
    sw->add_option("--test", test_path, "Test JSONL file")->required();
    sw->add_option("--config", config_path, "Training config JSON");
    sw->add_option("--param", param, "Hyperparameter to sweep")->required();
    sw->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
    sw->add_option("--subset", subset, "Evaluation subset")
        ->check(CLI::IsMember({"all", "head", "tail"}));
    sw->add_option("--k", ks, "Cutoffs, e.g. 1,3,5")->delimiter(',');
    sw->add_option("--out", out_path, "Output path (default stdout)");
    sweep_ov.add_train_flags(sw);
    sw->callback([&] {
        rc = cmd_sweep(train_path, test_path, config_path, param, values, subset, ks, out_path,
                       sweep_ov);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "corank: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "corank: " << e.what() << "\n";
        return 2;
    }
    return rc;
}

}  // namespace corank::cli
