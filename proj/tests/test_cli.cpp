#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "corank/checkpoint.hpp"
#include "corank/cli.hpp"
#include "corank/synthetic.hpp"
#include "corank/train.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace corank;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::vector<std::string> full = {"corank"};
    for (auto& a : args) full.push_back(std::move(a));
    std::vector<char*> argv;
    for (auto& s : full) argv.push_back(s.data());

    std::stringstream so, se;
    auto* co = std::cout.rdbuf(so.rdbuf());
    auto* ce = std::cerr.rdbuf(se.rdbuf());
    CliResult r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(co);
    std::cerr.rdbuf(ce);
    r.out = so.str();
    r.err = se.str();
    return r;
}

std::vector<RawRecord> fruit_records() {
    std::vector<RawRecord> recs;
    auto add = [&recs](const std::string& id, const std::string& text,
                       std::vector<std::string> labels) {
        RawRecord r;
        r.id = id;
        r.text = text;
        r.labels = std::move(labels);
        r.line = recs.size() + 1;
        recs.push_back(std::move(r));
    };
    for (int i = 0; i < 6; ++i)
        add("a" + std::to_string(i), "apple red sweet crisp", {"fruit_a"});
    for (int i = 0; i < 6; ++i)
        add("b" + std::to_string(i), "banana yellow long soft", {"fruit_b"});
    add("m0", "apple banana salad bowl", {"fruit_a", "fruit_b"});
    add("m1", "banana apple smoothie cup", {"fruit_a", "fruit_b"});
    add("r0", "cherry tart red small", {"berry"});
    add("r1", "cherry apple pie crust", {"berry", "fruit_a"});
    return recs;
}

struct Fixture {
    std::string train_path;
    std::string test_path;
    std::string config_path;

    Fixture() {
        auto recs = fruit_records();
        train_path = write_temp_file("cli_train.jsonl", records_to_jsonl(recs));
        std::vector<RawRecord> test(recs.begin(), recs.begin() + 4);
        test[0].labels.push_back("unseen_label");
        test_path = write_temp_file("cli_test.jsonl", records_to_jsonl(test));
        config_path = write_temp_file("cli_cfg.json", R"({
            "lr": 0.01, "epochs": 2, "batch_size": 4, "seed": 3,
            "max_len": 16, "delta": 8, "gamma": 2, "eta": 2,
            "alpha": 0.3, "beta": 0.3, "drop_rate": 0.1
        })");
    }

    TrainConfig api_config() const { return load_train_config(config_path); }
};

}  // namespace

TEST_CASE("usage errors exit with code one") {
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"bogus-subcommand"}).code == 1);
    CHECK(run_cli({"stats"}).code == 1);
    CHECK(run_cli({"stats", "--train", "x.jsonl", "--bogus"}).code == 1);
    CHECK(run_cli({"eval", "--ckpt", "x", "--test", "y", "--subset", "sideways"}).code == 1);
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({"train", "--help"}).code == 0);
}

TEST_CASE("data errors exit with code two") {
    Fixture fx;
    CHECK(run_cli({"stats", "--train", temp_path("missing.jsonl")}).code == 2);
    auto bad_cfg = write_temp_file("cli_bad_cfg.json", "{\"lr\": \"fast\"}");
    CHECK(run_cli({"train", "--train", fx.train_path, "--config", bad_cfg, "--ckpt",
                   temp_path("never.ckpt")})
              .code == 2);
    auto junk = write_temp_file("cli_junk.ckpt", "not a checkpoint");
    auto r = run_cli({"eval", "--ckpt", junk, "--test", fx.test_path});
    CHECK(r.code == 2);
    CHECK(r.err.find("corank:") != std::string::npos);
}

TEST_CASE("stats subcommand reports corpus shape") {
    Fixture fx;
    auto r = run_cli({"stats", "--train", fx.train_path, "--test", fx.test_path});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["n_train"] == 16);
    CHECK(j["n_test"] == 4);
    CHECK(j["label_count"] == 3);
    CHECK(j["distinct_words"].get<int>() > 10);
    CHECK(j["avg_labels_per_doc"].get<double>() > 1.0);
    CHECK(j["avg_words_per_doc"].get<double>() == 4.0);
}

TEST_CASE("build-cooccur writes a loadable matrix") {
    Fixture fx;
    auto out = temp_path("cli_m.cooc");
    REQUIRE(run_cli({"build-cooccur", "--train", fx.train_path, "--out", out}).code == 0);

    auto from_file = CooccurrenceMatrix::load(out);
    auto corpus = load_training_corpus(fx.train_path, 512);
    auto direct = CooccurrenceMatrix::build(corpus.train, corpus.labels.size());
    CHECK(from_file.label_count() == direct.label_count());
    CHECK(from_file.upper_entries() == direct.upper_entries());

    auto to_stdout = run_cli({"build-cooccur", "--train", fx.train_path});
    REQUIRE(to_stdout.code == 0);
    CHECK(to_stdout.out.rfind("COOC v1 3 ", 0) == 0);
}

TEST_CASE("train matches the library and honors flag overrides") {
    Fixture fx;
    auto ckpt_path = temp_path("cli_train.ckpt");
    auto csv_path = temp_path("cli_loss.csv");
    auto r = run_cli({"train", "--train", fx.train_path, "--config", fx.config_path, "--ckpt",
                      ckpt_path, "--out", csv_path, "--gamma", "3", "--seed", "9",
                      "--ablation", "no_position"});
    REQUIRE(r.code == 0);

    auto ck = load_checkpoint(ckpt_path);
    CHECK(ck.config.gamma == 3);
    CHECK(ck.config.ablation == Ablation::NoPosition);

    auto cfg = fx.api_config();
    cfg.model.gamma = 3;
    cfg.seed = 9;
    cfg.model.ablation = Ablation::NoPosition;
    auto corpus = load_training_corpus(fx.train_path, cfg.model.max_len);
    auto cooc = CooccurrenceMatrix::build(corpus.train, corpus.labels.size());
    auto api = train_model(corpus, cooc, cfg);

    auto got = ck.params.groups();
    auto want = api.params.groups();
    REQUIRE(got.size() == want.size());
    for (std::size_t g = 0; g < got.size(); ++g) {
        REQUIRE(got[g].data->size() == want[g].data->size());
        CHECK(*got[g].data == *want[g].data);
    }

    std::ifstream csv(csv_path);
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "epoch,L,L1,L2");
    int rows = 0;
    std::string last;
    while (std::getline(csv, line)) {
        REQUIRE(line.rfind(std::to_string(rows + 1) + ",", 0) == 0);
        last = line;
        ++rows;
    }
    CHECK(rows == 2);
    auto c1 = last.find(',');
    auto c2 = last.find(',', c1 + 1);
    CHECK(std::stod(last.substr(c1 + 1, c2 - c1 - 1)) ==
          doctest::Approx(api.log.back().loss).epsilon(1e-15));
}

TEST_CASE("eval equals the library evaluation on every subset") {
    Fixture fx;
    auto ckpt_path = temp_path("cli_eval.ckpt");
    REQUIRE(run_cli({"train", "--train", fx.train_path, "--config", fx.config_path, "--ckpt",
                     ckpt_path})
                .code == 0);
    auto ck = load_checkpoint(ckpt_path);
    auto test = load_eval_split(fx.test_path, ck.tokens, ck.labels, ck.config.max_len);

    auto r = run_cli({"eval", "--ckpt", ckpt_path, "--test", fx.test_path, "--k", "1,3"});
    REQUIRE(r.code == 0);
    auto direct = evaluate_model(ck.params, ck.config, ck.cooc, ck.labels.frequency, test,
                                 {1, 3}, {3});
    auto split = split_head_tail(test, ck.labels);
    if (!split.head.docs.empty())
        direct.per_subset["head"] = evaluate_model(ck.params, ck.config, ck.cooc,
                                                   ck.labels.frequency, split.head, {1, 3}, {3});
    if (!split.tail.docs.empty())
        direct.per_subset["tail"] = evaluate_model(ck.params, ck.config, ck.cooc,
                                                   ck.labels.frequency, split.tail, {1, 3}, {3});
    CHECK(r.out == metrics_report_json(direct) + "\n");

    auto tail_only = run_cli({"eval", "--ckpt", ckpt_path, "--test", fx.test_path, "--subset",
                              "tail", "--k", "1,3"});
    REQUIRE(tail_only.code == 0);
    auto j = nlohmann::json::parse(tail_only.out);
    CHECK(!j.contains("per_subset"));
    CHECK(j.contains("P@1"));
    CHECK(!j.contains("NDCG@1"));
}

TEST_CASE("rerank-inspect traces the pipeline stages") {
    Fixture fx;
    auto ckpt_path = temp_path("cli_inspect.ckpt");
    REQUIRE(run_cli({"train", "--train", fx.train_path, "--config", fx.config_path, "--ckpt",
                     ckpt_path})
                .code == 0);

    auto r = run_cli({"rerank-inspect", "--ckpt", ckpt_path, "--test", fx.test_path,
                      "--doc-id", "a1"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["doc_id"] == "a1");
    REQUIRE(j["sequence"].size() == 2);
    for (const auto& e : j["sequence"]) {
        std::string src = e["source"];
        CHECK((src == "seed" || src == "expanded"));
    }
    REQUIRE(j["s1_top"].size() == 3);
    CHECK(j["s1_top"][0]["score"].get<double>() >= j["s1_top"][1]["score"].get<double>());
    for (const auto& e : j["seeds"])
        CHECK(e["score"].get<double>() > 0.0);

    auto wide = run_cli({"rerank-inspect", "--ckpt", ckpt_path, "--test", fx.test_path,
                         "--doc-id", "a1", "--gamma", "3", "--alpha", "0.999"});
    REQUIRE(wide.code == 0);
    auto wj = nlohmann::json::parse(wide.out);
    CHECK(wj["sequence"].size() == 3);
    CHECK(wj["seeds"].size() == 1);  // nothing clears 0.999, argmax fallback

    CHECK(run_cli({"rerank-inspect", "--ckpt", ckpt_path, "--test", fx.test_path, "--doc-id",
                   "ghost"})
              .code == 2);
}

TEST_CASE("split-head-tail partitions records into files") {
    Fixture fx;
    auto prefix = temp_path("cli_split");
    auto r = run_cli({"split-head-tail", "--train", fx.train_path, "--prefix", prefix});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["n_docs"] == 16);
    CHECK(j["head_labels"].size() == 1);

    auto heads = read_jsonl(prefix + ".head.jsonl");
    auto tails = read_jsonl(prefix + ".tail.jsonl");
    CHECK(heads.size() == j["head_docs"].get<std::size_t>());
    CHECK(tails.size() == j["tail_docs"].get<std::size_t>());
    CHECK(heads.size() + tails.size() >= 16);  // subsets may overlap
}

TEST_CASE("sweep emits one csv row per value") {
    Fixture fx;
    auto r = run_cli({"sweep", "--train", fx.train_path, "--test", fx.test_path, "--config",
                      fx.config_path, "--param", "gamma", "--values", "1,2", "--k", "1"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "value,P@1,n_docs");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 2);

    CHECK(run_cli({"sweep", "--train", fx.train_path, "--test", fx.test_path, "--param",
                   "warp", "--values", "1"})
              .code == 2);
}
