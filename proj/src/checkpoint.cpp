#include "corank/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace corank {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "CORANKCKPT";
constexpr const char* kFormat = "corank-ckpt-v1";

struct Writer {
    std::ostream& out;

    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
};

struct Reader {
    std::istream& in;
    const std::string& path;

    void need(std::size_t n, char* dst) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw Error(path + ": truncated checkpoint");
    }
    std::uint32_t u32() {
        unsigned char b[4];
        need(4, reinterpret_cast<char*>(b));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        need(8, reinterpret_cast<char*>(b));
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u32();
        if (n > (1u << 20)) throw Error(path + ": unreasonable string length");
        std::string s(n, '\0');
        need(n, s.data());
        return s;
    }
};

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json config_to_json(const ModelConfig& c) {
    return json{{"label_count", c.label_count},
                {"vocab_size", c.vocab_size},
                {"max_len", c.max_len},
                {"delta", c.delta},
                {"gamma", c.gamma},
                {"eta", c.eta},
                {"d_ff", c.d_ff},
                {"alpha", c.alpha},
                {"beta", c.beta},
                {"drop_rate", c.drop_rate},
                {"ablation", ablation_to_string(c.ablation)}};
}

ModelConfig config_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw Error(path + ": config section must be an object");
    ModelConfig c;
    try {
        c.label_count = j.at("label_count").get<std::int32_t>();
        c.vocab_size = j.at("vocab_size").get<std::int32_t>();
        c.max_len = j.at("max_len").get<std::int32_t>();
        c.delta = j.at("delta").get<std::int32_t>();
        c.gamma = j.at("gamma").get<std::int32_t>();
        c.eta = j.at("eta").get<std::int32_t>();
        c.d_ff = j.at("d_ff").get<std::int32_t>();
        c.alpha = j.at("alpha").get<double>();
        c.beta = j.at("beta").get<double>();
        c.drop_rate = j.at("drop_rate").get<double>();
        c.ablation = ablation_from_string(j.at("ablation").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(path + ": bad config section: " + e.what());
    }
    c.validate();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    ck.config.validate();
    if (ck.tokens.size() != ck.config.vocab_size)
        throw Error("checkpoint: token vocabulary size does not match the config");
    if (ck.labels.size() != ck.config.label_count)
        throw Error("checkpoint: label vocabulary size does not match the config");
    if (ck.labels.frequency.size() != ck.labels.names.size())
        throw Error("checkpoint: label frequency table has wrong length");
    if (ck.cooc.label_count() != ck.config.label_count)
        throw Error("checkpoint: co-occurrence matrix does not match the config");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write checkpoint: " + path);

    json header{{"format", kFormat},
                {"config", config_to_json(ck.config)},
                {"vocab_hash", hash_hex(vocab_hash(ck.tokens, ck.labels))}};
    f << kMagic << ' ' << header.dump() << '\n';

    Writer w{f};
    w.u64(ck.tokens.names.size());
    for (const auto& name : ck.tokens.names) w.str(name);

    w.u64(ck.labels.names.size());
    for (const auto& name : ck.labels.names) w.str(name);
    for (auto freq : ck.labels.frequency) w.u64(freq);

    const auto entries = ck.cooc.upper_entries();
    w.u64(entries.size());
    for (const auto& e : entries) {
        w.u32(static_cast<std::uint32_t>(e.i));
        w.u32(static_cast<std::uint32_t>(e.j));
        w.u64(e.count);
    }

    auto groups = ck.params.groups();
    w.u64(groups.size());
    for (const auto& g : groups) {
        w.str(g.name);
        w.u64(g.data->size());
        for (double x : *g.data) w.f64(x);
    }

    if (!f) throw Error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint: " + path);

    std::string line;
    if (!std::getline(f, line)) throw Error(path + ": empty file");
    const std::string prefix = std::string(kMagic) + ' ';
    if (line.rfind(prefix, 0) != 0) throw Error(path + ": not a checkpoint file");

    json header;
    try {
        header = json::parse(line.substr(prefix.size()));
    } catch (const json::parse_error& e) {
        throw Error(path + ": bad checkpoint header: " + e.what());
    }
    if (header.value("format", "") != kFormat)
        throw Error(path + ": unsupported checkpoint format");
    if (!header.contains("config") || !header.contains("vocab_hash"))
        throw Error(path + ": incomplete checkpoint header");

    Checkpoint ck;
    ck.config = config_from_json(header.at("config"), path);

    Reader r{f, path};

    const auto n_tokens = r.u64();
    if (n_tokens != static_cast<std::uint64_t>(ck.config.vocab_size))
        throw Error(path + ": token section size does not match the config");
    ck.tokens.names.reserve(n_tokens);
    for (std::uint64_t i = 0; i < n_tokens; ++i) ck.tokens.names.push_back(r.str());
    if (n_tokens < 2 || ck.tokens.names[0] != "<cls>" || ck.tokens.names[1] != "<unk>")
        throw Error(path + ": token vocabulary is missing the reserved entries");
    for (std::uint64_t i = 2; i < n_tokens; ++i)
        ck.tokens.ids.emplace(ck.tokens.names[i], static_cast<std::int32_t>(i));

    const auto n_labels = r.u64();
    if (n_labels != static_cast<std::uint64_t>(ck.config.label_count))
        throw Error(path + ": label section size does not match the config");
    ck.labels.names.reserve(n_labels);
    for (std::uint64_t i = 0; i < n_labels; ++i) {
        ck.labels.names.push_back(r.str());
        ck.labels.ids.emplace(ck.labels.names.back(), static_cast<std::int32_t>(i));
    }
    ck.labels.frequency.reserve(n_labels);
    for (std::uint64_t i = 0; i < n_labels; ++i) ck.labels.frequency.push_back(r.u64());

    const auto nnz = r.u64();
    std::vector<CooccurrenceMatrix::UpperEntry> entries;
    entries.reserve(nnz);
    for (std::uint64_t e = 0; e < nnz; ++e) {
        CooccurrenceMatrix::UpperEntry ent;
        ent.i = static_cast<std::int32_t>(r.u32());
        ent.j = static_cast<std::int32_t>(r.u32());
        ent.count = r.u64();
        entries.push_back(ent);
    }
    ck.cooc = CooccurrenceMatrix::from_upper_entries(ck.config.label_count, entries);

    ck.params = ModelParams::zeros(ck.config);
    auto groups = ck.params.groups();
    const auto n_groups = r.u64();
    if (n_groups != groups.size()) throw Error(path + ": unexpected parameter group count");
    for (auto& g : groups) {
        const auto name = r.str();
        if (name != g.name)
            throw Error(path + ": parameter group \"" + name + "\" where \"" + g.name +
                        "\" was expected");
        const auto count = r.u64();
        if (count != g.data->size())
            throw Error(path + ": parameter group \"" + name + "\" has wrong size");
        for (auto& x : *g.data) x = r.f64();
    }

    if (f.peek() != std::char_traits<char>::eof())
        throw Error(path + ": trailing data after checkpoint");

    const auto expect = header.at("vocab_hash").get<std::string>();
    if (hash_hex(vocab_hash(ck.tokens, ck.labels)) != expect)
        throw Error(path + ": vocabulary hash mismatch; file is corrupt or incompatible");

    return ck;
}

}  // namespace corank
