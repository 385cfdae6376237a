#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "wmt/analysis/report.hpp"
#include "wmt/analysis/stoplist.hpp"
#include "wmt/checkpoint.hpp"
#include "wmt/corpus.hpp"
#include "wmt/error.hpp"
#include "wmt/key_value.hpp"
#include "wmt/metrics.hpp"
#include "wmt/prediction.hpp"
#include "wmt/synthetic.hpp"
#include "wmt/tokenizer.hpp"
#include "wmt/train.hpp"

#ifndef WMT_VERSION
#define WMT_VERSION "dev"
#endif

namespace fs = std::filesystem;

namespace wmt::cli {

namespace {

constexpr const char* kCheckpointFile = "checkpoint.wmt";
constexpr const char* kSourceVocabFile = "src.vocab";
constexpr const char* kTargetVocabFile = "tgt.vocab";

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string data_dir = default_data_dir();
};

/// Named flags that map onto config keys; given flags override the file.
class KeyFlags {
public:
    void add(CLI::App* app, const std::string& flag, const std::string& key,
             const std::string& help) {
        CLI::Option* opt = app->add_option(flag, values_[key], help + " [" + key + "]");
        bound_.emplace_back(opt, key);
    }

    void apply(KeyValueConfig& kv) const {
        for (const auto& [opt, key] : bound_) {
            if (opt->count() > 0) {
                kv.set(key, values_.at(key));
            }
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::pair<CLI::Option*, std::string>> bound_;
};

struct Command {
    CLI::App* app = nullptr;
    KeyFlags flags;
    std::vector<std::string> sets;
};

void add_set_option(Command& c) {
    c.app->add_option("--set", c.sets, "Config override KEY=VALUE (repeatable)");
}

std::string fnv1a_hex(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read " + path.string());
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return fmt::format("{:016x}", h);
}

class Manifest {
public:
    Manifest(std::string command, const Globals& g, const KeyValueConfig& kv)
        : command_(std::move(command)), config_(g.config_path), settings_(kv) {
        seed_ = g.seed.value_or(static_cast<std::uint64_t>(kv.get_int("seed", 1)));
    }

    void input(const fs::path& path) { inputs_.emplace_back(path.string(), fnv1a_hex(path)); }
    void output(const fs::path& path) { outputs_.push_back(path.string()); }

    void write(const fs::path& path) const {
        nlohmann::ordered_json j;
        j["command"] = command_;
        j["config"] = config_;
        j["seed"] = seed_;
        j["tool_version"] = WMT_VERSION;
        j["inputs"] = nlohmann::ordered_json::array();
        for (const auto& [p, hash] : inputs_) {
            j["inputs"].push_back({{"path", p}, {"fnv1a64", hash}});
        }
        // Relative to the manifest, so identical runs give identical directories.
        j["outputs"] = nlohmann::ordered_json::array();
        for (const std::string& o : outputs_) {
            j["outputs"].push_back(
                fs::path(o).lexically_relative(path.parent_path().empty() ? fs::path(".")
                                                                           : path.parent_path())
                    .generic_string());
        }
        nlohmann::ordered_json settings = nlohmann::ordered_json::object();
        for (const auto& [k, v] : settings_.entries()) {
            settings[k] = v;
        }
        j["settings"] = settings;
        std::ofstream out(path);
        if (!out) {
            throw InputError("cannot write manifest " + path.string());
        }
        out << j.dump(2) << '\n';
    }

private:
    std::string command_;
    std::string config_;
    std::uint64_t seed_ = 1;
    KeyValueConfig settings_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::string> outputs_;
};

fs::path sibling_manifest(const fs::path& file) {
    return fs::path(file.string() + ".manifest.json");
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
}

/// Existing paths are used as given; otherwise relative paths are tried
/// under the data directory.
fs::path resolve_input(const std::string& given, const Globals& g) {
    const fs::path p(given);
    if (fs::exists(p)) {
        return p;
    }
    if (p.is_relative() && fs::exists(fs::path(g.data_dir) / p)) {
        return fs::path(g.data_dir) / p;
    }
    throw InputError("input not found: " + given + " (also looked in " + g.data_dir + ")");
}

KeyValueConfig build_config(const Globals& g, const Command& c) {
    KeyValueConfig kv;
    if (!g.config_path.empty()) {
        kv = KeyValueConfig::load(resolve_input(g.config_path, g));
    }
    for (const std::string& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InputError("--set expects KEY=VALUE, got '" + s + "'");
        }
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    c.flags.apply(kv);
    if (g.seed) {
        kv.set("seed", std::to_string(*g.seed));
        kv.set("train_seed", std::to_string(*g.seed));
    } else if (kv.contains("seed") && !kv.contains("train_seed")) {
        kv.set("train_seed", *kv.get("seed"));
    }
    return kv;
}

std::uint64_t run_seed(const KeyValueConfig& kv) {
    const long long s = kv.get_int("seed", 1);
    if (s < 0) {
        throw InputError("seed must be non-negative");
    }
    return static_cast<std::uint64_t>(s);
}

std::vector<ParallelPair> load_corpus(const fs::path& path, const std::string& tag) {
    const std::string t = tag.empty() ? path.stem().string() : tag;
    auto pairs = load_parallel(path, format_from_path(path), t);
    if (pairs.empty()) {
        throw InputError("corpus " + path.string() + " is empty");
    }
    return pairs;
}

VocabOptions vocab_options(const KeyValueConfig& kv) {
    VocabOptions o;
    const std::string mode = kv.get_string("vocab_mode", "word");
    if (mode == "word") {
        o.mode = VocabMode::word;
    } else if (mode == "subword") {
        o.mode = VocabMode::subword;
    } else {
        throw InputError("vocab_mode must be word or subword, got '" + mode + "'");
    }
    const long long max_size = kv.get_int("vocab_max_size", 0);
    if (max_size < 0) {
        throw InputError("vocab_max_size must be non-negative");
    }
    o.max_size = static_cast<std::size_t>(max_size);
    o.lowercase = kv.get_bool("vocab_lowercase", false);
    return o;
}

std::pair<Vocabulary, Vocabulary> build_vocabs(std::span<const ParallelPair> pairs,
                                               const VocabOptions& options) {
    std::vector<std::string> src;
    std::vector<std::string> tgt;
    for (const ParallelPair& p : pairs) {
        src.push_back(p.source);
        tgt.push_back(p.reference);
    }
    return {Vocabulary::build(src, options), Vocabulary::build(tgt, options)};
}

struct LoadedModel {
    Checkpoint checkpoint;
    Vocabulary src;
    Vocabulary tgt;
};

LoadedModel load_model(const fs::path& dir, Manifest* manifest) {
    LoadedModel m{load_checkpoint(dir / kCheckpointFile), Vocabulary::load(dir / kSourceVocabFile),
                  Vocabulary::load(dir / kTargetVocabFile)};
    if (m.src.size() != m.checkpoint.config.src_vocab_size ||
        m.tgt.size() != m.checkpoint.config.tgt_vocab_size) {
        throw InputError("vocabulary files in " + dir.string() +
                         " do not match the checkpoint's vocabulary sizes");
    }
    if (manifest != nullptr) {
        for (const char* f : {kCheckpointFile, kSourceVocabFile, kTargetVocabFile}) {
            manifest->input(dir / f);
        }
    }
    return m;
}

std::string score_line(const ScorePair& s) {
    return fmt::format("bleu4 {:.2f}  meteor_lite {:.2f}  n {}", s.bleu4, s.meteor_lite,
                       s.n_samples);
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    int tier = 1;
    std::size_t n = 500;
    std::string out;
};

void run_gen_data(const Globals& g, const Command& c, const GenDataArgs& a, std::ostream& out) {
    const KeyValueConfig kv = build_config(g, c);
    const TierGrammar grammar = grammar_from_config(kv, a.tier);
    const std::uint64_t seed = run_seed(kv);
    const fs::path path =
        a.out.empty() ? fs::path(g.data_dir) / fmt::format("tier{}.jsonl", a.tier) : fs::path(a.out);
    const auto pairs = generate_synthetic(grammar, a.n, seed);
    ensure_parent(path);
    save_parallel(path, pairs, format_from_path(path));
    Manifest manifest("gen-data", g, kv);
    manifest.output(path);
    manifest.write(sibling_manifest(path));
    const CorpusStats stats = corpus_stats(pairs);
    fmt::print(out, "wrote {} tier-{} pairs to {} (ttr {:.4f}, ref length avg {:.1f} max {})\n",
               pairs.size(), a.tier, path.string(), type_token_ratio(pairs),
               stats.reference.average, stats.reference.max);
}

// ------------------------------------------------------------- build-vocab

struct BuildVocabArgs {
    std::vector<std::string> corpora;
    std::string out;
};

void run_build_vocab(const Globals& g, const Command& c, const BuildVocabArgs& a,
                     std::ostream& out) {
    const KeyValueConfig kv = build_config(g, c);
    Manifest manifest("build-vocab", g, kv);
    std::vector<ParallelPair> pairs;
    for (const std::string& given : a.corpora) {
        const fs::path path = resolve_input(given, g);
        manifest.input(path);
        auto part = load_corpus(path, "");
        pairs.insert(pairs.end(), part.begin(), part.end());
    }
    const auto [src, tgt] = build_vocabs(pairs, vocab_options(kv));
    const fs::path dir(a.out);
    fs::create_directories(dir);
    src.save(dir / kSourceVocabFile);
    tgt.save(dir / kTargetVocabFile);
    manifest.output(dir / kSourceVocabFile);
    manifest.output(dir / kTargetVocabFile);
    manifest.write(dir / "manifest.json");
    fmt::print(out, "source vocabulary {} entries, target vocabulary {} entries -> {}\n",
               src.size(), tgt.size(), dir.string());
}

// ---------------------------------------------------------- train/finetune

struct TrainArgs {
    std::string train;
    std::string valid;
    std::string vocab;
    std::string init;
    std::string out;
    std::string tag;
    bool keep_checkpoints = false;
};

void register_model_flags(Command& c) {
    c.flags.add(c.app, "--d-model", "d_model", "Model width");
    c.flags.add(c.app, "--layers", "n_layers", "Encoder and decoder layers");
    c.flags.add(c.app, "--heads", "n_heads", "Attention heads");
    c.flags.add(c.app, "--d-ff", "d_ff", "Feed-forward width");
    c.flags.add(c.app, "--mem-size", "mem_size", "Working memory budget M");
    c.flags.add(c.app, "--p", "p_nucleus", "Nucleus threshold for memory tokens");
    c.flags.add(c.app, "--max-len", "max_len", "Maximum sequence length");
}

void register_train_flags(Command& c) {
    c.flags.add(c.app, "--epochs", "epochs", "Training epochs");
    c.flags.add(c.app, "--warm", "warm", "Leading epochs without memory");
    c.flags.add(c.app, "--batch-size", "batch_size", "Samples per optimizer step");
    c.flags.add(c.app, "--lr", "learning_rate", "Peak learning rate");
    c.flags.add(c.app, "--warmup-steps", "warmup_steps", "Learning-rate warmup steps");
    c.flags.add(c.app, "--eval-every", "eval_every", "Score and dump every k epochs");
    c.flags.add(c.app, "--eval-limit", "eval_limit", "Cap on evaluation pairs (0 = all)");
}

std::vector<ParallelPair> drop_oversized(std::vector<ParallelPair> pairs, const Vocabulary& src,
                                         const Vocabulary& tgt, const ModelConfig& config,
                                         std::string_view what, std::ostream& out) {
    const std::size_t before = pairs.size();
    std::erase_if(pairs, [&](const ParallelPair& p) {
        return !fits_model(encode_pair(p, src, tgt), config);
    });
    if (pairs.size() != before) {
        fmt::print(out, "dropped {} {} pairs longer than max_len {} allows with M = {}\n",
                   before - pairs.size(), what, config.max_len, config.mem_size);
    }
    if (pairs.empty()) {
        throw InputError(fmt::format("no {} pairs fit max_len {}", what, config.max_len));
    }
    return pairs;
}

void run_train(const Globals& g, const Command& c, const TrainArgs& a, bool finetune,
               std::ostream& out) {
    KeyValueConfig kv = build_config(g, c);
    const std::string command = finetune ? "finetune" : "train";
    Manifest manifest(command, g, kv);

    const fs::path train_path = resolve_input(a.train, g);
    manifest.input(train_path);
    std::vector<ParallelPair> train_pairs = load_corpus(train_path, a.tag);
    std::vector<ParallelPair> valid_pairs;
    if (!a.valid.empty()) {
        const fs::path valid_path = resolve_input(a.valid, g);
        manifest.input(valid_path);
        valid_pairs = load_corpus(valid_path, a.tag);
    }

    std::optional<LoadedModel> init;
    Vocabulary src;
    Vocabulary tgt;
    ModelConfig model;
    if (finetune) {
        init = load_model(resolve_input(a.init, g), &manifest);
        src = init->src;
        tgt = init->tgt;
        // Architecture comes from the checkpoint; only decoding knobs move.
        KeyValueConfig overlay = init->checkpoint.config.to_key_value();
        for (const char* key : {"mem_size", "p_nucleus", "max_len", "seed"}) {
            if (const auto v = kv.get(key)) {
                overlay.set(key, *v);
            }
        }
        model = ModelConfig::from_key_value(overlay);
    } else {
        if (!a.vocab.empty()) {
            const fs::path dir = resolve_input(a.vocab, g);
            src = Vocabulary::load(dir / kSourceVocabFile);
            tgt = Vocabulary::load(dir / kTargetVocabFile);
            manifest.input(dir / kSourceVocabFile);
            manifest.input(dir / kTargetVocabFile);
        } else {
            std::tie(src, tgt) = build_vocabs(train_pairs, vocab_options(kv));
        }
        model = ModelConfig::from_key_value(kv);
        model.src_vocab_size = src.size();
        model.tgt_vocab_size = tgt.size();
    }
    model.validate();

    TrainConfig base;
    if (finetune) {
        base.warm = 0;
    }
    const TrainConfig train = TrainConfig::from_key_value(kv, base);
    train.validate();

    train_pairs = drop_oversized(std::move(train_pairs), src, tgt, model, "training", out);
    if (!valid_pairs.empty()) {
        valid_pairs = drop_oversized(std::move(valid_pairs), src, tgt, model, "validation", out);
    }

    const fs::path dir(a.out);
    const fs::path dumps = dir / "dumps";
    fs::create_directories(dumps);
    const auto on_epoch = [&](const EpochReport& r, const ModelParams& params,
                              const ModelConfig& effective) {
        std::string line = fmt::format("epoch {:>3}  memory {}  train_loss {:.4f}  loss {:.4f}",
                                       r.epoch, r.memory_enabled ? "on " : "off", r.train_loss,
                                       r.loss);
        if (r.scores) {
            line += "  " + score_line(*r.scores);
        }
        fmt::print(out, "{}\n", line);
        out.flush();
        if (!r.predictions.empty()) {
            const fs::path dump = dumps / fmt::format("epoch_{:03}.jsonl", r.epoch);
            save_prediction_dump(dump, r.predictions,
                                 fmt::format("{} epoch {} mem_size {} seed {}", command, r.epoch,
                                             effective.mem_size, train.seed));
            manifest.output(dump);
        }
        if (a.keep_checkpoints) {
            const fs::path path = dir / fmt::format("checkpoint_{:03}.wmt", r.epoch);
            KeyValueConfig meta = train.to_key_value();
            meta.set("epoch", std::to_string(r.epoch));
            meta.set("stage", command);
            save_checkpoint(path, Checkpoint{effective, params.clone(), meta});
            manifest.output(path);
        }
    };

    const TrainingResult result =
        run_training(train_pairs, valid_pairs, src, tgt, train, model,
                     init ? &init->checkpoint.params : nullptr, on_epoch);

    KeyValueConfig meta = train.to_key_value();
    meta.set("epoch", std::to_string(train.epochs));
    meta.set("stage", command);
    save_checkpoint(dir / kCheckpointFile, Checkpoint{model, result.params.clone(), meta});
    src.save(dir / kSourceVocabFile);
    tgt.save(dir / kTargetVocabFile);
    {
        std::ofstream csv(dir / "metrics.csv");
        csv << metrics_csv(result.history);
    }
    {
        KeyValueConfig effective = model.to_key_value();
        effective.merge(train.to_key_value());
        std::ofstream cfg(dir / "config.txt");
        cfg << effective.to_string();
    }
    for (const char* f : {kCheckpointFile, kSourceVocabFile, kTargetVocabFile, "metrics.csv",
                          "config.txt"}) {
        manifest.output(dir / f);
    }
    manifest.write(dir / "manifest.json");
    fmt::print(out, "saved model to {}\n", dir.string());
}

// ------------------------------------------------------------ infer/ablate

struct InferArgs {
    std::string model;
    std::string input;
    std::string out;
    std::string tag;
    std::size_t limit = 0;
    long long epoch = -1;
};

void run_infer(const Globals& g, const Command& c, const InferArgs& a, bool ablate,
               std::ostream& out) {
    const KeyValueConfig kv = build_config(g, c);
    const std::string command = ablate ? "ablate" : "infer";
    Manifest manifest(command, g, kv);
    LoadedModel m = load_model(resolve_input(a.model, g), &manifest);
    ModelConfig config = m.checkpoint.config;
    config.p_nucleus = kv.get_double("p_nucleus", config.p_nucleus);
    config.validate();

    const fs::path input = resolve_input(a.input, g);
    manifest.input(input);
    std::vector<ParallelPair> pairs = load_corpus(input, a.tag);
    if (a.limit > 0 && pairs.size() > a.limit) {
        pairs.resize(a.limit);
    }
    const std::size_t epoch =
        a.epoch >= 0 ? static_cast<std::size_t>(a.epoch)
                     : static_cast<std::size_t>(m.checkpoint.metadata.get_int("epoch", 0));
    const std::uint64_t seed = run_seed(kv);
    const auto records = predict(m.checkpoint.params, config, pairs, m.src, m.tgt, epoch, seed,
                                 ablate);
    const fs::path path(a.out);
    ensure_parent(path);
    save_prediction_dump(path, records,
                         fmt::format("{} epoch {} mem_size {} seed {}", command, epoch,
                                     config.mem_size, seed));
    manifest.output(path);
    manifest.write(sibling_manifest(path));
    fmt::print(out, "{}: {} predictions -> {}  {}\n", command, records.size(), path.string(),
               score_line(score_predictions(records)));
}

// ------------------------------------------------------------------- score

struct ScoreArgs {
    std::vector<std::string> dumps;
    std::string hyp;
    std::string ref;
    std::string out;
};

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

void run_score(const Globals& g, const Command& c, const ScoreArgs& a, std::ostream& out) {
    const KeyValueConfig kv = build_config(g, c);
    Manifest manifest("score", g, kv);
    std::vector<std::pair<std::string, ScorePair>> rows;
    if (!a.hyp.empty() || !a.ref.empty()) {
        if (a.hyp.empty() || a.ref.empty()) {
            throw InputError("--hyp and --ref must be given together");
        }
        const fs::path hyp = resolve_input(a.hyp, g);
        const fs::path ref = resolve_input(a.ref, g);
        manifest.input(hyp);
        manifest.input(ref);
        rows.emplace_back(hyp.string(), score_corpus(read_lines(hyp), read_lines(ref)));
    }
    for (const std::string& given : a.dumps) {
        const fs::path path = resolve_input(given, g);
        manifest.input(path);
        const auto records = load_prediction_dump(path);
        for (const PredictionRecord& r : records) {
            if (r.reference.empty()) {
                throw InputError(path.string() + ": records need reference text to be scored");
            }
        }
        rows.emplace_back(path.string(), score_predictions(records));
    }
    if (rows.empty()) {
        throw InputError("score needs --dump or --hyp/--ref");
    }
    std::size_t width = 6;
    for (const auto& row : rows) {
        width = std::max(width, row.first.size());
    }
    fmt::print(out, "{:<{}}  {:>8}  {:>8}  {:>11}\n", "source", width, "n", "bleu4", "meteor_lite");
    std::string csv = "source,n,bleu4,meteor_lite\n";
    for (const auto& [name, s] : rows) {
        fmt::print(out, "{:<{}}  {:>8}  {:>8.2f}  {:>11.2f}\n", name, width, s.n_samples, s.bleu4,
                   s.meteor_lite);
        csv += fmt::format("{},{},{:.4f},{:.4f}\n", name, s.n_samples, s.bleu4, s.meteor_lite);
    }
    if (!a.out.empty()) {
        const fs::path path(a.out);
        ensure_parent(path);
        std::ofstream f(path);
        if (!f) {
            throw InputError("cannot write " + path.string());
        }
        f << csv;
        manifest.output(path);
        manifest.write(sibling_manifest(path));
    }
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::vector<std::string> dumps;
    std::string out;
    std::vector<std::string> tags;
    std::vector<std::string> compare;
    std::string method = "auto";
    std::string stoplist;
};

std::vector<fs::path> expand_dumps(const std::vector<std::string>& given, const Globals& g) {
    std::vector<fs::path> files;
    for (const std::string& s : given) {
        const fs::path p = resolve_input(s, g);
        if (!fs::is_directory(p)) {
            files.push_back(p);
            continue;
        }
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                found.push_back(entry.path());
            }
        }
        std::sort(found.begin(), found.end());
        if (found.empty()) {
            throw InputError("no .jsonl dumps in " + p.string());
        }
        files.insert(files.end(), found.begin(), found.end());
    }
    return files;
}

void run_analyze(const Globals& g, const Command& c, const AnalyzeArgs& a, std::ostream& out) {
    const KeyValueConfig kv = build_config(g, c);
    Manifest manifest("analyze", g, kv);
    std::vector<PredictionRecord> records;
    for (const fs::path& path : expand_dumps(a.dumps, g)) {
        manifest.input(path);
        auto part = load_prediction_dump(path);
        records.insert(records.end(), part.begin(), part.end());
    }
    analysis::ReportOptions options;
    const long long mem = kv.get_int("mem_size", 10);
    if (mem < 0) {
        throw InputError("mem_size must be non-negative");
    }
    options.mem_size = static_cast<std::size_t>(mem);
    options.tags = a.tags;
    options.method = analysis::parse_rank_sum_method(a.method);
    for (const std::string& pair : a.compare) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == pair.size()) {
            throw InputError("--compare expects TAG_A:TAG_B, got '" + pair + "'");
        }
        options.comparisons.emplace_back(pair.substr(0, colon), pair.substr(colon + 1));
    }
    analysis::Stoplist stoplist = analysis::Stoplist::english();
    if (!a.stoplist.empty()) {
        const fs::path path = resolve_input(a.stoplist, g);
        manifest.input(path);
        stoplist = analysis::Stoplist::load(path);
    }
    const analysis::AnalysisReport report = analysis::build_report(records, options, stoplist);
    const fs::path dir(a.out);
    analysis::write_report(report, dir);
    for (const analysis::ReportFile& f : report.files) {
        manifest.output(dir / f.name);
    }
    manifest.write(dir / "manifest.json");
    fmt::print(out, "analyzed {} records; wrote {} files to {} (stoplist hash {:016x})\n",
               records.size(), report.files.size(), dir.string(), stoplist.hash());
}

}  // namespace

std::string default_data_dir() {
    const char* env = std::getenv("WMT_DATA_DIR");
    return env != nullptr && *env != '\0' ? std::string(env) : std::string("data");
}

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transformer with symbolic working memory: data, training, inference, analysis",
                 "wmt"};
    app.set_version_flag("--version", WMT_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Key-value config file (flags override it)");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");
    app.add_option("--data-dir", g.data_dir,
                   "Directory searched for relative inputs (default $WMT_DATA_DIR or data)");

    Command gen;
    GenDataArgs gen_args;
    gen.app = app.add_subcommand("gen-data", "Generate a synthetic tier corpus");
    gen.app->add_option("--tier", gen_args.tier, "Complexity tier")->check(CLI::Range(1, 4));
    gen.app->add_option("--n", gen_args.n, "Number of pairs")->check(CLI::PositiveNumber);
    gen.app->add_option("--out", gen_args.out, "Output corpus (.jsonl or .tsv)");
    add_set_option(gen);

    Command vocab;
    BuildVocabArgs vocab_args;
    vocab.app = app.add_subcommand("build-vocab", "Build source and target vocabularies");
    vocab.app->add_option("--corpus", vocab_args.corpora, "Corpus file (repeatable)")->required();
    vocab.app->add_option("--out", vocab_args.out, "Output directory")->required();
    vocab.flags.add(vocab.app, "--mode", "vocab_mode", "word or subword");
    vocab.flags.add(vocab.app, "--max-size", "vocab_max_size", "Entries or merges (0 = all)");
    add_set_option(vocab);

    Command train;
    TrainArgs train_args;
    train.app = app.add_subcommand("train", "Train a model from scratch");
    train.app->add_option("--train", train_args.train, "Training corpus")->required();
    train.app->add_option("--valid", train_args.valid, "Validation corpus (default: training)");
    train.app->add_option("--vocab", train_args.vocab, "Vocabulary directory (default: build)");
    train.app->add_option("--out", train_args.out, "Model directory")->required();
    train.app->add_option("--tag", train_args.tag, "Corpus tag (default: file stem)");
    train.app->add_flag("--keep-checkpoints", train_args.keep_checkpoints,
                        "Also save a checkpoint after every epoch");
    register_model_flags(train);
    register_train_flags(train);
    add_set_option(train);

    Command finetune;
    TrainArgs finetune_args;
    finetune.app = app.add_subcommand("finetune", "Continue training an existing model");
    finetune.app->add_option("--init", finetune_args.init, "Model directory to start from")
        ->required();
    finetune.app->add_option("--train", finetune_args.train, "Training corpus")->required();
    finetune.app->add_option("--valid", finetune_args.valid, "Validation corpus");
    finetune.app->add_option("--out", finetune_args.out, "Model directory")->required();
    finetune.app->add_option("--tag", finetune_args.tag, "Corpus tag (default: file stem)");
    finetune.app->add_flag("--keep-checkpoints", finetune_args.keep_checkpoints,
                           "Also save a checkpoint after every epoch");
    finetune.flags.add(finetune.app, "--mem-size", "mem_size", "Working memory budget M");
    finetune.flags.add(finetune.app, "--p", "p_nucleus", "Nucleus threshold");
    register_train_flags(finetune);
    add_set_option(finetune);

    Command infer;
    InferArgs infer_args;
    Command ablate;
    InferArgs ablate_args;
    for (auto [cmd, args, name, help] :
         {std::tuple{&infer, &infer_args, "infer", "Decode a corpus into a prediction dump"},
          std::tuple{&ablate, &ablate_args, "ablate",
                     "Decode with attention to working-memory positions disabled"}}) {
        cmd->app = app.add_subcommand(name, help);
        cmd->app->add_option("--model", args->model, "Model directory")->required();
        cmd->app->add_option("--input", args->input, "Corpus to decode")->required();
        cmd->app->add_option("--out", args->out, "Prediction dump (.jsonl)")->required();
        cmd->app->add_option("--tag", args->tag, "Corpus tag (default: file stem)");
        cmd->app->add_option("--limit", args->limit, "Decode only the first N pairs");
        cmd->app->add_option("--epoch", args->epoch, "Epoch written to records");
        cmd->flags.add(cmd->app, "--p", "p_nucleus", "Nucleus threshold");
        add_set_option(*cmd);
    }

    Command score;
    ScoreArgs score_args;
    score.app = app.add_subcommand("score", "BLEU-4 and METEOR-lite, side by side");
    score.app->add_option("--dump", score_args.dumps, "Prediction dump (repeatable)");
    score.app->add_option("--hyp", score_args.hyp, "Hypothesis text file, one per line");
    score.app->add_option("--ref", score_args.ref, "Reference text file, one per line");
    score.app->add_option("--out", score_args.out, "Also write the table as CSV");
    add_set_option(score);

    Command analyze;
    AnalyzeArgs analyze_args;
    analyze.app = app.add_subcommand("analyze", "Memory-content report over prediction dumps");
    analyze.app->add_option("--dump", analyze_args.dumps, "Dump file or directory (repeatable)")
        ->required();
    analyze.app->add_option("--out", analyze_args.out, "Report directory")->required();
    analyze.app->add_option("--tag", analyze_args.tags, "Report only these tags (repeatable)");
    analyze.app->add_option("--compare", analyze_args.compare, "Tag pair A:B (repeatable)");
    analyze.app->add_option("--method", analyze_args.method, "Rank-sum p-value: auto|exact|normal");
    analyze.app->add_option("--stoplist", analyze_args.stoplist, "Stoplist file");
    analyze.flags.add(analyze.app, "--mem-size", "mem_size", "Working memory budget M");
    add_set_option(analyze);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (seed_opt->count() > 0) {
        g.seed = seed;
    }

    try {
        if (gen.app->parsed()) {
            run_gen_data(g, gen, gen_args, out);
        } else if (vocab.app->parsed()) {
            run_build_vocab(g, vocab, vocab_args, out);
        } else if (train.app->parsed()) {
            run_train(g, train, train_args, false, out);
        } else if (finetune.app->parsed()) {
            run_train(g, finetune, finetune_args, true, out);
        } else if (infer.app->parsed()) {
            run_infer(g, infer, infer_args, false, out);
        } else if (ablate.app->parsed()) {
            run_infer(g, ablate, ablate_args, true, out);
        } else if (score.app->parsed()) {
            run_score(g, score, score_args, out);
        } else if (analyze.app->parsed()) {
            run_analyze(g, analyze, analyze_args, out);
        }
    } catch (const std::exception& e) {
        fmt::print(err, "wmt: error: {}\n", e.what());
        return kExitFailure;
    }
    return kExitOk;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace wmt::cli
