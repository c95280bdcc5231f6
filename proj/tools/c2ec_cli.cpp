// Copyright the c2ec authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
//
// Command-line frontend: correct files or stdin, evaluate predictions,
// print corpus statistics, and grid-search hyperparameters.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "c2ec/c2ec.hpp"

namespace {

using namespace c2ec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBackend = 2;
constexpr int kExitData = 3;

CorpusFormat parse_format(const std::string& s) {
    if (s == "tsv") return CorpusFormat::Tsv;
    if (s == "jsonl") return CorpusFormat::Jsonl;
    throw ConfigError("unknown corpus format \"" + s + "\" (expected tsv or jsonl)");
}

std::vector<std::u32string> read_input_lines(const std::string& path) {
    if (path.empty() || path == "-") {
        std::vector<std::u32string> lines;
        std::string line;
        while (std::getline(std::cin, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(utf8_to_u32(line));
        }
        return lines;
    }
    return load_lines(path);
}

// Shared flag set for every decoding command.
struct DecodeOptions {
    std::string lm_spec;
    std::string template_path;
    std::string weights_path;
    std::string tables_path;
    std::string config_path;
    int workers = 0;
    int remote_eos_id = 2;
    DecoderConfig cfg;

    // flag presence, so explicit flags override the config file
    bool has_beam = false, has_alpha = false, has_gamma = false, has_temp = false,
         has_window = false, has_mode = false, has_topk = false;
    std::string mode_str;
    bool no_length_reward = false, no_faithfulness = false;
    bool temperature_on_pure = false, entropy_from_prompt = false, normalize_entropy = false;

    std::unique_ptr<LmBackend> backend;
    EditWeightConfig weights;
    std::u32string prompt_template;

    void register_flags(CLI::App* cmd) {
        cmd->add_option("--lm", lm_spec, "LM backend: ngram:<model.json> or http:<url>")
            ->required();
        cmd->add_option("--template", template_path, "prompt template file (c2ec mode)");
        cmd->add_option("--weights", weights_path, "edit-weight JSON file");
        cmd->add_option("--tables", tables_path, "confusion-table JSON file");
        cmd->add_option("--config", config_path,
                        "decoder config JSON (default: $C2EC_CONFIG when set)");
        cmd->add_option("--workers", workers, "decoding workers (default: hardware threads)");
        cmd->add_option("--remote-eos-id", remote_eos_id,
                        "end-of-sequence token id of the remote backend");
        cmd->add_option("--beam-size", cfg.beam_size)->check(CLI::PositiveNumber);
        cmd->add_option("--alpha", cfg.alpha, "length reward");
        cmd->add_option("--gamma", cfg.gamma, "distance coefficient");
        cmd->add_option("--prompt-temperature", cfg.prompt_temperature);
        cmd->add_option("--max-extra-deletes", cfg.max_extra_deletes);
        cmd->add_option("--lm-topk", cfg.lm_topk);
        cmd->add_option("--mode", mode_str, "tfpf or c2ec");
        cmd->add_flag("--no-length-reward", no_length_reward, "drop the length reward");
        cmd->add_flag("--no-faithfulness-reward", no_faithfulness, "fix lambda at 1");
        cmd->add_flag("--temperature-on-pure", temperature_on_pure,
                      "apply the prompt temperature to the pure channel too");
        cmd->add_flag("--entropy-from-prompt", entropy_from_prompt,
                      "take the faithfulness entropy from the prompt channel");
        cmd->add_flag("--normalize-entropy", normalize_entropy,
                      "divide the faithfulness entropy by ln(vocab size)");
    }

    void finalize(CLI::App* cmd) {
        // precedence: defaults < config file < explicit flags
        DecoderConfig from_flags = cfg;
        std::string cfg_file = config_path;
        if (cfg_file.empty()) {
            if (const char* env = std::getenv("C2EC_CONFIG")) cfg_file = env;
        }
        if (!cfg_file.empty()) cfg = DecoderConfig::from_file(cfg_file);
        else cfg = DecoderConfig{};

        auto given = [cmd](const std::string& name) { return cmd->count(name) > 0; };
        if (given("--beam-size")) cfg.beam_size = from_flags.beam_size;
        if (given("--alpha")) cfg.alpha = from_flags.alpha;
        if (given("--gamma")) cfg.gamma = from_flags.gamma;
        if (given("--prompt-temperature")) cfg.prompt_temperature = from_flags.prompt_temperature;
        if (given("--max-extra-deletes")) cfg.max_extra_deletes = from_flags.max_extra_deletes;
        if (given("--lm-topk")) cfg.lm_topk = from_flags.lm_topk;
        if (given("--mode")) cfg.mode = decode_mode_from_name(mode_str);
        if (no_length_reward) cfg.enable_length_reward = false;
        if (no_faithfulness) cfg.enable_faithfulness = false;
        if (temperature_on_pure) cfg.temperature_on_pure = true;
        if (entropy_from_prompt) cfg.entropy_from_prompt = true;
        if (normalize_entropy) cfg.normalize_entropy = true;
        cfg.validate();

        if (!weights_path.empty()) weights.load_weights_file(weights_path);
        if (!tables_path.empty()) weights.load_tables_file(tables_path);

        if (lm_spec.rfind("ngram:", 0) == 0) {
            backend = std::make_unique<NgramLm>(NgramLm::load_file(lm_spec.substr(6)));
        } else if (lm_spec.rfind("http:", 0) == 0) {
            // accepts both http:<url> and a bare http://host:port URL
            std::string url = lm_spec.substr(5);
            if (url.rfind("//", 0) == 0) url = "http:" + url;
            const int inflight = workers > 0 ? workers : 4;
            backend = std::make_unique<RemoteLm>(url, remote_eos_id, inflight);
        } else {
            throw ConfigError("bad --lm value \"" + lm_spec +
                              "\" (expected ngram:<path> or http:<url>)");
        }

        if (cfg.mode == DecodeMode::C2ec) {
            if (template_path.empty())
                throw ConfigError("c2ec mode needs --template (see data/templates/)");
            prompt_template = load_template_file(template_path);
        }

        if (workers <= 0) {
            workers = static_cast<int>(std::thread::hardware_concurrency());
            if (workers <= 0) workers = 1;
        }
    }
};

struct DecodeBatchResult {
    std::vector<std::u32string> outputs;
    long failures = 0;
};

// Decodes a batch with N workers; output order always matches input order.
DecodeBatchResult decode_batch(const std::vector<std::u32string>& lines, const DecodeOptions& opt,
                               const DecoderConfig& cfg, const EditWeightConfig& weights,
                               bool strict) {
    DecodeBatchResult res;
    res.outputs.resize(lines.size());
    std::atomic<std::size_t> next{0};
    std::atomic<long> failures{0};
    std::mutex err_mutex;
    std::exception_ptr fatal;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= lines.size()) return;
            {
                std::lock_guard lock(err_mutex);
                if (fatal) return;
            }
            try {
                res.outputs[i] = correct(lines[i], *opt.backend, *opt.backend, weights, cfg,
                                         opt.prompt_template);
            } catch (const std::exception& e) {
                failures.fetch_add(1);
                if (strict) {
                    std::lock_guard lock(err_mutex);
                    if (!fatal) fatal = std::current_exception();
                    return;
                }
                std::lock_guard lock(err_mutex);
                std::cerr << "warning: line " << (i + 1) << " left unchanged: " << e.what()
                          << "\n";
                res.outputs[i] = lines[i];
            }
        }
    };

    const int n = std::max(1, std::min<int>(opt.workers, static_cast<int>(lines.size())));
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);
    res.failures = failures.load();
    return res;
}

int cmd_correct(DecodeOptions& opt, const std::string& input_path,
                const std::string& output_path, bool strict, const std::string& manifest_path) {
    const std::vector<std::u32string> lines = read_input_lines(input_path);

    const auto start = std::chrono::steady_clock::now();
    DecodeBatchResult batch = decode_batch(lines, opt, opt.cfg, opt.weights, strict);
    const auto elapsed = std::chrono::steady_clock::now() - start;

    std::ostream* out = &std::cout;
    std::ofstream file_out;
    if (!output_path.empty() && output_path != "-") {
        file_out.open(output_path, std::ios::binary);
        if (!file_out) throw ConfigError("cannot write output file: " + output_path);
        out = &file_out;
    }
    for (const std::u32string& line : batch.outputs) *out << u32_to_utf8(line) << "\n";
    out->flush();

    if (!manifest_path.empty()) {
        RunManifest manifest;
        manifest.config = opt.cfg.to_json();
        manifest.backend = opt.backend->descriptor();
        if (!opt.weights_path.empty()) manifest.weights_digest = file_digest(opt.weights_path);
        if (!opt.tables_path.empty()) manifest.tables_digest = file_digest(opt.tables_path);
        if (!opt.template_path.empty()) manifest.template_digest = file_digest(opt.template_path);
        if (opt.lm_spec.rfind("ngram:", 0) == 0)
            manifest.model_digest = file_digest(opt.lm_spec.substr(6));
        manifest.sentences = static_cast<long>(lines.size());
        for (const auto& l : lines) manifest.chars += static_cast<long>(l.size());
        manifest.total_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
        std::ofstream mf(manifest_path);
        if (!mf) throw ConfigError("cannot write manifest: " + manifest_path);
        mf << manifest.to_json().dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& corpus_path, const std::string& format,
                 const std::string& predictions_path, bool as_json, bool exclude_length_changed) {
    const std::vector<CorpusPair> pairs = load_corpus(corpus_path, parse_format(format));
    const std::vector<std::u32string> predictions = load_lines(predictions_path);
    EvalOptions opts;
    opts.exclude_length_changed = exclude_length_changed;
    const MetricReport rep = evaluate_corpus(pairs, predictions, opts);
    if (as_json)
        std::cout << rep.to_json().dump(2) << "\n";
    else
        std::cout << rep.to_table();
    return kExitOk;
}

int cmd_stats(const std::string& corpus_path, const std::string& format, bool as_json) {
    const std::vector<CorpusPair> pairs = load_corpus(corpus_path, parse_format(format));
    const CorpusStats st = corpus_stats(pairs);
    if (as_json) {
        std::cout << st.to_json().dump(2) << "\n";
        return kExitOk;
    }
    if (st.sentences == 0) {
        std::cout << "0 sentences\n";
        return kExitOk;
    }
    const long total = st.total_edits();
    auto pct = [total](long n) { return total > 0 ? 100.0 * n / total : 0.0; };
    char buf[256];
    std::printf("%-7s %-10s %-9s %-14s %-14s %-14s\n", "#Sent", "%Err.Sent", "Avg.Len.", "SUB",
                "RED", "MIS");
    std::snprintf(buf, sizeof(buf), "%-7ld %-10.1f %-9.1f %ld (%.1f%%)%*s %ld (%.1f%%)%*s %ld (%.1f%%)\n",
                  st.sentences, 100.0 * st.erroneous_ratio(), st.avg_source_len, st.sub,
                  pct(st.sub), 0, "", st.red, pct(st.red), 0, "", st.mis, pct(st.mis));
    std::cout << buf;
    return kExitOk;
}

// The canonical enumeration order for grid points; ties in F1 go to the
// earliest point.
const std::vector<std::string> kGridParams = {"insert_weight", "delete_weight",
                                              "prompt_temperature", "gamma", "alpha"};

struct GridPoint {
    std::vector<std::pair<std::string, double>> values;

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : values) j[k] = v;
        return j;
    }
};

void apply_grid_point(const GridPoint& point, DecoderConfig& cfg, EditWeightConfig& weights) {
    for (const auto& [name, value] : point.values) {
        if (name == "insert_weight") weights.set_weight(EditType::Insert, value);
        else if (name == "delete_weight") weights.set_weight(EditType::Delete, value);
        else if (name == "prompt_temperature") cfg.prompt_temperature = value;
        else if (name == "gamma") cfg.gamma = value;
        else if (name == "alpha") cfg.alpha = value;
    }
}

int cmd_tune(DecodeOptions& opt, const std::string& corpus_path, const std::string& format,
             const std::string& grid_path, bool as_json) {
    const std::vector<CorpusPair> pairs = load_corpus(corpus_path, parse_format(format));
    std::vector<std::u32string> sources;
    sources.reserve(pairs.size());
    for (const auto& p : pairs) sources.push_back(p.source);

    std::ifstream grid_in(grid_path);
    if (!grid_in) throw ConfigError("cannot open grid file: " + grid_path);
    nlohmann::json grid_json;
    try {
        grid_in >> grid_json;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("grid file: ") + e.what());
    }
    if (!grid_json.is_object()) throw ConfigError("grid file: expected a JSON object");
    for (auto it = grid_json.begin(); it != grid_json.end(); ++it) {
        if (std::find(kGridParams.begin(), kGridParams.end(), it.key()) == kGridParams.end())
            throw ConfigError("grid file: unknown parameter \"" + it.key() + "\"");
        if (!it.value().is_array() || it.value().empty())
            throw ConfigError("grid file: \"" + it.key() + "\" must be a non-empty value list");
    }

    // Exhaustive enumeration, nested in canonical parameter order.
    std::vector<GridPoint> points{GridPoint{}};
    for (const std::string& name : kGridParams) {
        if (!grid_json.contains(name)) continue;
        std::vector<GridPoint> expanded;
        for (const GridPoint& p : points) {
            for (const auto& v : grid_json[name]) {
                GridPoint q = p;
                q.values.emplace_back(name, v.get<double>());
                expanded.push_back(std::move(q));
            }
        }
        points = std::move(expanded);
    }

    struct Row {
        GridPoint point;
        MetricReport report;
    };
    std::vector<Row> rows;
    std::optional<std::size_t> best;
    for (const GridPoint& point : points) {
        DecoderConfig cfg = opt.cfg;
        EditWeightConfig weights = opt.weights;
        apply_grid_point(point, cfg, weights);
        DecodeBatchResult batch = decode_batch(sources, opt, cfg, weights, /*strict=*/false);
        MetricReport rep = evaluate_corpus(pairs, batch.outputs);
        rows.push_back({point, rep});
        if (!best || rep.char_f1 > rows[*best].report.char_f1) best = rows.size() - 1;
    }

    if (as_json) {
        nlohmann::json out;
        out["grid"] = nlohmann::json::array();
        for (const Row& r : rows)
            out["grid"].push_back(nlohmann::json{{"point", r.point.to_json()},
                                                 {"char_f1", r.report.char_f1},
                                                 {"char_precision", r.report.char_precision},
                                                 {"char_recall", r.report.char_recall}});
        if (best) {
            out["best"] = {{"point", rows[*best].point.to_json()},
                           {"char_f1", rows[*best].report.char_f1}};
        }
        std::cout << out.dump(2) << "\n";
        return kExitOk;
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::string label;
        for (const auto& [k, v] : rows[i].point.values) {
            if (!label.empty()) label += " ";
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s=%g", k.c_str(), v);
            label += buf;
        }
        if (label.empty()) label = "(defaults)";
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-48s  P %.4f  R %.4f  F1 %.4f%s\n", label.c_str(),
                      rows[i].report.char_precision, rows[i].report.char_recall,
                      rows[i].report.char_f1, best && *best == i ? "  <= best" : "");
        std::cout << buf;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free character error correction"};
    app.require_subcommand(1);

    // correct
    auto* correct_cmd = app.add_subcommand("correct", "correct sentences from a file or stdin");
    DecodeOptions correct_opt;
    std::string input_path, output_path, manifest_path;
    bool strict = false;
    correct_cmd->add_option("--input,-i", input_path, "input file (default: stdin)");
    correct_cmd->add_option("--output,-o", output_path, "output file (default: stdout)");
    correct_cmd->add_flag("--strict", strict, "abort the batch on the first failed line");
    correct_cmd->add_option("--manifest", manifest_path, "write a run manifest JSON here");
    correct_opt.register_flags(correct_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against a corpus");
    std::string eval_corpus, eval_format = "tsv", eval_predictions;
    bool eval_json = false, exclude_length_changed = false;
    eval_cmd->add_option("--corpus", eval_corpus, "source+reference corpus")->required();
    eval_cmd->add_option("--format", eval_format, "tsv or jsonl");
    eval_cmd->add_option("--predictions", eval_predictions, "one prediction per line")->required();
    eval_cmd->add_flag("--json", eval_json, "machine-readable output");
    eval_cmd->add_flag("--exclude-length-changed", exclude_length_changed,
                       "skip pairs whose source and reference lengths differ");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus error-type statistics");
    std::string stats_corpus, stats_format = "tsv";
    bool stats_json = false;
    stats_cmd->add_option("--corpus", stats_corpus, "source+reference corpus")->required();
    stats_cmd->add_option("--format", stats_format, "tsv or jsonl");
    stats_cmd->add_flag("--json", stats_json, "machine-readable output");

    // tune
    auto* tune_cmd = app.add_subcommand("tune", "grid-search hyperparameters on a dev corpus");
    DecodeOptions tune_opt;
    std::string tune_corpus, tune_format = "tsv", tune_grid;
    bool tune_json = false;
    tune_cmd->add_option("--corpus", tune_corpus, "development corpus")->required();
    tune_cmd->add_option("--format", tune_format, "tsv or jsonl");
    tune_cmd->add_option("--grid", tune_grid, "grid spec JSON: {param: [values]}")->required();
    tune_cmd->add_flag("--json", tune_json, "machine-readable output");
    tune_opt.register_flags(tune_cmd);

    // train-ngram (data preparation helper for the bundled test backend)
    auto* train_cmd = app.add_subcommand("train-ngram", "train the character n-gram backend");
    std::string train_input, train_output;
    int train_order = 3;
    train_cmd->add_option("--input", train_input, "training text, one sentence per line")
        ->required();
    train_cmd->add_option("--output", train_output, "model JSON path")->required();
    train_cmd->add_option("--order", train_order, "n-gram order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (correct_cmd->parsed()) {
            correct_opt.finalize(correct_cmd);
            return cmd_correct(correct_opt, input_path, output_path, strict, manifest_path);
        }
        if (eval_cmd->parsed())
            return cmd_evaluate(eval_corpus, eval_format, eval_predictions, eval_json,
                                exclude_length_changed);
        if (stats_cmd->parsed()) return cmd_stats(stats_corpus, stats_format, stats_json);
        if (tune_cmd->parsed()) {
            tune_opt.finalize(tune_cmd);
            return cmd_tune(tune_opt, tune_corpus, tune_format, tune_grid, tune_json);
        }
        if (train_cmd->parsed()) {
            NgramLm lm = NgramLm::train(load_lines(train_input), train_order);
            lm.save_file(train_output);
            std::cout << lm.descriptor() << " written to " << train_output << "\n";
            return kExitOk;
        }
    } catch (const BackendUnavailableError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
