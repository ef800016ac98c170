#include "clinex/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <memory>
#include <set>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "clinex/backend.hpp"
#include "clinex/corpus.hpp"
#include "clinex/error.hpp"
#include "clinex/fixtures.hpp"
#include "clinex/io.hpp"
#include "clinex/pipeline.hpp"
#include "clinex/promptkit.hpp"
#include "clinex/report.hpp"
#include "clinex/schema.hpp"

namespace clinex {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string corpus;
    std::string truth;
    std::string schema;
    std::string exemplars;
    std::vector<std::string> variants;
    std::string model_id = "model";
    std::string translator_model_id;
    std::string backend_url;
    std::string mock_script;
    std::size_t parallelism = 1;
    std::string cache_dir;
    bool no_cache = false;
    std::string out_dir = "out";
    std::string seed_dir;
    unsigned retries = 3;
    unsigned retry_backoff_ms = 1000;
    unsigned timeout_s = 600;
    double translation_temperature = 0.3;
    int translation_max_new_tokens = 2048;
    int extraction_max_new_tokens = 512;
};

class CountingBackend final : public CompletionBackend {
public:
    explicit CountingBackend(std::unique_ptr<CompletionBackend> inner) : inner_(std::move(inner)) {}

    AttemptResult attempt(const PromptBundle& bundle, const GenerationConfig& config) override {
        ++requests_;
        return inner_->attempt(bundle, config);
    }

    std::size_t requests() const { return requests_.load(); }

private:
    std::unique_ptr<CompletionBackend> inner_;
    std::atomic<std::size_t> requests_{0};
};

void log(const std::string& line) { std::cerr << "clinex: " << line << '\n'; }

std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Inputs and backend shared by the subcommands, built lazily from the options.
class Session {
public:
    explicit Session(const Options& opt) : opt_(opt) {}

    const Options& opt() const { return opt_; }
    fs::path out_dir() const { return opt_.out_dir; }

    const FeatureSchema& schema() {
        if (!schema_) {
            schema_ = opt_.schema.empty() ? FeatureSchema::builtin() : FeatureSchema::load(opt_.schema);
        }
        return *schema_;
    }

    const ExemplarSet& exemplars() {
        if (!exemplars_) {
            exemplars_ = opt_.exemplars.empty()
                             ? ExemplarSet::from_json(json::parse(fixtures::embedded("exemplars")), schema())
                             : ExemplarSet::load(opt_.exemplars, schema());
        }
        return *exemplars_;
    }

    const Corpus& corpus() {
        if (!corpus_) {
            if (opt_.corpus.empty()) throw UsageError("--corpus is required");
            const auto format = fs::path(opt_.corpus).extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
            corpus_ = load_corpus(opt_.corpus, format);
        }
        return *corpus_;
    }

    const AnnotationTable& truth() {
        if (!truth_) {
            if (opt_.truth.empty()) throw UsageError("--truth is required");
            truth_ = load_ground_truth(opt_.truth, schema());
        }
        return *truth_;
    }

    std::set<RunVariant> variants() const {
        std::set<RunVariant> out;
        for (const auto& name : opt_.variants) out.insert(*parse_run_variant(name));
        if (out.empty()) out = {RunVariant::translated_english, RunVariant::direct_persian};
        return out;
    }

    StageConfigs configs() const {
        StageConfigs c{GenerationConfig::translation_defaults(
                           opt_.translator_model_id.empty() ? opt_.model_id : opt_.translator_model_id),
                       GenerationConfig::extraction_defaults(opt_.model_id)};
        c.translation.temperature = opt_.translation_temperature;
        c.translation.max_new_tokens = opt_.translation_max_new_tokens;
        c.extraction.max_new_tokens = opt_.extraction_max_new_tokens;
        c.translation.validate();
        c.extraction.validate();
        return c;
    }

    BackendContext& context() {
        if (!context_) {
            backend_ = std::make_unique<CountingBackend>(make_backend());
            if (!opt_.no_cache) {
                cache_ = std::make_unique<CompletionCache>(opt_.cache_dir.empty() ? out_dir() / "cache"
                                                                                  : fs::path(opt_.cache_dir));
            }
            RetryPolicy retry{opt_.retries, std::chrono::milliseconds(opt_.retry_backoff_ms), 2.0};
            context_.emplace(BackendContext{*backend_, cache_.get(), retry, opt_.parallelism});
        }
        return *context_;
    }

    std::size_t backend_requests() const { return backend_ ? backend_->requests() : 0; }

private:
    std::unique_ptr<CompletionBackend> make_backend() {
        if (!opt_.mock_script.empty() && !opt_.backend_url.empty()) {
            throw UsageError("--mock-script and --backend-url are mutually exclusive");
        }
        if (!opt_.mock_script.empty()) {
            return std::make_unique<MockBackend>(MockScript::load(opt_.mock_script, schema()), schema());
        }
        std::optional<BackendEndpoint> endpoint;
        if (!opt_.backend_url.empty()) {
            endpoint = BackendEndpoint{opt_.backend_url, std::nullopt, {}};
            if (const char* token = std::getenv("CLINEX_BACKEND_TOKEN"); token && *token) endpoint->bearer_token = token;
        } else {
            endpoint = BackendEndpoint::from_env();
        }
        if (!endpoint) {
            throw UsageError("no backend: pass --mock-script or --backend-url, or set CLINEX_BACKEND_URL");
        }
        endpoint->timeout = std::chrono::seconds(opt_.timeout_s);
        return std::make_unique<HttpBackend>(*endpoint);
    }

    const Options& opt_;
    std::optional<FeatureSchema> schema_;
    std::optional<ExemplarSet> exemplars_;
    std::optional<Corpus> corpus_;
    std::optional<AnnotationTable> truth_;
    std::unique_ptr<CountingBackend> backend_;
    std::unique_ptr<CompletionCache> cache_;
    std::optional<BackendContext> context_;
};

std::size_t report_failures(const PredictionSet& set) {
    std::size_t failed = 0;
    for (const auto& e : set.entries) {
        if (e.status == BackendStatus::ok) continue;
        ++failed;
        log(std::string(to_string(set.variant)) + ": " + e.transcript_id + " failed: " + e.error);
    }
    return failed;
}

void write_extraction(const fs::path& out, const PredictionSet& set) {
    io::write_file(layout::extraction(out, set.variant), to_snapshot_jsonl(set));
    io::write_file(layout::completions(out, set.variant), completions_jsonl(set));
    io::write_file(layout::diagnostics(out, set.variant), diagnostics_jsonl(set));
}

std::size_t write_translation(const fs::path& out, const TranslationResult& result) {
    io::write_file(out / layout::kTranslation, to_jsonl(result.english));
    for (const auto& o : result.outputs) {
        if (o.status != BackendStatus::ok || o.raw_text.empty()) {
            log("translation: " + o.transcript_id + " failed: " + (o.error.empty() ? "empty completion" : o.error));
        }
    }
    return result.failed_ids.size();
}

PredictionSet read_snapshot(Session& s, RunVariant variant) {
    return prediction_set_from_jsonl(io::read_file(layout::extraction(s.out_dir(), variant)), s.schema());
}

int cmd_translate(Session& s) {
    const auto result = run_translation_stage(s.corpus(), s.context(), s.configs().translation);
    const auto failed = write_translation(s.out_dir(), result);
    log("translated " + std::to_string(result.english.size() - failed) + "/" + std::to_string(result.english.size()) +
        " transcripts");
    return failed ? exit_code::kPartialFailure : exit_code::kOk;
}

int cmd_extract(Session& s) {
    std::size_t failed = 0;
    for (const auto variant : s.variants()) {
        Corpus input;
        if (variant == RunVariant::direct_persian) {
            input = s.corpus();
        } else if (!s.opt().corpus.empty() && !s.corpus().empty() && s.corpus().front().language == Language::english) {
            input = s.corpus();
        } else {
            input = load_corpus(s.out_dir() / layout::kTranslation, CorpusFormat::jsonl);
        }
        const auto set = run_extraction_stage(input, variant, s.exemplars(), s.schema(), s.context(), s.configs().extraction);
        write_extraction(s.out_dir(), set);
        failed += report_failures(set);
        log("extracted " + std::string(to_string(variant)) + " for " + std::to_string(set.entries.size()) +
            " transcripts");
    }
    return failed ? exit_code::kPartialFailure : exit_code::kOk;
}

int cmd_evaluate(Session& s) {
    for (const auto variant : s.variants()) {
        const auto set = read_snapshot(s, variant);
        const auto binaries = set.binaries();
        const auto table = evaluate_run(binaries, s.truth(), s.schema(), set.label);
        io::write_file(s.out_dir() / ("metrics_" + table.label + ".csv"), metric_table_csv(table));
        io::write_file(s.out_dir() / ("metrics_" + table.label + ".json"), to_json(table).dump(2) + "\n");
        log("evaluated " + table.label);
    }
    return exit_code::kOk;
}

int cmd_report(Session& s) {
    std::vector<PredictionSet> sets;
    std::vector<MetricTable> tables;
    for (const auto variant : s.variants()) {
        sets.push_back(read_snapshot(s, variant));
        tables.push_back(metric_table_from_json(
            json::parse(io::read_file(s.out_dir() / ("metrics_" + sets.back().label + ".json")))));
    }
    std::optional<VariantComparison> comparison;
    if (tables.size() == 2) comparison = compare_variants(tables[0], tables[1]);
    write_report(s.out_dir(), tables, sets, s.schema(), comparison ? &*comparison : nullptr);
    log("report written to " + s.out_dir().string());
    return exit_code::kOk;
}

int cmd_run(Session& s) {
    const auto variants = s.variants();
    const auto configs = s.configs();
    const auto result = run_full(s.corpus(), variants, s.truth(), s.schema(), s.exemplars(), s.context(), configs);

    RunManifest manifest;
    manifest.model_id = configs.extraction.model_id;
    manifest.variants.assign(variants.begin(), variants.end());
    manifest.configs = configs;
    manifest.corpus_digest = corpus_digest(s.corpus());
    manifest.schema_digest = s.schema().digest();
    manifest.exemplar_digest = s.exemplars().digest();
    manifest.created_at = now_iso8601();

    std::size_t failed = 0;
    if (result.translation) {
        const auto n = write_translation(s.out_dir(), *result.translation);
        manifest.stages["translation"] = n ? "partial" : "complete";
        failed += n;
    }
    std::vector<PredictionSet> sets;
    std::vector<MetricTable> tables;
    std::size_t errored = 0;
    for (const auto& [variant, outcome] : result.variants) {
        const std::string name(to_string(variant));
        if (!outcome.error.empty()) {
            log(name + ": " + outcome.error);
            manifest.stages["extraction_" + name] = "failed";
            ++errored;
            continue;
        }
        write_extraction(s.out_dir(), *outcome.predictions);
        const auto n = report_failures(*outcome.predictions);
        failed += n;
        manifest.stages["extraction_" + name] = n ? "partial" : "complete";
        manifest.stages["evaluation_" + name] = "complete";
        sets.push_back(*outcome.predictions);
        tables.push_back(*outcome.metrics);
    }
    write_report(s.out_dir(), tables, sets, s.schema(), result.comparison ? &*result.comparison : nullptr);
    manifest.stages["report"] = "complete";
    manifest.stats = {{"backend_requests", s.backend_requests()}};
    io::write_file(s.out_dir() / layout::kManifest, manifest.to_json().dump(2) + "\n");
    log("run " + manifest.run_id() + " written to " + s.out_dir().string() + " (" +
        std::to_string(s.backend_requests()) + " backend requests)");

    if (errored == result.variants.size()) return exit_code::kDataError;
    return failed || errored ? exit_code::kPartialFailure : exit_code::kOk;
}

int exit_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingInput: return exit_code::kNoInput;
        case ErrorKind::Io: return exit_code::kIoError;
        case ErrorKind::InvalidConfig: return exit_code::kUsage;
        default: return exit_code::kDataError;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    Options opt;
    CLI::App app{"Extracts binary clinical features from call transcripts with few-shot prompted language models "
                 "and evaluates them against ground truth.",
                 "clinex"};
    app.fallthrough();
    app.set_config("--config", "", "TOML file of `flag = value` lines; command-line flags win");

    app.add_option("--corpus", opt.corpus, "Transcript corpus (.jsonl, or .csv)");
    app.add_option("--truth", opt.truth, "Ground-truth CSV: id column plus one True/False column per feature");
    app.add_option("--schema", opt.schema, "Feature schema JSON (default: built-in 13 features)");
    app.add_option("--exemplars", opt.exemplars, "Few-shot exemplars JSON (default: built-in)");
    app.add_option("--variant", opt.variants, "translated_english or direct_persian; repeatable (default: both)")
        ->check(CLI::IsMember({"translated_english", "direct_persian"}));
    app.add_option("--model-id", opt.model_id, "Extraction model name sent to the backend")->capture_default_str();
    app.add_option("--translator-model-id", opt.translator_model_id, "Translation model (default: --model-id)");
    app.add_option("--backend-url", opt.backend_url,
                   "Chat-completions base URL (default: $CLINEX_BACKEND_URL); token from $CLINEX_BACKEND_TOKEN");
    app.add_option("--mock-script", opt.mock_script, "Use the offline mock backend with this script JSON");
    app.add_option("--parallelism", opt.parallelism, "Requests in flight")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--cache-dir", opt.cache_dir, "Completion cache directory (default: <out-dir>/cache)");
    app.add_flag("--no-cache", opt.no_cache, "Disable the completion cache");
    app.add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed-fixtures", opt.seed_dir,
                   "Write the bundled synthetic corpus, truth, mock script and config into DIR");
    app.add_option("--retries", opt.retries, "Attempts per request")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--retry-backoff-ms", opt.retry_backoff_ms, "First retry delay, doubled per attempt")
        ->capture_default_str();
    app.add_option("--timeout-s", opt.timeout_s, "Per-request HTTP timeout")->capture_default_str();
    app.add_option("--translation-temperature", opt.translation_temperature, "Translation sampling temperature")
        ->capture_default_str();
    app.add_option("--translation-max-new-tokens", opt.translation_max_new_tokens, "Translation token limit")
        ->capture_default_str();
    app.add_option("--extraction-max-new-tokens", opt.extraction_max_new_tokens, "Extraction token limit")
        ->capture_default_str();

    auto* translate = app.add_subcommand("translate", "Translate a Persian corpus to English (translation.jsonl)");
    auto* extract = app.add_subcommand("extract", "Run the extraction stage per variant (extraction_<variant>.jsonl)");
    auto* evaluate = app.add_subcommand("evaluate", "Score extraction snapshots against --truth (metrics_<label>.*)");
    auto* report = app.add_subcommand("report", "Emit table1, fig3, missing and comparison files from metrics");
    auto* run = app.add_subcommand("run", "translate, extract, evaluate and report in one go; writes run.json");
    app.require_subcommand(0, 1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, std::cout, std::cerr);
        if (code == 0) return exit_code::kOk;
        return dynamic_cast<const CLI::FileError*>(&e) ? exit_code::kNoInput : exit_code::kUsage;
    }

    try {
        if (!opt.seed_dir.empty()) {
            fixtures::seed(opt.seed_dir);
            log("demo inputs written to " + opt.seed_dir);
        }
        Session session(opt);
        if (*translate) return cmd_translate(session);
        if (*extract) return cmd_extract(session);
        if (*evaluate) return cmd_evaluate(session);
        if (*report) return cmd_report(session);
        if (*run) return cmd_run(session);
        if (!opt.seed_dir.empty()) return exit_code::kOk;
        std::cerr << app.help();
        return exit_code::kUsage;
    } catch (const UsageError& e) {
        log(std::string("usage: ") + e.what());
        return exit_code::kUsage;
    } catch (const Error& e) {
        log(std::string("error: ") + e.what());
        return exit_for(e.kind());
    } catch (const std::exception& e) {
        log(std::string("internal error: ") + e.what());
        return exit_code::kSoftware;
    }
}

}  // namespace clinex
