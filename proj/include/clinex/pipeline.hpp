#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinex/backend.hpp"
#include "clinex/corpus.hpp"
#include "clinex/metrics.hpp"
#include "clinex/parser.hpp"
#include "clinex/promptkit.hpp"
#include "clinex/schema.hpp"

namespace clinex {

enum class RunVariant { translated_english, direct_persian };

std::string_view to_string(RunVariant variant);
std::optional<RunVariant> parse_run_variant(std::string_view name);

/// Language the extraction stage expects for a variant.
Language extraction_language(RunVariant variant);

/// "<model>_<variant>", restricted to [A-Za-z0-9._-] so it is safe in file names.
std::string run_label(std::string_view model_id, RunVariant variant);

struct PredictionEntry {
    std::string transcript_id;
    TriStateFeatureVector tri;
    BinaryFeatureVector binary;
    std::string raw_completion;
    BackendStatus status = BackendStatus::ok;
    std::string error;

    bool operator==(const PredictionEntry&) const = default;
};

struct PredictionSet {
    std::string label;
    std::string model_id;
    RunVariant variant = RunVariant::translated_english;
    std::vector<PredictionEntry> entries;  // sorted by transcript id, unique

    std::vector<BinaryFeatureVector> binaries() const;
    std::uint64_t transcripts_with_missing() const;
    bool operator==(const PredictionSet&) const = default;
};

/// Stage snapshot: one JSON object per entry, no transport timings, so equal
/// sets serialize to identical bytes.
std::string to_snapshot_jsonl(const PredictionSet& set);
PredictionSet prediction_set_from_jsonl(std::string_view data, const FeatureSchema& schema);
/// Raw completions only: {id, status, completion, error}.
std::string completions_jsonl(const PredictionSet& set);
/// Parser notes of every entry, one audit object per line.
std::string diagnostics_jsonl(const PredictionSet& set);

struct BackendContext {
    CompletionBackend& backend;
    CompletionCache* cache = nullptr;
    RetryPolicy retry{};
    std::size_t parallelism = 1;
};

struct TranslationResult {
    Corpus english;                       // same ids, source_id -> original id
    std::vector<std::string> failed_ids;  // marked translation_failed, kept
    std::vector<ModelOutput> outputs;     // input order
};

/// Throws Error(WrongLanguage) if any transcript is not persian.
TranslationResult run_translation_stage(const Corpus& corpus, BackendContext& ctx,
                                        const GenerationConfig& config);

/// render -> complete -> parse -> resolve_missing per transcript. Failed
/// completions and failed translations yield all-Missing vectors with a
/// note. Throws Error(VariantMismatch) when the corpus language does not
/// match the variant.
PredictionSet run_extraction_stage(const Corpus& corpus, RunVariant variant,
                                   const ExemplarSet& exemplars, const FeatureSchema& schema,
                                   BackendContext& ctx, const GenerationConfig& config);

struct StageConfigs {
    GenerationConfig translation;
    GenerationConfig extraction;
};

struct ComparisonRow {
    std::string feature_id;
    double english_macro_f1 = 0.0;
    double persian_macro_f1 = 0.0;
    double macro_f1_delta = 0.0;  // english - persian
    std::uint64_t english_missing = 0;
    std::uint64_t persian_missing = 0;
    std::int64_t missing_delta = 0;  // english - persian
};

struct VariantComparison {
    std::string english_label;
    std::string persian_label;
    std::vector<ComparisonRow> rows;  // schema order
};

/// Throws Error(SchemaMismatch) if the tables disagree on features.
VariantComparison compare_variants(const MetricTable& english, const MetricTable& persian);

struct VariantOutcome {
    std::optional<PredictionSet> predictions;
    std::optional<MetricTable> metrics;
    std::string error;  // set when the variant could not be run
};

struct FullRunResult {
    std::optional<TranslationResult> translation;
    std::map<RunVariant, VariantOutcome> variants;
    std::optional<VariantComparison> comparison;  // only when both variants succeeded
};

/// Runs the translation stage only when translated_english is requested.
/// A failure in one variant is recorded in its outcome; the other still runs.
FullRunResult run_full(const Corpus& corpus, const std::set<RunVariant>& variants,
                       const AnnotationTable& truth, const FeatureSchema& schema,
                       const ExemplarSet& exemplars, BackendContext& ctx,
                       const StageConfigs& configs);

struct RunManifest {
    std::string model_id;
    std::vector<RunVariant> variants;
    StageConfigs configs;
    std::string corpus_digest;
    std::string schema_digest;
    std::string exemplar_digest;
    std::map<std::string, std::string> stages;  // stage name -> "complete" | "partial"
    std::string created_at;                     // ISO-8601, not part of the digest
    nlohmann::json stats = nlohmann::json::object();  // transport counters, not digested

    /// Digest of every reproducibility-relevant field (excludes created_at and stats).
    std::string digest() const;
    std::string run_id() const { return digest().substr(0, 16); }
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& doc);
};

/// Snapshot file names under an output directory.
namespace layout {
inline constexpr std::string_view kManifest = "run.json";
inline constexpr std::string_view kTranslation = "translation.jsonl";
std::filesystem::path extraction(const std::filesystem::path& out_dir, RunVariant variant);
std::filesystem::path completions(const std::filesystem::path& out_dir, RunVariant variant);
std::filesystem::path diagnostics(const std::filesystem::path& out_dir, RunVariant variant);
}  // namespace layout

}  // namespace clinex
