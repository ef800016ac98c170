#include "clinex/pipeline.hpp"

#include <algorithm>

#include "clinex/digest.hpp"
#include "clinex/error.hpp"
#include "clinex/text.hpp"

namespace clinex {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(RunVariant variant) {
    return variant == RunVariant::translated_english ? "translated_english" : "direct_persian";
}

std::optional<RunVariant> parse_run_variant(std::string_view name) {
    if (name == "translated_english") return RunVariant::translated_english;
    if (name == "direct_persian") return RunVariant::direct_persian;
    return std::nullopt;
}

Language extraction_language(RunVariant variant) {
    return variant == RunVariant::translated_english ? Language::english : Language::persian;
}

std::string run_label(std::string_view model_id, RunVariant variant) {
    std::string label(model_id);
    label += '_';
    label += to_string(variant);
    for (char& c : label) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                          c == '-' || c == '_';
        if (!keep) c = '_';
    }
    return label;
}

std::vector<BinaryFeatureVector> PredictionSet::binaries() const {
    std::vector<BinaryFeatureVector> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.binary);
    return out;
}

std::uint64_t PredictionSet::transcripts_with_missing() const {
    return static_cast<std::uint64_t>(
        std::ranges::count_if(entries, [](const PredictionEntry& e) { return e.binary.missing_count() > 0; }));
}

// ---------------------------------------------------------------------------
// Snapshots

std::string to_snapshot_jsonl(const PredictionSet& set) {
    std::string out =
        json{{"snapshot", {{"label", set.label}, {"model_id", set.model_id}, {"variant", to_string(set.variant)}}}}
            .dump() +
        "\n";
    for (const auto& e : set.entries) {
        json values = json::array();
        for (const auto v : e.tri.values) values.push_back(to_string(v));
        json notes = json::array();
        for (const auto& n : e.tri.diagnostics) {
            notes.push_back({{"kind", to_string(n.kind)}, {"line_no", n.line_no}, {"excerpt", n.excerpt}});
        }
        out += json{{"id", e.transcript_id},
                    {"values", values},
                    {"status", to_string(e.status)},
                    {"error", e.error},
                    {"completion", e.raw_completion},
                    {"notes", notes}}
                   .dump();
        out += '\n';
    }
    return out;
}

PredictionSet prediction_set_from_jsonl(std::string_view data, const FeatureSchema& /*schema*/) {
    PredictionSet set;
    bool have_header = false;
    const auto lines = text::split_lines(data);
    auto bad = [](std::size_t line, const std::string& why) -> Error {
        return Error(ErrorKind::MalformedRecord, "snapshot line " + std::to_string(line) + ": " + why);
    };
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (text::trim(lines[n]).empty()) continue;
        try {
            const auto obj = json::parse(lines[n]);
            if (obj.contains("snapshot")) {
                const auto& meta = obj["snapshot"];
                set.label = meta.at("label").get<std::string>();
                set.model_id = meta.at("model_id").get<std::string>();
                const auto variant = parse_run_variant(meta.at("variant").get<std::string>());
                if (!variant) throw bad(n + 1, "unknown variant");
                set.variant = *variant;
                have_header = true;
                continue;
            }
            PredictionEntry e;
            e.transcript_id = obj.at("id").get<std::string>();
            e.tri.transcript_id = e.transcript_id;
            const auto& values = obj.at("values");
            if (values.size() != kFeatureCount) throw bad(n + 1, "expected 13 values");
            for (std::size_t i = 0; i < kFeatureCount; ++i) {
                const auto v = values[i].get<std::string>();
                if (v == "True") e.tri.values[i] = TriState::True;
                else if (v == "False") e.tri.values[i] = TriState::False;
                else if (v == "Missing") e.tri.values[i] = TriState::Missing;
                else throw bad(n + 1, "bad value \"" + v + "\"");
            }
            for (const auto& note : obj.at("notes")) {
                static const std::array kinds = {NoteKind::unmatched_line,    NoteKind::invalid_value,
                                                 NoteKind::duplicate_field,   NoteKind::conflicting_field,
                                                 NoteKind::missing_field,     NoteKind::backend_failure,
                                                 NoteKind::translation_failed};
                const auto name = note.at("kind").get<std::string>();
                auto kind = std::ranges::find_if(kinds, [&](NoteKind k) { return to_string(k) == name; });
                if (kind == kinds.end()) throw bad(n + 1, "unknown note kind \"" + name + "\"");
                e.tri.diagnostics.push_back(
                    {*kind, note.at("line_no").get<std::size_t>(), note.at("excerpt").get<std::string>()});
            }
            e.status = obj.at("status").get<std::string>() == "ok" ? BackendStatus::ok : BackendStatus::failed_after_retries;
            e.error = obj.at("error").get<std::string>();
            e.raw_completion = obj.at("completion").get<std::string>();
            e.binary = resolve_missing(e.tri);
            set.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw bad(n + 1, ex.what());
        }
    }
    if (!have_header) throw Error(ErrorKind::MalformedRecord, "snapshot has no header line");
    return set;
}

std::string completions_jsonl(const PredictionSet& set) {
    std::string out;
    for (const auto& e : set.entries) {
        out += json{{"id", e.transcript_id}, {"status", to_string(e.status)}, {"completion", e.raw_completion},
                    {"error", e.error}}
                   .dump();
        out += '\n';
    }
    return out;
}

std::string diagnostics_jsonl(const PredictionSet& set) {
    std::string out;
    for (const auto& e : set.entries) {
        for (const auto& line : diagnostics_json(e.tri)) {
            out += line.dump();
            out += '\n';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stages

TranslationResult run_translation_stage(const Corpus& corpus, BackendContext& ctx, const GenerationConfig& config) {
    std::vector<CompletionRequest> requests;
    requests.reserve(corpus.size());
    for (const auto& t : corpus) requests.push_back({t.id, render_translation_prompt(t)});

    TranslationResult result;
    result.outputs = batch_complete(requests, config, ctx.backend, ctx.cache, ctx.parallelism, ctx.retry);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& source = corpus[i];
        const auto& output = result.outputs[i];
        Transcript english{source.id, Language::english, {}, source.id, false};
        const std::string translated = text::nfc(text::trim(output.raw_text));
        if (output.status == BackendStatus::ok && !text::collapse_whitespace(translated).empty()) {
            english.text = translated;
        } else {
            english.text = std::string(kTranslationFailedText);
            english.translation_failed = true;
            result.failed_ids.push_back(source.id);
        }
        result.english.push_back(std::move(english));
    }
    return result;
}

PredictionSet run_extraction_stage(const Corpus& corpus, RunVariant variant, const ExemplarSet& exemplars,
                                   const FeatureSchema& schema, BackendContext& ctx, const GenerationConfig& config) {
    const Language language = extraction_language(variant);
    for (const auto& t : corpus) {
        if (t.language != language) {
            throw Error(ErrorKind::VariantMismatch, std::string(to_string(variant)) + " needs " +
                                                        std::string(to_string(language)) + " transcripts, \"" + t.id +
                                                        "\" is " + std::string(to_string(t.language)));
        }
    }

    PredictionSet set;
    set.model_id = config.model_id;
    set.variant = variant;
    set.label = run_label(config.model_id, variant);

    std::vector<CompletionRequest> requests;
    std::vector<std::size_t> request_of(corpus.size(), corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].translation_failed) continue;
        request_of[i] = requests.size();
        requests.push_back({corpus[i].id, render_extraction_prompt(corpus[i].text, language, exemplars, schema)});
    }
    const auto outputs = batch_complete(requests, config, ctx.backend, ctx.cache, ctx.parallelism, ctx.retry);

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        PredictionEntry e;
        e.transcript_id = corpus[i].id;
        if (request_of[i] == corpus.size()) {
            e.tri = all_missing(e.transcript_id, {NoteKind::translation_failed, 0, "no translation available"});
            e.status = BackendStatus::failed_after_retries;
            e.error = "translation failed";
        } else {
            const auto& out = outputs[request_of[i]];
            e.status = out.status;
            e.error = out.error;
            if (out.status == BackendStatus::ok) {
                e.raw_completion = out.raw_text;
                e.tri = parse_output(out.raw_text, language, schema);
                e.tri.transcript_id = e.transcript_id;
            } else {
                e.tri = all_missing(e.transcript_id, {NoteKind::backend_failure, 0, out.error.substr(0, 200)});
            }
        }
        e.binary = resolve_missing(e.tri);
        set.entries.push_back(std::move(e));
    }
    std::ranges::sort(set.entries, {}, &PredictionEntry::transcript_id);
    return set;
}

VariantComparison compare_variants(const MetricTable& english, const MetricTable& persian) {
    if (english.features.size() != persian.features.size()) {
        throw Error(ErrorKind::SchemaMismatch, "variant tables have different feature counts");
    }
    VariantComparison cmp{english.label, persian.label, {}};
    for (std::size_t i = 0; i < english.features.size(); ++i) {
        const auto& e = english.features[i];
        const auto& p = persian.features[i];
        if (e.feature_id != p.feature_id) {
            throw Error(ErrorKind::SchemaMismatch, "feature " + e.feature_id + " vs " + p.feature_id);
        }
        ComparisonRow row;
        row.feature_id = e.feature_id;
        row.english_macro_f1 = e.get(MetricKind::macro_f1).value.value_or(0.0);
        row.persian_macro_f1 = p.get(MetricKind::macro_f1).value.value_or(0.0);
        row.macro_f1_delta = row.english_macro_f1 - row.persian_macro_f1;
        row.english_missing = e.missing_fields;
        row.persian_missing = p.missing_fields;
        row.missing_delta = static_cast<std::int64_t>(e.missing_fields) - static_cast<std::int64_t>(p.missing_fields);
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

FullRunResult run_full(const Corpus& corpus, const std::set<RunVariant>& variants, const AnnotationTable& truth,
                       const FeatureSchema& schema, const ExemplarSet& exemplars, BackendContext& ctx,
                       const StageConfigs& configs) {
    FullRunResult result;
    std::string translation_error;
    if (variants.contains(RunVariant::translated_english)) {
        try {
            result.translation = run_translation_stage(corpus, ctx, configs.translation);
        } catch (const Error& e) {
            translation_error = e.what();
        }
    }
    for (const auto variant : variants) {
        auto& outcome = result.variants[variant];
        if (variant == RunVariant::translated_english && !result.translation) {
            outcome.error = "translation stage failed: " + translation_error;
            continue;
        }
        try {
            const Corpus& input = variant == RunVariant::translated_english ? result.translation->english : corpus;
            auto set = run_extraction_stage(input, variant, exemplars, schema, ctx, configs.extraction);
            const auto binaries = set.binaries();
            outcome.metrics = evaluate_run(binaries, truth, schema, set.label);
            outcome.predictions = std::move(set);
        } catch (const Error& e) {
            outcome.error = e.what();
        }
    }
    auto en = result.variants.find(RunVariant::translated_english);
    auto fa = result.variants.find(RunVariant::direct_persian);
    if (en != result.variants.end() && fa != result.variants.end() && en->second.metrics && fa->second.metrics) {
        result.comparison = compare_variants(*en->second.metrics, *fa->second.metrics);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

json manifest_body(const RunManifest& m) {
    json variants = json::array();
    for (const auto v : m.variants) variants.push_back(to_string(v));
    return {{"model_id", m.model_id},
            {"variants", variants},
            {"configs", {{"translation", m.configs.translation.to_json()}, {"extraction", m.configs.extraction.to_json()}}},
            {"corpus_digest", m.corpus_digest},
            {"schema_digest", m.schema_digest},
            {"exemplar_digest", m.exemplar_digest},
            {"stages", m.stages}};
}

GenerationConfig config_from_json(const json& j) {
    return GenerationConfig{j.at("model_id").get<std::string>(), j.at("temperature").get<double>(),
                            j.at("max_new_tokens").get<int>(), j.at("sampling_enabled").get<bool>()};
}

}  // namespace

std::string RunManifest::digest() const { return sha256_hex(manifest_body(*this).dump()); }

json RunManifest::to_json() const {
    json doc = manifest_body(*this);
    doc["run_id"] = run_id();
    doc["digest"] = digest();
    doc["created_at"] = created_at;
    doc["stats"] = stats;
    return doc;
}

RunManifest RunManifest::from_json(const json& doc) {
    try {
        RunManifest m;
        m.model_id = doc.at("model_id").get<std::string>();
        for (const auto& v : doc.at("variants")) {
            const auto variant = parse_run_variant(v.get<std::string>());
            if (!variant) throw Error(ErrorKind::MalformedRecord, "run manifest: unknown variant");
            m.variants.push_back(*variant);
        }
        m.configs.translation = config_from_json(doc.at("configs").at("translation"));
        m.configs.extraction = config_from_json(doc.at("configs").at("extraction"));
        m.corpus_digest = doc.at("corpus_digest").get<std::string>();
        m.schema_digest = doc.at("schema_digest").get<std::string>();
        m.exemplar_digest = doc.at("exemplar_digest").get<std::string>();
        m.stages = doc.at("stages").get<std::map<std::string, std::string>>();
        m.created_at = doc.value("created_at", std::string());
        m.stats = doc.value("stats", json::object());
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedRecord, std::string("run manifest: ") + e.what());
    }
}

namespace layout {

fs::path extraction(const fs::path& out_dir, RunVariant variant) {
    return out_dir / ("extraction_" + std::string(to_string(variant)) + ".jsonl");
}

fs::path completions(const fs::path& out_dir, RunVariant variant) {
    return out_dir / "completions" / (std::string(to_string(variant)) + ".jsonl");
}

fs::path diagnostics(const fs::path& out_dir, RunVariant variant) {
    return out_dir / "diagnostics" / (std::string(to_string(variant)) + ".jsonl");
}

}  // namespace layout

}  // namespace clinex
