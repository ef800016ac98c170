#pragma once

#include <filesystem>
#include <string_view>

#include "clinex/backend.hpp"
#include "clinex/corpus.hpp"
#include "clinex/schema.hpp"

// The bundled synthetic demo corpus: 50 Persian calls, reference English
// translations, ground truth, and mock keywords.
namespace clinex::fixtures {

/// Raw embedded file by name: schema, exemplars, corpus, truth, translations, keywords.
std::string_view embedded(std::string_view name);

Corpus corpus();
AnnotationTable truth(const FeatureSchema& schema);

/// Keyword rules plus scripted translations keyed by the fingerprint of each
/// transcript's translation prompt.
MockScript mock_script(const FeatureSchema& schema);

/// Writes corpus.jsonl, truth.csv, schema.json, exemplars.json, mock.json and
/// clinex.toml into dir.
void seed(const std::filesystem::path& dir);

}  // namespace clinex::fixtures
