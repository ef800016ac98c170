#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clinex/schema.hpp"

namespace clinex {

struct Transcript {
    std::string id;
    Language language = Language::persian;
    std::string text;                      // NFC, non-empty after trimming
    std::optional<std::string> source_id;  // set on translated transcripts
    bool translation_failed = false;       // text is a placeholder, not a translation

    bool operator==(const Transcript&) const = default;
};

using Corpus = std::vector<Transcript>;

enum class CorpusFormat { jsonl, csv };

/// Text used in place of a translation that could not be obtained.
inline constexpr std::string_view kTranslationFailedText = "[translation unavailable]";

/// Records in file order. Throws Error with MalformedRecord (carrying the line
/// number), DuplicateId, EmptyCorpus, MissingInput or Io.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus parse_corpus_jsonl(std::string_view data);
Corpus parse_corpus_csv(std::string_view data);

std::string to_jsonl(const Corpus& corpus);
std::string to_csv(const Corpus& corpus);

/// Checks the corpus invariants: non-empty, unique ids, non-blank text, and
/// every english transcript with a source_id pointing at a persian id present
/// in `originals` (if given).
void validate_corpus(const Corpus& corpus, const Corpus* originals = nullptr);

/// Ground truth, keyed by transcript id.
struct AnnotationTable {
    std::map<std::string, LabelVector> rows;
    std::string schema_digest;
};

AnnotationTable load_ground_truth(const std::filesystem::path& path, const FeatureSchema& schema);
AnnotationTable parse_ground_truth(std::string_view data, const FeatureSchema& schema);

struct AlignedDataset {
    std::vector<std::pair<Transcript, LabelVector>> pairs;  // sorted by id
    std::vector<std::string> unannotated;                   // in corpus, not in truth
    std::vector<std::string> orphan_labels;                 // in truth, not in corpus
};

/// Intersection by id. Throws Error(EmptyIntersection).
AlignedDataset align(const Corpus& corpus, const AnnotationTable& annotations);

/// SHA-256 over the canonical JSONL serialization.
std::string corpus_digest(const Corpus& corpus);

}  // namespace clinex
