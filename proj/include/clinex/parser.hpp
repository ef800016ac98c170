#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinex/schema.hpp"

namespace clinex {

enum class TriState { False, True, Missing };

std::string_view to_string(TriState value);

enum class NoteKind {
    unmatched_line,     // non-blank line that is not "<label>: <value>"
    invalid_value,      // known label, value not true/false
    duplicate_field,    // repeated with the same value
    conflicting_field,  // repeated with a different valid value; first kept
    missing_field,      // never stated with a valid value
    backend_failure,    // no completion could be obtained
    translation_failed, // upstream translation failed; extraction skipped
};

std::string_view to_string(NoteKind kind);

struct ParseNote {
    NoteKind kind;
    std::size_t line_no = 0;  // 1-based; 0 when not tied to a line
    std::string excerpt;
    bool operator==(const ParseNote&) const = default;
};

struct TriStateFeatureVector {
    std::string transcript_id;
    std::array<TriState, kFeatureCount> values{};
    std::vector<ParseNote> diagnostics;

    std::size_t missing_count() const;
    bool operator==(const TriStateFeatureVector&) const = default;
};

struct BinaryFeatureVector {
    std::string transcript_id;
    LabelVector values{};
    LabelVector missing_mask{};

    std::size_t missing_count() const;
    bool operator==(const BinaryFeatureVector&) const = default;
};

/// Total: never throws on any input. Labels from every language variant and
/// every schema alias are accepted; `variant` only selects which label set is
/// tried first. Value must be "true"/"false" (case-insensitive).
TriStateFeatureVector parse_output(std::string_view raw_text, Language variant,
                                   const FeatureSchema& schema);

/// All-Missing vector carrying a single note, for items with no completion.
TriStateFeatureVector all_missing(std::string transcript_id, ParseNote note);

/// Missing resolves to false with its mask bit set.
BinaryFeatureVector resolve_missing(const TriStateFeatureVector& tri);

/// JSONL audit line objects: {transcript_id, note_kind, line_no, excerpt}.
std::vector<nlohmann::json> diagnostics_json(const TriStateFeatureVector& tri);

}  // namespace clinex
