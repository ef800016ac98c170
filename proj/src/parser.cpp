#include "clinex/parser.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "clinex/text.hpp"

namespace clinex {

using nlohmann::json;

namespace {

// ASCII colon first; the rest are the full-width, small, ratio and modifier
// colons that show up in Persian and CJK-influenced model output.
constexpr std::array<std::string_view, 6> kSeparators = {
    ":", "\xEF\xBC\x9A" /* U+FF1A */, "\xEF\xB9\x95" /* U+FE55 */, "\xEF\xB8\x93" /* U+FE13 */,
    "\xE2\x88\xB6" /* U+2236 */, "\xEA\x9E\x89" /* U+A789 */};

constexpr std::size_t kExcerptBytes = 80;

using LabelIndex = std::unordered_map<std::string, std::size_t>;

std::shared_ptr<const LabelIndex> label_index(const FeatureSchema& schema) {
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const LabelIndex>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[schema.digest()];
    if (!slot) {
        auto index = std::make_shared<LabelIndex>();
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const auto& f = schema[i];
            for (const auto& [_, label] : f.template_labels) index->emplace(text::match_key(label), i);
            for (const auto& alias : f.aliases) index->emplace(text::match_key(alias), i);
            index->emplace(text::match_key(f.display_name), i);
            index->emplace(text::match_key(f.id), i);
        }
        slot = std::move(index);
    }
    return slot;
}

std::string excerpt(std::string_view line) {
    if (line.size() <= kExcerptBytes) return std::string(line);
    std::size_t cut = kExcerptBytes - 3;
    while (cut > 0 && (static_cast<unsigned char>(line[cut]) & 0xC0) == 0x80) --cut;
    return std::string(line.substr(0, cut)) + "...";
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

// Drops list bullets, numbering and markdown emphasis around a label or value.
std::string_view strip_decorations(std::string_view s) {
    constexpr std::string_view kEdge = "*_`\"'#>";
    constexpr std::string_view kBullet = "\xE2\x80\xA2";  // U+2022
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        while (!s.empty() && is_space(s.front())) { s.remove_prefix(1); changed = true; }
        while (!s.empty() && is_space(s.back())) { s.remove_suffix(1); changed = true; }
        if (s.starts_with(kBullet)) { s.remove_prefix(kBullet.size()); changed = true; }
        if (!s.empty() && (kEdge.find(s.front()) != std::string_view::npos || s.front() == '-')) {
            s.remove_prefix(1);
            changed = true;
        }
        if (!s.empty() && kEdge.find(s.back()) != std::string_view::npos) {
            s.remove_suffix(1);
            changed = true;
        }
    }
    // "3. Pain" / "3) Pain"
    std::size_t digits = 0;
    while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
    if (digits > 0 && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') && is_space(s[digits + 1])) {
        return strip_decorations(s.substr(digits + 1));
    }
    return s;
}

std::optional<bool> parse_value(std::string_view raw) {
    auto v = strip_decorations(raw);
    while (!v.empty() && (v.back() == '.' || v.back() == ',' || v.back() == ';' || v.back() == '!')) v.remove_suffix(1);
    const auto key = text::match_key(v);
    if (key == "true") return true;
    if (key == "false") return false;
    return std::nullopt;
}

std::optional<std::pair<std::size_t, std::size_t>> find_separator(std::string_view line) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (const auto sep : kSeparators) {
        const auto pos = line.find(sep);
        if (pos != std::string_view::npos && (!best || pos < best->first)) best = std::pair{pos, sep.size()};
    }
    return best;
}

}  // namespace

std::string_view to_string(TriState value) {
    switch (value) {
        case TriState::True: return "True";
        case TriState::False: return "False";
        case TriState::Missing: return "Missing";
    }
    return "Missing";
}

std::string_view to_string(NoteKind kind) {
    switch (kind) {
        case NoteKind::unmatched_line: return "unmatched_line";
        case NoteKind::invalid_value: return "invalid_value";
        case NoteKind::duplicate_field: return "duplicate_field";
        case NoteKind::conflicting_field: return "conflicting_field";
        case NoteKind::missing_field: return "missing_field";
        case NoteKind::backend_failure: return "backend_failure";
        case NoteKind::translation_failed: return "translation_failed";
    }
    return "unmatched_line";
}

std::size_t TriStateFeatureVector::missing_count() const {
    return static_cast<std::size_t>(std::ranges::count(values, TriState::Missing));
}

std::size_t BinaryFeatureVector::missing_count() const {
    return static_cast<std::size_t>(std::ranges::count(missing_mask, true));
}

TriStateFeatureVector parse_output(std::string_view raw_text, Language /*variant*/, const FeatureSchema& schema) {
    TriStateFeatureVector out;
    out.values.fill(TriState::Missing);
    const auto index = label_index(schema);

    const auto lines = text::split_lines(raw_text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string_view line = lines[n];
        const std::size_t line_no = n + 1;
        if (text::collapse_whitespace(line).empty()) continue;

        const auto sep = find_separator(line);
        std::optional<std::size_t> feature;
        if (sep) {
            const auto key = text::match_key(strip_decorations(line.substr(0, sep->first)));
            if (auto it = index->find(key); it != index->end()) feature = it->second;
        }
        if (!feature) {
            out.diagnostics.push_back({NoteKind::unmatched_line, line_no, excerpt(line)});
            continue;
        }

        const auto value = parse_value(line.substr(sep->first + sep->second));
        if (!value) {
            out.diagnostics.push_back({NoteKind::invalid_value, line_no, excerpt(line)});
            continue;
        }
        const TriState parsed = *value ? TriState::True : TriState::False;
        TriState& slot = out.values[*feature];
        if (slot == TriState::Missing) {
            slot = parsed;
        } else {
            out.diagnostics.push_back(
                {slot == parsed ? NoteKind::duplicate_field : NoteKind::conflicting_field, line_no, excerpt(line)});
        }
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (out.values[i] == TriState::Missing) out.diagnostics.push_back({NoteKind::missing_field, 0, schema[i].id});
    }
    return out;
}

TriStateFeatureVector all_missing(std::string transcript_id, ParseNote note) {
    TriStateFeatureVector out;
    out.transcript_id = std::move(transcript_id);
    out.values.fill(TriState::Missing);
    out.diagnostics.push_back(std::move(note));
    return out;
}

BinaryFeatureVector resolve_missing(const TriStateFeatureVector& tri) {
    BinaryFeatureVector out;
    out.transcript_id = tri.transcript_id;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        out.values[i] = tri.values[i] == TriState::True;
        out.missing_mask[i] = tri.values[i] == TriState::Missing;
    }
    return out;
}

std::vector<json> diagnostics_json(const TriStateFeatureVector& tri) {
    std::vector<json> out;
    out.reserve(tri.diagnostics.size());
    for (const auto& note : tri.diagnostics) {
        out.push_back({{"transcript_id", tri.transcript_id},
                       {"note_kind", to_string(note.kind)},
                       {"line_no", note.line_no},
                       {"excerpt", note.excerpt}});
    }
    return out;
}

}  // namespace clinex
