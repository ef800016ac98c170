#include "clinex/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clinex/csv.hpp"
#include "clinex/digest.hpp"
#include "clinex/error.hpp"
#include "clinex/io.hpp"
#include "clinex/text.hpp"

namespace clinex {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& reason) {
    throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ": " + reason);
}

bool is_blank(std::string_view s) { return text::collapse_whitespace(s).empty(); }

Transcript make_transcript(std::size_t line, std::string id, std::string_view language,
                           std::string_view body, std::optional<std::string> source_id,
                           bool translation_failed) {
    if (id.empty()) malformed(line, "empty id");
    const auto lang = parse_language(language);
    if (!lang) malformed(line, "unknown language \"" + std::string(language) + "\"");
    if (!text::is_valid_utf8(body)) malformed(line, "text is not valid UTF-8");
    if (is_blank(body)) malformed(line, "text is empty");
    if (source_id && source_id->empty()) source_id.reset();
    return Transcript{std::move(id), *lang, text::nfc(body), std::move(source_id), translation_failed};
}

}  // namespace

void validate_corpus(const Corpus& corpus, const Corpus* originals) {
    if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus has no transcripts");
    std::unordered_set<std::string> seen;
    std::unordered_set<std::string> persian_ids;
    for (const auto& t : corpus) {
        if (!seen.insert(t.id).second) throw Error(ErrorKind::DuplicateId, "duplicate transcript id \"" + t.id + "\"");
        if (is_blank(t.text)) throw Error(ErrorKind::MalformedRecord, "transcript \"" + t.id + "\" has empty text");
        if (t.language == Language::persian) persian_ids.insert(t.id);
    }
    const Corpus* reference = originals;
    if (reference == nullptr && !persian_ids.empty()) reference = &corpus;
    if (reference == nullptr) return;
    std::unordered_set<std::string> reference_ids;
    for (const auto& t : *reference) {
        if (t.language == Language::persian) reference_ids.insert(t.id);
    }
    for (const auto& t : corpus) {
        if (t.language == Language::english && t.source_id && !reference_ids.contains(*t.source_id)) {
            throw Error(ErrorKind::MalformedRecord,
                        "transcript \"" + t.id + "\" references unknown source \"" + *t.source_id + "\"");
        }
    }
}

Corpus parse_corpus_jsonl(std::string_view data) {
    Corpus corpus;
    const auto lines = text::split_lines(data);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (text::trim(lines[i]).empty()) continue;
        json obj;
        try {
            obj = json::parse(lines[i]);
        } catch (const json::exception& e) {
            malformed(line_no, e.what());
        }
        if (!obj.is_object()) malformed(line_no, "expected a JSON object");
        auto str_field = [&](const char* key, bool required) -> std::optional<std::string> {
            if (!obj.contains(key) || obj[key].is_null()) {
                if (required) malformed(line_no, std::string("missing \"") + key + "\"");
                return std::nullopt;
            }
            if (!obj[key].is_string()) malformed(line_no, std::string("\"") + key + "\" must be a string");
            return obj[key].get<std::string>();
        };
        auto id = *str_field("id", true);
        auto language = *str_field("language", true);
        auto body = *str_field("text", true);
        auto source = str_field("source_id", false);
        bool failed = false;
        if (obj.contains("translation_failed")) {
            if (!obj["translation_failed"].is_boolean()) malformed(line_no, "\"translation_failed\" must be a boolean");
            failed = obj["translation_failed"].get<bool>();
        }
        corpus.push_back(make_transcript(line_no, std::move(id), language, body, std::move(source), failed));
    }
    validate_corpus(corpus);
    return corpus;
}

Corpus parse_corpus_csv(std::string_view data) {
    const auto rows = csv::parse(data);
    if (rows.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus has no transcripts");
    const auto& header = rows.front().cells;
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(text::trim(header[i]))] = i;
    for (const char* required : {"id", "language", "text"}) {
        if (!col.contains(required)) throw Error(ErrorKind::MissingColumn, required);
    }
    Corpus corpus;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.cells.size() == 1 && row.cells[0].empty()) continue;
        if (row.cells.size() != header.size()) {
            malformed(row.line, "expected " + std::to_string(header.size()) + " cells, found " +
                                    std::to_string(row.cells.size()));
        }
        std::optional<std::string> source;
        if (auto it = col.find("source_id"); it != col.end()) source = row.cells[it->second];
        bool failed = false;
        if (auto it = col.find("translation_failed"); it != col.end()) {
            failed = row.cells[it->second] == "true" || row.cells[it->second] == "True";
        }
        corpus.push_back(make_transcript(row.line, row.cells[col["id"]], row.cells[col["language"]],
                                         row.cells[col["text"]], std::move(source), failed));
    }
    validate_corpus(corpus);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    const auto data = io::read_file(path);
    return format == CorpusFormat::jsonl ? parse_corpus_jsonl(data) : parse_corpus_csv(data);
}

std::string to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& t : corpus) {
        json obj = {{"id", t.id}, {"language", to_string(t.language)}, {"text", t.text}};
        if (t.source_id) obj["source_id"] = *t.source_id;
        if (t.translation_failed) obj["translation_failed"] = true;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::string to_csv(const Corpus& corpus) {
    std::string out = "id,language,text,source_id,translation_failed\n";
    for (const auto& t : corpus) {
        out += csv::join({t.id, std::string(to_string(t.language)), t.text, t.source_id.value_or(""),
                          t.translation_failed ? "true" : ""});
        out += '\n';
    }
    return out;
}

AnnotationTable parse_ground_truth(std::string_view data, const FeatureSchema& schema) {
    const auto rows = csv::parse(data);
    if (rows.empty()) throw Error(ErrorKind::MissingColumn, "id (file has no header row)");
    const auto& header = rows.front().cells;

    std::size_t id_col = header.size();
    std::array<std::size_t, kFeatureCount> feature_col{};
    std::array<bool, kFeatureCount> seen{};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name(text::trim(header[c]));
        if (name == "id") {
            id_col = c;
            continue;
        }
        const auto idx = schema.index_of(name);
        if (!idx) throw Error(ErrorKind::UnknownColumn, name);
        if (seen[*idx]) throw Error(ErrorKind::MalformedRecord, "line 1: duplicate column \"" + name + "\"");
        seen[*idx] = true;
        feature_col[*idx] = c;
    }
    if (id_col == header.size()) throw Error(ErrorKind::MissingColumn, "id");
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!seen[i]) throw Error(ErrorKind::MissingColumn, schema[i].id);
    }

    AnnotationTable table;
    table.schema_digest = schema.digest();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.cells.size() == 1 && row.cells[0].empty()) continue;
        if (row.cells.size() != header.size()) {
            malformed(row.line, "expected " + std::to_string(header.size()) + " cells, found " +
                                    std::to_string(row.cells.size()));
        }
        const auto& id = row.cells[id_col];
        if (id.empty()) malformed(row.line, "empty id");
        LabelVector labels{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const auto key = text::fold_case(row.cells[feature_col[i]]);
            if (key == "true") labels[i] = true;
            else if (key == "false") labels[i] = false;
            else {
                throw Error(ErrorKind::NonBooleanCell, "line " + std::to_string(row.line) + ", column " +
                                                           schema[i].id + ": \"" + row.cells[feature_col[i]] + "\"");
            }
        }
        if (!table.rows.emplace(id, labels).second) {
            throw Error(ErrorKind::DuplicateId, "duplicate ground-truth id \"" + id + "\"");
        }
    }
    return table;
}

AnnotationTable load_ground_truth(const std::filesystem::path& path, const FeatureSchema& schema) {
    return parse_ground_truth(io::read_file(path), schema);
}

AlignedDataset align(const Corpus& corpus, const AnnotationTable& annotations) {
    AlignedDataset out;
    std::set<std::string> corpus_ids;
    for (const auto& t : corpus) {
        corpus_ids.insert(t.id);
        if (auto it = annotations.rows.find(t.id); it != annotations.rows.end()) {
            out.pairs.emplace_back(t, it->second);
        } else {
            out.unannotated.push_back(t.id);
        }
    }
    for (const auto& [id, _] : annotations.rows) {
        if (!corpus_ids.contains(id)) out.orphan_labels.push_back(id);
    }
    if (out.pairs.empty()) throw Error(ErrorKind::EmptyIntersection, "corpus and annotations share no ids");
    std::ranges::sort(out.pairs, {}, [](const auto& p) { return p.first.id; });
    std::ranges::sort(out.unannotated);
    return out;
}

std::string corpus_digest(const Corpus& corpus) { return sha256_hex(to_jsonl(corpus)); }

}  // namespace clinex
