#include "clinex/report.hpp"

#include <algorithm>
#include <cstdio>

#include "clinex/csv.hpp"
#include "clinex/error.hpp"
#include "clinex/format.hpp"
#include "clinex/io.hpp"

namespace clinex {

namespace {

constexpr std::string_view kNullCell = "—";

std::string md_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) {
        out += ' ';
        out += c;
        out += " |";
    }
    out += '\n';
    return out;
}

std::string md_rule(std::size_t columns) {
    std::string out = "|---|";
    for (std::size_t i = 1; i < columns; ++i) out += "---:|";
    out += '\n';
    return out;
}

void check_table(const MetricTable& table, const FeatureSchema& schema) {
    if (!table.schema_digest.empty() && table.schema_digest != schema.digest()) {
        throw Error(ErrorKind::SchemaMismatch, "table \"" + table.label + "\" was built against another schema");
    }
    if (table.features.size() != schema.features().size()) {
        throw Error(ErrorKind::SchemaMismatch, "table \"" + table.label + "\" has " +
                                                   std::to_string(table.features.size()) + " features");
    }
    for (std::size_t i = 0; i < table.features.size(); ++i) {
        if (table.features[i].feature_id != schema.features()[i].id) {
            throw Error(ErrorKind::SchemaMismatch, "table \"" + table.label + "\" row " + std::to_string(i + 1) +
                                                       " is " + table.features[i].feature_id + ", expected " +
                                                       schema.features()[i].id);
        }
    }
}

std::string signed3(double value) {
    const std::string body = format3(value);
    return body.front() == '-' || body == "0.000" ? body : "+" + body;
}

}  // namespace

GridArtifact emit_feature_table(std::span<const MetricTable> tables, const FeatureSchema& schema) {
    if (tables.empty()) throw Error(ErrorKind::EmptyInput, "feature table needs at least one metric table");
    for (const auto& t : tables) check_table(t, schema);

    GridArtifact out;
    std::vector<std::string> header{"Feature"};
    std::vector<std::string> csv_header{"feature_id"};
    for (const auto& t : tables) {
        header.push_back(t.label);
        csv_header.push_back(t.label);
    }
    out.markdown = md_row(header) + md_rule(header.size());
    out.csv = csv::join(csv_header) + "\n";

    for (std::size_t f = 0; f < schema.features().size(); ++f) {
        std::vector<std::string> cells;
        std::optional<double> best;
        for (const auto& t : tables) {
            const auto v = t.features[f].get(MetricKind::macro_f1).value;
            cells.push_back(format3(v));
            if (v) {
                const double r = round_half_even(*v, 3);
                best = best ? std::max(*best, r) : r;
            }
        }
        std::vector<std::string> md{schema.features()[f].display_name};
        std::vector<std::string> row{schema.features()[f].id};
        for (std::size_t c = 0; c < tables.size(); ++c) {
            row.push_back(cells[c]);
            if (cells[c].empty()) {
                md.emplace_back(kNullCell);
            } else if (format3(*best) == cells[c]) {
                md.push_back("**" + cells[c] + "**");
            } else {
                md.push_back(cells[c]);
            }
        }
        out.markdown += md_row(md);
        out.csv += csv::join(row) + "\n";
    }

    std::vector<std::string> md{std::string(kSummaryRowLabel)};
    std::vector<std::string> row{std::string(kSummaryRowLabel)};
    for (const auto& t : tables) {
        std::vector<double> column;
        for (const auto& fm : t.features) {
            if (const auto v = fm.get(MetricKind::macro_f1).value) column.push_back(*v);
        }
        const std::string cell = column.empty() ? std::string() : format_summary(summarize_median_iqr(column));
        md.push_back(cell.empty() ? std::string(kNullCell) : cell);
        row.push_back(cell);
    }
    out.markdown += md_row(md);
    out.csv += csv::join(row) + "\n";
    return out;
}

std::string emit_scatter_data(const MetricTable& table) {
    std::string out = "feature_id,sensitivity,specificity\n";
    for (const auto& fm : table.features) {
        out += csv::join({fm.feature_id, format3(fm.get(MetricKind::sensitivity).value),
                          format3(fm.get(MetricKind::specificity).value)});
        out += '\n';
    }
    return out;
}

std::string emit_missing_table(std::span<const PredictionSet> sets, const FeatureSchema& schema) {
    std::vector<std::string> header{"label"};
    for (const auto& f : schema.features()) header.push_back(f.id);
    header.emplace_back("field_total");
    header.emplace_back("transcripts_with_missing");
    std::string out = csv::join(header) + "\n";

    for (const auto& set : sets) {
        std::array<std::uint64_t, kFeatureCount> per_feature{};
        for (const auto& e : set.entries) {
            for (std::size_t i = 0; i < kFeatureCount; ++i) per_feature[i] += e.binary.missing_mask[i] ? 1 : 0;
        }
        std::vector<std::string> row{set.label};
        std::uint64_t total = 0;
        for (const auto n : per_feature) {
            row.push_back(std::to_string(n));
            total += n;
        }
        row.push_back(std::to_string(total));
        row.push_back(std::to_string(set.transcripts_with_missing()));
        out += csv::join(row) + "\n";
    }
    return out;
}

GridArtifact emit_comparison(const VariantComparison& comparison) {
    GridArtifact out;
    const std::vector<std::string> header{"feature_id",
                                          "macro_f1_" + comparison.english_label,
                                          "macro_f1_" + comparison.persian_label,
                                          "macro_f1_delta",
                                          "missing_" + comparison.english_label,
                                          "missing_" + comparison.persian_label,
                                          "missing_delta"};
    out.csv = csv::join(header) + "\n";
    out.markdown = md_row({"Feature", "Macro-F1 (" + comparison.english_label + ")",
                           "Macro-F1 (" + comparison.persian_label + ")", "Δ Macro-F1",
                           "Missing (" + comparison.english_label + ")", "Missing (" + comparison.persian_label + ")",
                           "Δ Missing"}) +
                   md_rule(header.size());
    for (const auto& r : comparison.rows) {
        const std::string delta_missing =
            r.missing_delta > 0 ? "+" + std::to_string(r.missing_delta) : std::to_string(r.missing_delta);
        const std::vector<std::string> cells{r.feature_id,
                                             format3(r.english_macro_f1),
                                             format3(r.persian_macro_f1),
                                             signed3(r.macro_f1_delta),
                                             std::to_string(r.english_missing),
                                             std::to_string(r.persian_missing),
                                             delta_missing};
        out.csv += csv::join(cells) + "\n";
        out.markdown += md_row(cells);
    }
    return out;
}

void write_report(const std::filesystem::path& out_dir, std::span<const MetricTable> tables,
                  std::span<const PredictionSet> sets, const FeatureSchema& schema,
                  const VariantComparison* comparison) {
    if (!tables.empty()) {
        const auto grid = emit_feature_table(tables, schema);
        io::write_file(out_dir / "table1.md", grid.markdown);
        io::write_file(out_dir / "table1.csv", grid.csv);
    }
    for (const auto& t : tables) {
        io::write_file(out_dir / ("metrics_" + t.label + ".csv"), metric_table_csv(t));
        io::write_file(out_dir / ("metrics_" + t.label + ".json"), to_json(t).dump(2) + "\n");
        io::write_file(out_dir / ("fig3_" + t.label + ".csv"), emit_scatter_data(t));
    }
    io::write_file(out_dir / "missing.csv", emit_missing_table(sets, schema));
    if (comparison) {
        const auto grid = emit_comparison(*comparison);
        io::write_file(out_dir / "comparison.md", grid.markdown);
        io::write_file(out_dir / "comparison.csv", grid.csv);
    }
}

}  // namespace clinex
