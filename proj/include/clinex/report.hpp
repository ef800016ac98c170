#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "clinex/metrics.hpp"
#include "clinex/pipeline.hpp"
#include "clinex/schema.hpp"

namespace clinex {

struct GridArtifact {
    std::string markdown;
    std::string csv;
};

inline constexpr std::string_view kSummaryRowLabel = "Median [IQR1, IQR3]";

/// Per-feature macro-F1, one column per table, plus the median/IQR row.
/// Every maximum of a row is bolded in Markdown. Throws Error(SchemaMismatch)
/// or Error(EmptyInput).
GridArtifact emit_feature_table(std::span<const MetricTable> tables, const FeatureSchema& schema);

/// feature_id,sensitivity,specificity; 13 rows, nulls empty.
std::string emit_scatter_data(const MetricTable& table);

/// One row per prediction set: field-granular missing counts per feature,
/// their total, and the number of transcripts with any missing field.
std::string emit_missing_table(std::span<const PredictionSet> sets, const FeatureSchema& schema);

GridArtifact emit_comparison(const VariantComparison& comparison);

/// Writes table1.{md,csv}, metrics_<label>.{csv,json}, fig3_<label>.csv,
/// missing.csv and, when given, comparison.{md,csv} under out_dir.
void write_report(const std::filesystem::path& out_dir, std::span<const MetricTable> tables,
                  std::span<const PredictionSet> sets, const FeatureSchema& schema,
                  const VariantComparison* comparison);

}  // namespace clinex
