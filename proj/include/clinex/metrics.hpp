#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinex/corpus.hpp"
#include "clinex/error.hpp"
#include "clinex/parser.hpp"
#include "clinex/schema.hpp"

namespace clinex {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

template <std::ranges::sized_range P, std::ranges::sized_range T>
ConfusionMatrix confusion(const P& pred, const T& truth) {
    if (std::ranges::size(pred) != std::ranges::size(truth)) {
        throw Error(ErrorKind::LengthMismatch, "prediction and truth lengths differ");
    }
    if (std::ranges::size(pred) == 0) {
        throw Error(ErrorKind::EmptyInput, "confusion matrix over zero items");
    }
    ConfusionMatrix cm;
    auto t = std::ranges::begin(truth);
    for (const bool p : pred) {
        const bool actual = *t++;
        if (p && actual) ++cm.tp;
        else if (!p && !actual) ++cm.tn;
        else if (p) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

enum class MetricKind { accuracy, sensitivity, specificity, precision, macro_f1, mcc };

inline constexpr std::array<MetricKind, 6> kMetricKinds = {
    MetricKind::accuracy,  MetricKind::sensitivity, MetricKind::specificity,
    MetricKind::precision, MetricKind::macro_f1,    MetricKind::mcc};

std::string_view to_string(MetricKind kind);

struct MetricValue {
    MetricKind kind = MetricKind::accuracy;
    std::optional<double> value;  // nullopt: undefined for this matrix
    bool degenerate = false;      // a zero denominator was replaced by the 0 convention
};

MetricValue accuracy(const ConfusionMatrix& cm);
MetricValue sensitivity(const ConfusionMatrix& cm);
MetricValue specificity(const ConfusionMatrix& cm);
MetricValue precision(const ConfusionMatrix& cm);
/// Mean of positive- and negative-class F1. A class F1 with a zero
/// denominator counts as 0 and sets `degenerate`.
MetricValue macro_f1(const ConfusionMatrix& cm);
/// Matthews correlation. Numerator and denominator factors are formed in
/// exact 128-bit integers; 0.0 with `degenerate` when any factor is zero.
MetricValue mcc(const ConfusionMatrix& cm);

MetricValue compute(MetricKind kind, const ConfusionMatrix& cm);

struct Summary {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::size_t n = 0;
};

/// Quantile q taken at rank (n-1)q of the sorted values, interpolating
/// linearly between neighbours. Throws Error(EmptyInput).
Summary summarize_median_iqr(std::span<const double> values);

/// "0.899 [0.832, 0.908]"
std::string format_summary(const Summary& s);

struct FeatureMetrics {
    std::string feature_id;
    ConfusionMatrix cm;
    std::array<MetricValue, 6> values{};  // indexed like kMetricKinds
    std::uint64_t missing_fields = 0;     // predictions resolved from Missing

    const MetricValue& get(MetricKind kind) const { return values[static_cast<std::size_t>(kind)]; }
};

struct MetricTable {
    std::string label;  // model/variant column name
    std::string schema_digest;
    std::vector<FeatureMetrics> features;           // schema order, kFeatureCount entries
    std::array<std::optional<Summary>, 6> summary;  // per metric over non-null feature values
    std::optional<Summary> missing_summary;         // over per-feature missing counts
    std::uint64_t transcripts = 0;
    std::uint64_t missing_fields_total = 0;
    std::uint64_t transcripts_with_missing = 0;

    const std::optional<Summary>& summary_for(MetricKind kind) const {
        return summary[static_cast<std::size_t>(kind)];
    }
};

/// Throws Error(UnknownTranscript) for a prediction id absent from `truth`,
/// Error(DuplicateId) for repeated predictions, Error(EmptyInput) for none.
MetricTable evaluate_run(std::span<const BinaryFeatureVector> predictions,
                         const AnnotationTable& truth, const FeatureSchema& schema,
                         std::string label = {});

nlohmann::json to_json(const MetricTable& table);
MetricTable metric_table_from_json(const nlohmann::json& doc);

/// Rows: 13 features then "Median [IQR1, IQR3]"; columns: tp, tn, fp, fn,
/// six metrics, missing_fields. Three decimals, nulls empty.
std::string metric_table_csv(const MetricTable& table);

}  // namespace clinex
