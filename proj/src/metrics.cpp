#include "clinex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "clinex/csv.hpp"
#include "clinex/format.hpp"

namespace clinex {

using nlohmann::json;

namespace {

MetricValue ratio(MetricKind kind, std::uint64_t num, std::uint64_t den) {
    if (den == 0) return {kind, std::nullopt, false};
    return {kind, static_cast<double>(num) / static_cast<double>(den), false};
}

// Drops trailing zeros after rounding: 38 -> "38", 38.5 -> "38.5".
std::string format_count(double v) {
    std::string s = format3(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

json summary_json(const std::optional<Summary>& s) {
    if (!s) return nullptr;
    return {{"median", s->median}, {"q1", s->q1}, {"q3", s->q3}, {"n", s->n}};
}

std::optional<Summary> summary_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return Summary{j.at("median").get<double>(), j.at("q1").get<double>(), j.at("q3").get<double>(),
                   j.at("n").get<std::size_t>()};
}

std::optional<Summary> summarize_if_any(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    return summarize_median_iqr(values);
}

}  // namespace

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::sensitivity: return "sensitivity";
        case MetricKind::specificity: return "specificity";
        case MetricKind::precision: return "precision";
        case MetricKind::macro_f1: return "macro_f1";
        case MetricKind::mcc: return "mcc";
    }
    return "accuracy";
}

MetricValue accuracy(const ConfusionMatrix& cm) { return ratio(MetricKind::accuracy, cm.tp + cm.tn, cm.total()); }
MetricValue sensitivity(const ConfusionMatrix& cm) { return ratio(MetricKind::sensitivity, cm.tp, cm.tp + cm.fn); }
MetricValue specificity(const ConfusionMatrix& cm) { return ratio(MetricKind::specificity, cm.tn, cm.tn + cm.fp); }
MetricValue precision(const ConfusionMatrix& cm) { return ratio(MetricKind::precision, cm.tp, cm.tp + cm.fp); }

MetricValue macro_f1(const ConfusionMatrix& cm) {
    using u128 = unsigned __int128;
    MetricValue out{MetricKind::macro_f1, 0.0, false};
    // Each class F1 is 2h / (2h + errors); a zero denominator counts as 0.
    // The mean is formed as one fraction so the result is correctly rounded.
    u128 num_pos = 2 * static_cast<u128>(cm.tp);
    u128 den_pos = num_pos + cm.fp + cm.fn;
    u128 num_neg = 2 * static_cast<u128>(cm.tn);
    u128 den_neg = num_neg + cm.fp + cm.fn;
    if (den_pos == 0) {
        out.degenerate = true;
        num_pos = 0;
        den_pos = 1;
    }
    if (den_neg == 0) {
        out.degenerate = true;
        num_neg = 0;
        den_neg = 1;
    }
    const u128 numerator = num_pos * den_neg + num_neg * den_pos;
    const u128 denominator = 2 * den_pos * den_neg;
    constexpr u128 kExact = u128{1} << 53;
    if (numerator < kExact && denominator < kExact) {
        out.value = static_cast<double>(numerator) / static_cast<double>(denominator);
    } else {
        out.value = static_cast<double>(static_cast<long double>(numerator) / static_cast<long double>(denominator));
    }
    return out;
}

MetricValue mcc(const ConfusionMatrix& cm) {
    using i128 = __int128;
    using u128 = unsigned __int128;
    const std::uint64_t a = cm.tp + cm.fp;
    const std::uint64_t b = cm.tp + cm.fn;
    const std::uint64_t c = cm.tn + cm.fp;
    const std::uint64_t d = cm.tn + cm.fn;
    if (a == 0 || b == 0 || c == 0 || d == 0) return {MetricKind::mcc, 0.0, true};

    const i128 numerator = static_cast<i128>(cm.tp) * cm.tn - static_cast<i128>(cm.fp) * cm.fn;
    const u128 left = static_cast<u128>(a) * b;
    const u128 right = static_cast<u128>(c) * d;
    const long double denominator =
        std::sqrt(static_cast<long double>(left)) * std::sqrt(static_cast<long double>(right));
    const long double value = static_cast<long double>(numerator) / denominator;
    return {MetricKind::mcc, static_cast<double>(std::clamp(value, -1.0L, 1.0L)), false};
}

MetricValue compute(MetricKind kind, const ConfusionMatrix& cm) {
    switch (kind) {
        case MetricKind::accuracy: return accuracy(cm);
        case MetricKind::sensitivity: return sensitivity(cm);
        case MetricKind::specificity: return specificity(cm);
        case MetricKind::precision: return precision(cm);
        case MetricKind::macro_f1: return macro_f1(cm);
        case MetricKind::mcc: return mcc(cm);
    }
    return accuracy(cm);
}

Summary summarize_median_iqr(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "median/IQR of an empty list");
    std::vector<double> sorted(values.begin(), values.end());
    std::ranges::sort(sorted);
    auto quantile = [&](double q) {
        const double rank = static_cast<double>(sorted.size() - 1) * q;
        const auto lo = static_cast<std::size_t>(std::floor(rank));
        const auto hi = static_cast<std::size_t>(std::ceil(rank));
        return sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - static_cast<double>(lo));
    };
    return Summary{quantile(0.5), quantile(0.25), quantile(0.75), sorted.size()};
}

std::string format_summary(const Summary& s) {
    return format3(s.median) + " [" + format3(s.q1) + ", " + format3(s.q3) + "]";
}

MetricTable evaluate_run(std::span<const BinaryFeatureVector> predictions, const AnnotationTable& truth,
                         const FeatureSchema& schema, std::string label) {
    if (predictions.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to evaluate");
    if (!truth.schema_digest.empty() && truth.schema_digest != schema.digest()) {
        throw Error(ErrorKind::SchemaMismatch, "ground truth was loaded with a different schema");
    }

    std::vector<const LabelVector*> actual;
    actual.reserve(predictions.size());
    std::set<std::string> seen;
    for (const auto& p : predictions) {
        auto it = truth.rows.find(p.transcript_id);
        if (it == truth.rows.end()) {
            throw Error(ErrorKind::UnknownTranscript, "no ground truth for \"" + p.transcript_id + "\"");
        }
        if (!seen.insert(p.transcript_id).second) {
            throw Error(ErrorKind::DuplicateId, "prediction for \"" + p.transcript_id + "\" appears twice");
        }
        actual.push_back(&it->second);
    }

    MetricTable table;
    table.label = std::move(label);
    table.schema_digest = schema.digest();
    table.transcripts = predictions.size();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        FeatureMetrics fm;
        fm.feature_id = schema[i].id;
        std::vector<bool> pred(predictions.size());
        std::vector<bool> gold(predictions.size());
        for (std::size_t n = 0; n < predictions.size(); ++n) {
            pred[n] = predictions[n].values[i];
            gold[n] = (*actual[n])[i];
            if (predictions[n].missing_mask[i]) ++fm.missing_fields;
        }
        fm.cm = confusion(pred, gold);
        for (std::size_t k = 0; k < kMetricKinds.size(); ++k) fm.values[k] = compute(kMetricKinds[k], fm.cm);
        table.missing_fields_total += fm.missing_fields;
        table.features.push_back(std::move(fm));
    }
    for (const auto& p : predictions) {
        if (std::ranges::any_of(p.missing_mask, [](bool m) { return m; })) ++table.transcripts_with_missing;
    }

    for (std::size_t k = 0; k < kMetricKinds.size(); ++k) {
        std::vector<double> defined;
        for (const auto& fm : table.features) {
            if (fm.values[k].value) defined.push_back(*fm.values[k].value);
        }
        table.summary[k] = summarize_if_any(defined);
    }
    std::vector<double> missing;
    for (const auto& fm : table.features) missing.push_back(static_cast<double>(fm.missing_fields));
    table.missing_summary = summarize_if_any(missing);
    return table;
}

json to_json(const MetricTable& table) {
    json features = json::array();
    for (const auto& fm : table.features) {
        json metrics = json::object();
        for (const auto& v : fm.values) {
            metrics[std::string(to_string(v.kind))] = {{"value", v.value ? json(*v.value) : json(nullptr)},
                                                       {"degenerate", v.degenerate}};
        }
        features.push_back({{"feature_id", fm.feature_id},
                            {"tp", fm.cm.tp},
                            {"tn", fm.cm.tn},
                            {"fp", fm.cm.fp},
                            {"fn", fm.cm.fn},
                            {"missing_fields", fm.missing_fields},
                            {"metrics", metrics}});
    }
    json summary = json::object();
    for (std::size_t k = 0; k < kMetricKinds.size(); ++k) {
        summary[std::string(to_string(kMetricKinds[k]))] = summary_json(table.summary[k]);
    }
    return {{"label", table.label},
            {"schema_digest", table.schema_digest},
            {"transcripts", table.transcripts},
            {"missing_fields_total", table.missing_fields_total},
            {"transcripts_with_missing", table.transcripts_with_missing},
            {"features", features},
            {"summary", summary},
            {"missing_summary", summary_json(table.missing_summary)}};
}

MetricTable metric_table_from_json(const json& doc) {
    try {
        MetricTable table;
        table.label = doc.at("label").get<std::string>();
        table.schema_digest = doc.at("schema_digest").get<std::string>();
        table.transcripts = doc.at("transcripts").get<std::uint64_t>();
        table.missing_fields_total = doc.at("missing_fields_total").get<std::uint64_t>();
        table.transcripts_with_missing = doc.at("transcripts_with_missing").get<std::uint64_t>();
        for (const auto& f : doc.at("features")) {
            FeatureMetrics fm;
            fm.feature_id = f.at("feature_id").get<std::string>();
            fm.cm = {f.at("tp").get<std::uint64_t>(), f.at("tn").get<std::uint64_t>(), f.at("fp").get<std::uint64_t>(),
                     f.at("fn").get<std::uint64_t>()};
            fm.missing_fields = f.at("missing_fields").get<std::uint64_t>();
            for (std::size_t k = 0; k < kMetricKinds.size(); ++k) {
                const auto& m = f.at("metrics").at(std::string(to_string(kMetricKinds[k])));
                fm.values[k].kind = kMetricKinds[k];
                if (!m.at("value").is_null()) fm.values[k].value = m.at("value").get<double>();
                fm.values[k].degenerate = m.at("degenerate").get<bool>();
            }
            table.features.push_back(std::move(fm));
        }
        if (table.features.size() != kFeatureCount) {
            throw Error(ErrorKind::SchemaMismatch, "metric table has " + std::to_string(table.features.size()) + " features");
        }
        for (std::size_t k = 0; k < kMetricKinds.size(); ++k) {
            table.summary[k] = summary_from_json(doc.at("summary").at(std::string(to_string(kMetricKinds[k]))));
        }
        table.missing_summary = summary_from_json(doc.at("missing_summary"));
        return table;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedRecord, std::string("metric table JSON: ") + e.what());
    }
}

std::string metric_table_csv(const MetricTable& table) {
    std::vector<std::string> header = {"feature_id", "tp", "tn", "fp", "fn"};
    for (const auto kind : kMetricKinds) header.emplace_back(to_string(kind));
    header.emplace_back("missing_fields");
    std::string out = csv::join(header) + "\n";
    for (const auto& fm : table.features) {
        std::vector<std::string> row = {fm.feature_id, std::to_string(fm.cm.tp), std::to_string(fm.cm.tn),
                                        std::to_string(fm.cm.fp), std::to_string(fm.cm.fn)};
        for (const auto& v : fm.values) row.push_back(format3(v.value));
        row.push_back(std::to_string(fm.missing_fields));
        out += csv::join(row) + "\n";
    }
    std::vector<std::string> summary = {"Median [IQR1, IQR3]", "", "", "", ""};
    for (const auto& s : table.summary) summary.push_back(s ? format_summary(*s) : "");
    if (table.missing_summary) {
        const auto& m = *table.missing_summary;
        summary.push_back(format_count(m.median) + " [" + format_count(m.q1) + ", " + format_count(m.q3) + "]");
    } else {
        summary.emplace_back();
    }
    out += csv::join(summary) + "\n";
    return out;
}

}  // namespace clinex
