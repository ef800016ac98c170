#pragma once

#include <cstdint>
#include <optional>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/rational.hpp>

#include "clinex/metrics.hpp"

// Reference implementations written directly from the metric definitions,
// sharing no code with the library.
namespace clinex::oracle {

using Big = boost::multiprecision::cpp_bin_float_100;
using Rational = boost::rational<std::int64_t>;

/// (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)) at 100 decimal digits;
/// nullopt when the product under the root is zero.
inline std::optional<Big> mcc(const ConfusionMatrix& cm) {
    const Big tp(cm.tp), tn(cm.tn), fp(cm.fp), fn(cm.fn);
    const Big product = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (product == 0) return std::nullopt;
    return (tp * tn - fp * fn) / boost::multiprecision::sqrt(product);
}

inline std::optional<Rational> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

/// Harmonic mean of per-class precision and recall; 0 when either is
/// undefined or both are zero.
inline Rational class_f1(std::uint64_t hits, std::uint64_t false_claims, std::uint64_t misses) {
    const auto p = ratio(hits, hits + false_claims);
    const auto r = ratio(hits, hits + misses);
    if (!p || !r || (*p + *r) == Rational(0)) return Rational(0);
    return Rational(2) * *p * *r / (*p + *r);
}

/// Positive class: hits tp, false claims fp, misses fn. Negative class:
/// hits tn, false claims fn, misses fp.
inline Rational macro_f1(const ConfusionMatrix& cm) {
    return (class_f1(cm.tp, cm.fp, cm.fn) + class_f1(cm.tn, cm.fn, cm.fp)) / Rational(2);
}

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

}  // namespace clinex::oracle
