#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aumeta/errors.hpp"
#include "aumeta/labels.hpp"

namespace aumeta::metrics {

/// Per-class confusion counts over annotated positions only. Cells whose
/// ground truth is Unknown contribute to none of the four counts.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t annotated() const noexcept { return tp + fp + fn + tn; }

    bool operator==(const ConfusionCounts&) const = default;
};

/// Per-class positive-occurrence counts from a reference split, used to
/// weight the macro F1 toward frequently displayed classes.
struct OccurrenceWeights {
    std::map<std::string, std::size_t> counts;
};

struct MetricReport {
    std::vector<std::string> class_names;
    /// Per class: F1 over annotated positions, or nullopt when the class had
    /// zero annotated positions and was skipped.
    std::vector<std::optional<double>> per_class_f1;
    std::vector<std::optional<double>> per_class_accuracy;
    std::vector<std::string> skipped_classes;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> weighted_macro_f1;
    double selection_score = 0.0;
};

/// Drop every position whose ground truth is Unknown, preserving order.
/// Metrics and losses only ever see the columns this returns.
template <typename V>
inline std::pair<std::vector<int>, std::vector<V>> mask_class(const std::vector<Ternary>& truth,
                                                              const std::vector<V>& values) {
    if (truth.size() != values.size())
        throw ValidationError("mask_class: truth has " + std::to_string(truth.size()) +
                              " entries, values has " + std::to_string(values.size()));
    std::pair<std::vector<int>, std::vector<V>> out;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Ternary::Unknown) continue;
        out.first.push_back(truth[i] == Ternary::Displayed ? 1 : 0);
        out.second.push_back(values[i]);
    }
    return out;
}

inline void validate_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError("threshold must lie strictly inside (0,1), got " +
                              std::to_string(threshold));
}

/// value >= threshold maps to 1, below to 0.
inline std::vector<int> binarize(const std::vector<double>& values, double threshold = 0.5) {
    validate_threshold(threshold);
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(v >= threshold ? 1 : 0);
    return out;
}

inline BinaryMatrix binarize(const PredictionMatrix& pred, double threshold = 0.5) {
    validate_threshold(threshold);
    BinaryMatrix out(pred.rows(), pred.cols(), 0);
    for (std::size_t r = 0; r < pred.rows(); ++r)
        for (std::size_t c = 0; c < pred.cols(); ++c)
            out.at(r, c) = pred.at(r, c) >= threshold ? 1 : 0;
    return out;
}

inline ConfusionCounts confusion_counts(const std::vector<Ternary>& truth,
                                        const std::vector<int>& pred) {
    if (truth.size() != pred.size())
        throw ValidationError("confusion_counts: truth has " + std::to_string(truth.size()) +
                              " entries, pred has " + std::to_string(pred.size()));
    ConfusionCounts k;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Ternary::Unknown) continue;
        const bool positive = truth[i] == Ternary::Displayed;
        const bool predicted = pred[i] != 0;
        if (positive && predicted) ++k.tp;
        else if (!positive && predicted) ++k.fp;
        else if (positive && !predicted) ++k.fn;
        else ++k.tn;
    }
    return k;
}

/// F1 from confusion counts; 0 when precision+recall is undefined or zero,
/// nullopt when the class had no annotated positions at all.
inline std::optional<double> f1_from_counts(const ConfusionCounts& k) {
    if (k.annotated() == 0) return std::nullopt;
    const std::size_t denom = 2 * k.tp + k.fp + k.fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(k.tp) / static_cast<double>(denom);
}

inline std::optional<double> accuracy_from_counts(const ConfusionCounts& k) {
    if (k.annotated() == 0) return std::nullopt;
    return static_cast<double>(k.tp + k.tn) / static_cast<double>(k.annotated());
}

/// Per-class F1 over annotated positions; nullopt means skipped (nothing
/// annotated for this class).
inline std::optional<double> class_f1(const std::vector<Ternary>& truth,
                                      const std::vector<int>& pred) {
    return f1_from_counts(confusion_counts(truth, pred));
}

namespace detail {

inline void check_shapes(const LabelMatrix& truth, const BinaryMatrix& pred) {
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
        throw ValidationError("shape mismatch: truth is " + std::to_string(truth.rows()) + "x" +
                              std::to_string(truth.cols()) + ", predictions are " +
                              std::to_string(pred.rows()) + "x" + std::to_string(pred.cols()));
}

inline double mean_over_scored(const std::vector<std::optional<double>>& per_class,
                               const char* what) {
    double sum = 0.0;
    std::size_t scored = 0;
    for (const auto& v : per_class) {
        if (!v) continue;
        sum += *v;
        ++scored;
    }
    if (scored == 0)
        throw ValidationError(std::string(what) + ": every class is skipped (nothing annotated)");
    return sum / static_cast<double>(scored);
}

}  // namespace detail

inline std::vector<std::optional<double>> per_class_f1(const LabelMatrix& truth,
                                                       const BinaryMatrix& pred) {
    detail::check_shapes(truth, pred);
    std::vector<std::optional<double>> out;
    out.reserve(truth.cols());
    for (std::size_t c = 0; c < truth.cols(); ++c)
        out.push_back(class_f1(truth.column(c), pred.column(c)));
    return out;
}

/// Unweighted mean F1 over classes with at least one annotated position.
inline double macro_f1(const LabelMatrix& truth, const BinaryMatrix& pred) {
    return detail::mean_over_scored(per_class_f1(truth, pred), "macro_f1");
}

inline std::vector<std::optional<double>> per_class_accuracy(const LabelMatrix& truth,
                                                             const BinaryMatrix& pred) {
    detail::check_shapes(truth, pred);
    std::vector<std::optional<double>> out;
    out.reserve(truth.cols());
    for (std::size_t c = 0; c < truth.cols(); ++c)
        out.push_back(accuracy_from_counts(confusion_counts(truth.column(c), pred.column(c))));
    return out;
}

/// Per-class accuracy over annotated positions, then unweighted mean over
/// the non-skipped classes (not pooled over cells).
inline double masked_accuracy(const LabelMatrix& truth, const BinaryMatrix& pred) {
    return detail::mean_over_scored(per_class_accuracy(truth, pred), "masked_accuracy");
}

/// Occurrence-weighted mean of per-class F1: sum(n_c * F1_c) / sum(n_c) over
/// scored classes. Skipped classes need no weight and contribute nothing.
inline double weighted_macro_f1(const std::vector<std::string>& class_names,
                                const std::vector<std::optional<double>>& per_class,
                                const OccurrenceWeights& weights) {
    if (class_names.size() != per_class.size())
        throw ValidationError("weighted_macro_f1: " + std::to_string(class_names.size()) +
                              " class names for " + std::to_string(per_class.size()) + " scores");
    double weighted_sum = 0.0;
    double total = 0.0;
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (!per_class[c]) continue;
        auto it = weights.counts.find(class_names[c]);
        if (it == weights.counts.end())
            throw ValidationError("no occurrence weight for scored class '" + class_names[c] +
                                  "'");
        weighted_sum += static_cast<double>(it->second) * *per_class[c];
        total += static_cast<double>(it->second);
    }
    if (total == 0.0)
        throw ValidationError("weighted_macro_f1: total occurrence weight is zero");
    return weighted_sum / total;
}

/// Model selection uses the plain mean of macro F1 and masked accuracy.
inline double selection_score(double macro_f1_value, double accuracy_value) {
    return 0.5 * (macro_f1_value + accuracy_value);
}

/// Full evaluation in one pass. Occurrence weights are optional; when given,
/// the weighted macro F1 is filled in.
inline MetricReport evaluate(const LabelMatrix& truth, const BinaryMatrix& pred,
                             const OccurrenceWeights* weights = nullptr) {
    MetricReport report;
    report.class_names = truth.class_names();
    report.per_class_f1 = per_class_f1(truth, pred);
    report.per_class_accuracy = per_class_accuracy(truth, pred);
    for (std::size_t c = 0; c < report.per_class_f1.size(); ++c)
        if (!report.per_class_f1[c]) report.skipped_classes.push_back(report.class_names[c]);
    report.macro_f1 = detail::mean_over_scored(report.per_class_f1, "macro_f1");
    report.accuracy = detail::mean_over_scored(report.per_class_accuracy, "masked_accuracy");
    if (weights != nullptr)
        report.weighted_macro_f1 =
            weighted_macro_f1(report.class_names, report.per_class_f1, *weights);
    report.selection_score = selection_score(report.macro_f1, report.accuracy);
    return report;
}

/// Table presentation rounds to two decimals, half away from zero; internal
/// values stay at full precision.
inline double round_for_display(double v) {
    const double scaled = v * 100.0;
    const double shifted = scaled < 0.0 ? scaled - 0.5 : scaled + 0.5;
    const double truncated = static_cast<double>(static_cast<long long>(shifted));
    return truncated / 100.0;
}

}  // namespace aumeta::metrics
