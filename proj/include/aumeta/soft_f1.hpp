#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aumeta/errors.hpp"
#include "aumeta/grid.hpp"
#include "aumeta/labels.hpp"

namespace aumeta::loss {

struct SoftF1Config {
    /// Denominator stabilizer: soft F1 = 2T / (S + epsilon). Numerator is
    /// left exact so a perfect prediction lands within epsilon of loss 0.
    double epsilon = 1e-7;
    /// Drop classes whose masked batch has no positive labels from the batch
    /// mean. Their soft F1 is pinned near 0 no matter what the model says,
    /// which only injects noise into the gradient.
    bool skip_empty_classes = true;
};

struct LossResult {
    double loss = 0.0;
    /// Same shape as the prediction matrix; exactly 0 at Unknown positions.
    Grid<double> gradient{0, 0, 0.0};
    /// Classes scored in this batch; skipped ones are absent.
    std::map<std::string, double> per_class_soft_f1;
    std::vector<std::string> batch_skipped_classes;
    /// Annotated positions per class in this batch. Masking makes batch
    /// composition drift; reporting the counts keeps that drift visible.
    std::map<std::string, std::size_t> annotated_counts;
};

namespace detail {

inline void validate_config(const SoftF1Config& config) {
    if (!(config.epsilon >= 0.0) || std::isnan(config.epsilon))
        throw ValidationError("epsilon must be non-negative");
}

inline void validate_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("probability outside [0,1]: " + std::to_string(p));
}

struct ClassTerms {
    double t = 0.0;        // sum of p*y over annotated positions
    double s = 0.0;        // sum of p + sum of y over annotated positions
    std::size_t annotated = 0;
    std::size_t positives = 0;
};

inline ClassTerms class_terms(const std::vector<double>& pred,
                              const std::vector<Ternary>& truth) {
    if (pred.size() != truth.size())
        throw ValidationError("soft F1: pred has " + std::to_string(pred.size()) +
                              " entries, truth has " + std::to_string(truth.size()));
    ClassTerms terms;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Ternary::Unknown) continue;
        validate_probability(pred[i]);
        const double y = truth[i] == Ternary::Displayed ? 1.0 : 0.0;
        terms.t += pred[i] * y;
        terms.s += pred[i] + y;
        ++terms.annotated;
        if (y > 0.0) ++terms.positives;
    }
    return terms;
}

}  // namespace detail

/// Soft F1 for one class over annotated positions: 2T / (S + epsilon) with
/// T = sum(p*y), S = sum(p) + sum(y). nullopt when the class is skipped:
/// nothing annotated, or no positives while skip_empty_classes is on.
inline std::optional<double> soft_class_f1(const std::vector<double>& pred,
                                           const std::vector<Ternary>& truth,
                                           const SoftF1Config& config = {}) {
    detail::validate_config(config);
    const auto terms = detail::class_terms(pred, truth);
    if (terms.annotated == 0) return std::nullopt;
    if (config.skip_empty_classes && terms.positives == 0) return std::nullopt;
    const double denom = terms.s + config.epsilon;
    if (denom == 0.0) return 0.0;  // only reachable at epsilon = 0 with all-zero column
    return 2.0 * terms.t / denom;
}

/// Loss L = 1 - mean(soft F1 over non-skipped classes) with its analytic
/// gradient. For class c with denominator D = S + epsilon:
///   d(softF1_c)/dp_j = 2 * (y_j * D - T) / D^2   for annotated j, else 0
///   dL/dp_j = -(1/K) * d(softF1_c)/dp_j          with K = scored class count
inline LossResult soft_f1_loss(const PredictionMatrix& pred, const LabelMatrix& truth,
                               const SoftF1Config& config = {}) {
    detail::validate_config(config);
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw ValidationError("shape mismatch: predictions are " + std::to_string(pred.rows()) +
                              "x" + std::to_string(pred.cols()) + ", truth is " +
                              std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));

    const std::size_t rows = pred.rows();
    const std::size_t cols = pred.cols();

    LossResult result;
    result.gradient = Grid<double>(rows, cols, 0.0);

    // First pass: per-class soft-F1 terms and the scored-class count K.
    std::vector<detail::ClassTerms> terms(cols);
    std::vector<bool> scored(cols, false);
    std::size_t k = 0;
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
        terms[c] = detail::class_terms(pred.column(c), truth.column(c));
        result.annotated_counts[truth.class_names()[c]] = terms[c].annotated;
        const bool skip = terms[c].annotated == 0 ||
                          (config.skip_empty_classes && terms[c].positives == 0);
        if (skip) {
            result.batch_skipped_classes.push_back(truth.class_names()[c]);
            continue;
        }
        scored[c] = true;
        ++k;
        const double denom = terms[c].s + config.epsilon;
        const double f1 = denom == 0.0 ? 0.0 : 2.0 * terms[c].t / denom;
        result.per_class_soft_f1[truth.class_names()[c]] = f1;
        f1_sum += f1;
    }
    if (k == 0)
        throw ValidationError("soft_f1_loss: every class is skipped, batch is unusable");

    result.loss = 1.0 - f1_sum / static_cast<double>(k);

    // Second pass: gradient columns. Unknown positions stay at the 0 fill.
    const double scale = -1.0 / static_cast<double>(k);
    for (std::size_t c = 0; c < cols; ++c) {
        if (!scored[c]) continue;
        const double denom = terms[c].s + config.epsilon;
        if (denom == 0.0) continue;  // soft F1 pinned at 0, flat in p
        const double inv_sq = 1.0 / (denom * denom);
        for (std::size_t r = 0; r < rows; ++r) {
            if (truth.at(r, c) == Ternary::Unknown) continue;
            const double y = truth.at(r, c) == Ternary::Displayed ? 1.0 : 0.0;
            result.gradient.at(r, c) = scale * 2.0 * (y * denom - terms[c].t) * inv_sq;
        }
    }
    return result;
}

/// Compare the analytic gradient against central differences at every
/// annotated position and return the worst relative discrepancy, where the
/// relative error is |analytic - fd| / max(1, |analytic|, |fd|). Positions
/// within `step` of the [0,1] bounds are excluded: they cannot take a
/// centered step without leaving the valid domain.
inline double finite_difference_check(const PredictionMatrix& pred, const LabelMatrix& truth,
                                      const SoftF1Config& config = {}, double step = 1e-6) {
    if (!(step > 0.0)) throw ValidationError("finite difference step must be positive");
    const LossResult base = soft_f1_loss(pred, truth, config);
    PredictionMatrix probe = pred;
    double worst = 0.0;
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            if (truth.at(r, c) == Ternary::Unknown) continue;
            const double p = pred.at(r, c);
            if (p - step < 0.0 || p + step > 1.0) continue;
            probe.set(r, c, p + step);
            const double up = soft_f1_loss(probe, truth, config).loss;
            probe.set(r, c, p - step);
            const double down = soft_f1_loss(probe, truth, config).loss;
            probe.set(r, c, p);
            const double fd = (up - down) / (2.0 * step);
            const double analytic = base.gradient.at(r, c);
            const double denom = std::max({1.0, std::abs(analytic), std::abs(fd)});
            worst = std::max(worst, std::abs(analytic - fd) / denom);
        }
    }
    return worst;
}

}  // namespace aumeta::loss
