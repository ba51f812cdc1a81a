#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aumeta/errors.hpp"
#include "aumeta/grid.hpp"
#include "aumeta/labels.hpp"
#include "aumeta/metrics.hpp"
#include "aumeta/rng.hpp"
#include "aumeta/soft_f1.hpp"

namespace aumeta::trainer {

/// Linear layer plus per-class bias behind a sigmoid. Deliberately tiny:
/// it exists to demonstrate that the masked loss drives learning, not to
/// model images.
struct ToyModel {
    Grid<double> weights{0, 0, 0.0};  // features x classes
    std::vector<double> bias;         // per class
    std::vector<std::string> class_names;

    static ToyModel zeros(std::size_t features, std::vector<std::string> names) {
        validate_class_names(names);
        if (names.empty()) throw ValidationError("model needs at least one class");
        ToyModel m;
        m.weights = Grid<double>(features, names.size(), 0.0);
        m.bias.assign(names.size(), 0.0);
        m.class_names = std::move(names);
        return m;
    }

    bool operator==(const ToyModel&) const = default;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    // Adam with the AMSGrad max-of-second-moment correction; canonical
    // constants of the method.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double validation_fraction = 0.2;
    loss::SoftF1Config loss;
    double threshold = 0.5;  // binarization for validation metrics
};

struct EpochStats {
    double train_loss = 0.0;
    metrics::MetricReport validation;
    double selection_score = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> history;
    /// Epoch with the highest selection score, earliest on ties; empty when
    /// no epoch ran.
    std::optional<std::size_t> best_epoch;
    ToyModel best_model;
};

namespace detail {

/// Numerically stable logistic, clamped strictly inside (0,1) so saturated
/// logits cannot produce an exact 0 or 1 probability.
inline double sigmoid(double z) noexcept {
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    static const double lo = std::nextafter(0.0, 1.0);
    static const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(p, lo, hi);
}

}  // namespace detail

/// sigmoid(X W + b) row by row.
inline PredictionMatrix predict(const ToyModel& model, const Grid<double>& features) {
    if (features.cols() != model.weights.rows())
        throw ValidationError("feature width " + std::to_string(features.cols()) +
                              " does not match model input width " +
                              std::to_string(model.weights.rows()));
    PredictionMatrix out(model.class_names, features.rows(), 0.5);
    for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto x = features.row(r);
        for (std::size_t c = 0; c < model.weights.cols(); ++c) {
            double z = model.bias[c];
            for (std::size_t f = 0; f < x.size(); ++f) z += x[f] * model.weights.at(f, c);
            out.set(r, c, detail::sigmoid(z));
        }
    }
    return out;
}

/// Synthetic stand-in for the real annotation corpora: per-class random-sign
/// hyperplanes through the origin, features uniform in [-10,10] rejected
/// until every class margin is at least 2.5, labels by hyperplane side, then
/// a noise flip and an Unknown mask applied cell-wise.
///
/// Geometry, features, noise, and mask each draw from their own sub-stream
/// of the seed, so datasets that differ only in `missingness` share
/// bit-identical features and pre-mask labels. The margin keeps the task
/// cleanly learnable within a short optimization budget: sign-pattern
/// hyperplanes are exactly what an adaptive-gradient method recovers first,
/// and the wide feature scale keeps the loss's bias drift small relative to
/// the logits.
inline std::pair<Grid<double>, LabelMatrix> synth_dataset(std::uint64_t seed,
                                                          std::size_t samples,
                                                          std::size_t features,
                                                          std::size_t classes,
                                                          double missingness, double noise) {
    if (samples == 0 || features == 0 || classes == 0)
        throw ValidationError("synth_dataset needs samples, features and classes all >= 1");
    if (!(missingness >= 0.0 && missingness < 1.0))
        throw ValidationError("missingness must lie in [0,1)");
    if (!(noise >= 0.0 && noise <= 1.0))
        throw ValidationError("noise must lie in [0,1]");

    constexpr double kScale = 10.0;
    constexpr double kMargin = 2.5;

    SplitMix64 base(seed);
    SplitMix64 rg(base.next());  // hyperplane geometry
    SplitMix64 rx(base.next());  // feature coordinates
    SplitMix64 rn(base.next());  // label noise
    SplitMix64 rm(base.next());  // unknown mask

    Grid<double> planes(classes, features, 0.0);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t f = 0; f < features; ++f)
            planes.at(c, f) = rg.uniform() < 0.5 ? 1.0 : -1.0;

    Grid<double> x(samples, features, 0.0);
    std::vector<double> row(features);
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt == 100000)
                throw ValidationError("margin rejection failed; geometry is degenerate");
            for (std::size_t f = 0; f < features; ++f)
                row[f] = kScale * (2.0 * rx.uniform() - 1.0);
            bool ok = true;
            for (std::size_t c = 0; c < classes && ok; ++c) {
                double dot = 0.0;
                for (std::size_t f = 0; f < features; ++f) dot += planes.at(c, f) * row[f];
                ok = std::abs(dot) >= kMargin;
            }
            if (ok) break;
        }
        for (std::size_t f = 0; f < features; ++f) x.at(i, f) = row[f];
    }

    std::vector<std::string> names;
    names.reserve(classes);
    std::size_t width = 2;
    for (std::size_t v = classes > 0 ? classes - 1 : 0; v >= 100; v /= 10) ++width;
    for (std::size_t c = 0; c < classes; ++c) {
        std::string digits = std::to_string(c);
        names.push_back("c" + std::string(width - digits.size(), '0') + digits);
    }

    LabelMatrix labels(names, samples);
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t c = 0; c < classes; ++c) {
            double dot = 0.0;
            for (std::size_t f = 0; f < features; ++f) dot += planes.at(c, f) * x.at(i, f);
            labels.set(i, c, dot >= 0.0 ? Ternary::Displayed : Ternary::NotDisplayed);
        }
    }
    for (std::size_t i = 0; i < samples; ++i)
        for (std::size_t c = 0; c < classes; ++c)
            if (rn.uniform() < noise)
                labels.set(i, c, labels.at(i, c) == Ternary::Displayed ? Ternary::NotDisplayed
                                                                       : Ternary::Displayed);
    for (std::size_t i = 0; i < samples; ++i)
        for (std::size_t c = 0; c < classes; ++c)
            if (rm.uniform() < missingness) labels.set(i, c, Ternary::Unknown);

    return {std::move(x), std::move(labels)};
}

namespace detail {

struct AdamState {
    std::vector<double> m, v, vmax;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0), vmax(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad,
              const TrainConfig& cfg, std::size_t t) {
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            vmax[i] = std::max(vmax[i], v[i]);
            const double mhat = m[i] / bc1;
            const double vhat = vmax[i] / bc2;
            params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
};

inline std::vector<std::size_t> shuffled_indices(SplitMix64& rng, std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    return idx;
}

}  // namespace detail

/// Minibatch training with the masked soft-F1 loss. Fully deterministic:
/// one seeded generator drives the validation split and then every epoch's
/// shuffle, single-threaded, fixed summation order. Batches where the loss
/// skips every class (possible under heavy masking) are passed over without
/// an optimizer step.
inline TrainReport fit(ToyModel model, const Grid<double>& features, const LabelMatrix& labels,
                       const TrainConfig& config) {
    if (features.rows() != labels.rows())
        throw ValidationError("feature rows " + std::to_string(features.rows()) +
                              " do not match label rows " + std::to_string(labels.rows()));
    if (features.cols() != model.weights.rows())
        throw ValidationError("feature width does not match model input width");
    if (labels.class_names() != model.class_names)
        throw ValidationError("label classes do not match model classes");
    if (!(config.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (config.batch_size == 0) throw ValidationError("batch_size must be at least 1");
    if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0))
        throw ValidationError("validation_fraction must lie strictly inside (0,1)");

    bool any_annotated = false;
    for (std::size_t r = 0; r < labels.rows() && !any_annotated; ++r)
        for (std::size_t c = 0; c < labels.cols() && !any_annotated; ++c)
            any_annotated = labels.at(r, c) != Ternary::Unknown;
    if (!any_annotated) throw ValidationError("training set is entirely Unknown");

    const std::size_t n = features.rows();
    const std::size_t n_features = features.cols();
    const std::size_t n_classes = labels.cols();

    // Salted so the trainer's stream never collides with a generator that
    // was handed the same seed.
    SplitMix64 rng(config.seed ^ 0x5EEDULL);
    const auto order = detail::shuffled_indices(rng, n);
    const auto n_val = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * config.validation_fraction));
    if (n_val == 0 || n_val >= n)
        throw ValidationError("validation split leaves an empty side at " +
                              std::to_string(n) + " samples");
    const std::vector<std::size_t> val_idx(order.begin(),
                                           order.begin() + static_cast<std::ptrdiff_t>(n_val));
    const std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                                             order.end());

    Grid<double> val_features(n_val, n_features, 0.0);
    LabelMatrix val_labels(labels.class_names(), n_val);
    for (std::size_t r = 0; r < n_val; ++r) {
        for (std::size_t f = 0; f < n_features; ++f)
            val_features.at(r, f) = features.at(val_idx[r], f);
        for (std::size_t c = 0; c < n_classes; ++c)
            val_labels.set(r, c, labels.at(val_idx[r], c));
    }

    detail::AdamState adam_w(n_features * n_classes);
    detail::AdamState adam_b(n_classes);
    std::vector<double> flat_w(n_features * n_classes, 0.0);
    for (std::size_t f = 0; f < n_features; ++f)
        for (std::size_t c = 0; c < n_classes; ++c)
            flat_w[f * n_classes + c] = model.weights.at(f, c);
    std::size_t t = 0;

    TrainReport report;
    report.best_model = model;
    double best_score = -1.0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto perm = detail::shuffled_indices(rng, train_idx.size());
        double loss_sum = 0.0;
        std::size_t trained_batches = 0;

        for (std::size_t start = 0; start < perm.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, perm.size() - start);
            Grid<double> xb(count, n_features, 0.0);
            LabelMatrix yb(labels.class_names(), count);
            for (std::size_t r = 0; r < count; ++r) {
                const std::size_t src = train_idx[perm[start + r]];
                for (std::size_t f = 0; f < n_features; ++f) xb.at(r, f) = features.at(src, f);
                for (std::size_t c = 0; c < n_classes; ++c) yb.set(r, c, labels.at(src, c));
            }

            const PredictionMatrix p = predict(model, xb);
            loss::LossResult batch;
            try {
                batch = loss::soft_f1_loss(p, yb, config.loss);
            } catch (const ValidationError&) {
                continue;  // every class skipped in this batch; nothing to learn from
            }

            // Backprop through the sigmoid: dZ = dP * p * (1-p), then the
            // linear layer: gW = X^T dZ, gb = column sums of dZ.
            Grid<double> dz(count, n_classes, 0.0);
            for (std::size_t r = 0; r < count; ++r)
                for (std::size_t c = 0; c < n_classes; ++c) {
                    const double pv = p.at(r, c);
                    dz.at(r, c) = batch.gradient.at(r, c) * pv * (1.0 - pv);
                }
            std::vector<double> gw(n_features * n_classes, 0.0);
            std::vector<double> gb(n_classes, 0.0);
            for (std::size_t r = 0; r < count; ++r)
                for (std::size_t c = 0; c < n_classes; ++c) {
                    const double d = dz.at(r, c);
                    gb[c] += d;
                    for (std::size_t f = 0; f < n_features; ++f)
                        gw[f * n_classes + c] += xb.at(r, f) * d;
                }

            ++t;
            adam_w.step(flat_w, gw, config, t);
            adam_b.step(model.bias, gb, config, t);
            for (std::size_t f = 0; f < n_features; ++f)
                for (std::size_t c = 0; c < n_classes; ++c)
                    model.weights.at(f, c) = flat_w[f * n_classes + c];

            loss_sum += batch.loss;
            ++trained_batches;
        }
        if (trained_batches == 0)
            throw ValidationError("no usable batch in epoch " + std::to_string(epoch) +
                                  "; training labels are too sparse");

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(trained_batches);
        const PredictionMatrix val_pred = predict(model, val_features);
        stats.validation =
            metrics::evaluate(val_labels, metrics::binarize(val_pred, config.threshold));
        stats.selection_score = stats.validation.selection_score;
        report.history.push_back(std::move(stats));

        if (report.history.back().selection_score > best_score) {
            best_score = report.history.back().selection_score;
            report.best_epoch = epoch;
            report.best_model = model;
        }
    }
    return report;
}

}  // namespace aumeta::trainer
