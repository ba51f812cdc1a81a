#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "aumeta/io.hpp"
#include "aumeta/metrics.hpp"
#include "aumeta/rng.hpp"
#include "aumeta/soft_f1.hpp"
#include "aumeta/trainer.hpp"

using namespace aumeta;
using namespace aumeta::trainer;

namespace {

double dataset_missing_fraction(const LabelMatrix& labels) {
    std::size_t unknown = 0;
    for (std::size_t r = 0; r < labels.rows(); ++r)
        for (std::size_t c = 0; c < labels.cols(); ++c)
            if (labels.at(r, c) == Ternary::Unknown) ++unknown;
    return static_cast<double>(unknown) /
           static_cast<double>(labels.rows() * labels.cols());
}

}  // namespace

TEST_CASE("synthetic datasets are a pure function of their arguments") {
    const auto [x1, y1] = synth_dataset(7, 50, 4, 3, 0.3, 0.05);
    const auto [x2, y2] = synth_dataset(7, 50, 4, 3, 0.3, 0.05);
    CHECK(x1 == x2);
    CHECK(y1 == y2);

    const auto [x3, y3] = synth_dataset(8, 50, 4, 3, 0.3, 0.05);
    CHECK(x1.data() != x3.data());
}

TEST_CASE("synthetic class names are zero padded in axis order") {
    const auto [x, y] = synth_dataset(1, 3, 2, 3, 0.0, 0.0);
    (void)x;
    CHECK(y.class_names() == std::vector<std::string>{"c00", "c01", "c02"});
}

TEST_CASE("missingness 0 leaves no Unknown cells") {
    const auto [x, y] = synth_dataset(3, 200, 4, 3, 0.0, 0.1);
    (void)x;
    CHECK(dataset_missing_fraction(y) == 0.0);
}

TEST_CASE("the realized missing fraction tracks the requested rate") {
    // 10000 samples x 10 classes = 1e5 cells; the binomial standard error
    // is about 0.0015, so +-0.01 is a very safe band.
    const auto [x, y] = synth_dataset(13, 10000, 3, 10, 0.69, 0.0);
    (void)x;
    CHECK(std::abs(dataset_missing_fraction(y) - 0.69) <= 0.01);
}

TEST_CASE("datasets differing only in missingness share geometry") {
    const auto [x_full, y_full] = synth_dataset(21, 300, 5, 4, 0.0, 0.05);
    const auto [x_miss, y_miss] = synth_dataset(21, 300, 5, 4, 0.6, 0.05);
    CHECK(x_full == x_miss);
    for (std::size_t r = 0; r < y_full.rows(); ++r)
        for (std::size_t c = 0; c < y_full.cols(); ++c) {
            const Ternary masked = y_miss.at(r, c);
            if (masked != Ternary::Unknown) CHECK(masked == y_full.at(r, c));
        }
}

TEST_CASE("synth_dataset rejects degenerate parameters") {
    CHECK_THROWS_AS(synth_dataset(1, 0, 4, 3, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(synth_dataset(1, 10, 0, 3, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(synth_dataset(1, 10, 4, 0, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(synth_dataset(1, 10, 4, 3, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(synth_dataset(1, 10, 4, 3, -0.1, 0.0), ValidationError);
    CHECK_THROWS_AS(synth_dataset(1, 10, 4, 3, 0.0, 1.5), ValidationError);
    CHECK_THROWS_AS(synth_dataset(1, 10, 4, 3, 0.0, -0.1), ValidationError);
}

TEST_CASE("predict") {
    SECTION("the zero model is maximally unsure") {
        const auto model = ToyModel::zeros(3, {"a", "b"});
        Grid<double> x(2, 3, 1.0);
        const auto p = predict(model, x);
        for (std::size_t r = 0; r < p.rows(); ++r)
            for (std::size_t c = 0; c < p.cols(); ++c) CHECK(p.at(r, c) == 0.5);
    }
    SECTION("saturated logits stay strictly inside (0,1)") {
        auto model = ToyModel::zeros(1, {"a"});
        model.weights.at(0, 0) = 1000.0;
        Grid<double> x(2, 1, 0.0);
        x.at(0, 0) = 1.0;
        x.at(1, 0) = -1.0;
        const auto p = predict(model, x);
        CHECK(p.at(0, 0) > 0.99);
        CHECK(p.at(0, 0) < 1.0);
        CHECK(p.at(1, 0) < 0.01);
        CHECK(p.at(1, 0) > 0.0);
    }
    SECTION("feature width must match the model") {
        const auto model = ToyModel::zeros(3, {"a"});
        CHECK_THROWS_AS(predict(model, Grid<double>(2, 4, 0.0)), ValidationError);
    }
}

TEST_CASE("backpropagated parameter gradients match finite differences") {
    SplitMix64 rng(97);
    const std::size_t rows = 20, n_features = 5, n_classes = 3;
    const auto [x, y] = synth_dataset(31, rows, n_features, n_classes, 0.3, 0.05);

    auto model = ToyModel::zeros(n_features, y.class_names());
    for (std::size_t f = 0; f < n_features; ++f)
        for (std::size_t c = 0; c < n_classes; ++c)
            model.weights.at(f, c) = 0.1 * (2.0 * rng.uniform() - 1.0);
    for (auto& b : model.bias) b = 0.1 * (2.0 * rng.uniform() - 1.0);

    const loss::SoftF1Config loss_cfg;
    const auto loss_of = [&](const ToyModel& m) {
        return loss::soft_f1_loss(predict(m, x), y, loss_cfg).loss;
    };

    // Analytic parameter gradient, chained by hand from the loss gradient:
    // dz = dL/dp * p * (1 - p), gW = X^T dz, gb = column sums of dz.
    const auto p = predict(model, x);
    const auto base = loss::soft_f1_loss(p, y, loss_cfg);
    Grid<double> gw(n_features, n_classes, 0.0);
    std::vector<double> gb(n_classes, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double pv = p.at(r, c);
            const double dz = base.gradient.at(r, c) * pv * (1.0 - pv);
            gb[c] += dz;
            for (std::size_t f = 0; f < n_features; ++f) gw.at(f, c) += x.at(r, f) * dz;
        }

    const double h = 1e-6;
    double worst = 0.0;
    const auto track = [&](double analytic, double up, double down) {
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({1.0, std::abs(analytic), std::abs(fd)});
        worst = std::max(worst, std::abs(analytic - fd) / denom);
    };
    for (std::size_t f = 0; f < n_features; ++f)
        for (std::size_t c = 0; c < n_classes; ++c) {
            auto probe = model;
            probe.weights.at(f, c) = model.weights.at(f, c) + h;
            const double up = loss_of(probe);
            probe.weights.at(f, c) = model.weights.at(f, c) - h;
            track(gw.at(f, c), up, loss_of(probe));
        }
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto probe = model;
        probe.bias[c] = model.bias[c] + h;
        const double up = loss_of(probe);
        probe.bias[c] = model.bias[c] - h;
        track(gb[c], up, loss_of(probe));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("zero epochs return the initial model untouched") {
    const auto [x, y] = synth_dataset(5, 40, 3, 2, 0.2, 0.0);
    const auto model = ToyModel::zeros(3, y.class_names());
    TrainConfig cfg;
    cfg.epochs = 0;
    const auto report = fit(model, x, y, cfg);
    CHECK(report.history.empty());
    CHECK_FALSE(report.best_epoch.has_value());
    CHECK(report.best_model == model);
}

TEST_CASE("training is bit-for-bit deterministic") {
    const auto [x, y] = synth_dataset(9, 120, 4, 3, 0.4, 0.05);
    const auto model = ToyModel::zeros(4, y.class_names());
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.seed = 5;

    const auto a = fit(model, x, y, cfg);
    const auto b = fit(model, x, y, cfg);
    CHECK(io::model_to_string(a.best_model) == io::model_to_string(b.best_model));
    CHECK(io::train_report_to_json(a).dump() == io::train_report_to_json(b).dump());
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e)
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
}

TEST_CASE("the best epoch is the earliest selection-score argmax") {
    const auto [x, y] = synth_dataset(42, 300, 6, 3, 0.5, 0.05);
    const auto model = ToyModel::zeros(6, y.class_names());
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.seed = 42;
    const auto report = fit(model, x, y, cfg);
    REQUIRE(report.history.size() == 8);
    REQUIRE(report.best_epoch.has_value());

    std::size_t expected = 0;
    for (std::size_t e = 1; e < report.history.size(); ++e)
        if (report.history[e].selection_score > report.history[expected].selection_score)
            expected = e;
    CHECK(*report.best_epoch == expected);
    CHECK(report.history[*report.best_epoch].selection_score ==
          report.history[expected].selection_score);
}

TEST_CASE("training on the reference task recovers the hyperplanes") {
    const auto [x, y] = synth_dataset(42, 2000, 10, 4, 0.5, 0.02);
    const auto model = ToyModel::zeros(10, y.class_names());
    TrainConfig cfg;
    cfg.seed = 42;  // defaults otherwise: lr 1e-4, 30 epochs, batch 256
    const auto report = fit(model, x, y, cfg);
    REQUIRE(report.history.size() == 30);

    // Held-out macro F1 well clear of chance (~0.67 for balanced random).
    CHECK(report.history.back().validation.macro_f1 >= 0.95);
    REQUIRE(report.best_epoch.has_value());
    CHECK(report.history[*report.best_epoch].selection_score >= 0.95);

    // The loss trend points down: late epochs beat early ones on average.
    const auto& h = report.history;
    const double front = (h[0].train_loss + h[1].train_loss + h[2].train_loss) / 3.0;
    const double back = (h[27].train_loss + h[28].train_loss + h[29].train_loss) / 3.0;
    CHECK(back < front);
}

TEST_CASE("single-sample batches under heavy masking still make an epoch") {
    // With batch size 1 and 60% missingness many batches have no scorable
    // class and are skipped; the epoch must survive on the usable remainder.
    const auto [x, y] = synth_dataset(77, 60, 4, 4, 0.6, 0.0);
    const auto model = ToyModel::zeros(4, y.class_names());
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.seed = 3;
    const auto report = fit(model, x, y, cfg);
    REQUIRE(report.history.size() == 1);
    CHECK(std::isfinite(report.history[0].train_loss));
}

TEST_CASE("an all-Unknown training side is reported, not silently overfit") {
    // Two samples, one annotated. The split puts the annotated one either
    // in validation (leaving nothing to train on) or in training (leaving
    // nothing to validate); both are hard errors, with distinct messages.
    Grid<double> x(2, 2, 1.0);
    x.at(1, 0) = -1.0;
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.validation_fraction = 0.5;

    std::size_t failures = 0;
    std::size_t no_usable_batch = 0;
    for (std::size_t annotated_row = 0; annotated_row < 2; ++annotated_row) {
        LabelMatrix y({"a"}, 2);  // prefilled Unknown
        y.set(annotated_row, 0, Ternary::Displayed);
        try {
            fit(ToyModel::zeros(2, {"a"}), x, y, cfg);
        } catch (const ValidationError& e) {
            ++failures;
            if (std::string(e.what()).find("no usable batch") != std::string::npos)
                ++no_usable_batch;
        }
    }
    CHECK(failures == 2);
    CHECK(no_usable_batch == 1);
}

TEST_CASE("fit validates its inputs up front") {
    const auto [x, y] = synth_dataset(1, 20, 3, 2, 0.0, 0.0);
    const auto model = ToyModel::zeros(3, y.class_names());

    TrainConfig bad_lr;
    bad_lr.learning_rate = 0.0;
    CHECK_THROWS_AS(fit(model, x, y, bad_lr), ValidationError);

    TrainConfig bad_batch;
    bad_batch.batch_size = 0;
    CHECK_THROWS_AS(fit(model, x, y, bad_batch), ValidationError);

    TrainConfig bad_split;
    bad_split.validation_fraction = 1.0;
    CHECK_THROWS_AS(fit(model, x, y, bad_split), ValidationError);
    bad_split.validation_fraction = 0.001;  // rounds to an empty validation set
    CHECK_THROWS_AS(fit(model, x, y, bad_split), ValidationError);

    // Shape and axis mismatches.
    CHECK_THROWS_AS(fit(model, Grid<double>(19, 3, 0.0), y, TrainConfig{}), ValidationError);
    CHECK_THROWS_AS(fit(model, Grid<double>(20, 4, 0.0), y, TrainConfig{}), ValidationError);
    CHECK_THROWS_AS(fit(ToyModel::zeros(3, {"x", "y"}), x, y, TrainConfig{}), ValidationError);

    // Entirely Unknown labels.
    LabelMatrix blank(y.class_names(), 20);
    CHECK_THROWS_WITH(fit(model, x, blank, TrainConfig{}),
                      Catch::Matchers::ContainsSubstring("entirely Unknown"));
}
