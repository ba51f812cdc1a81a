#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aumeta/balance.hpp"
#include "aumeta/database.hpp"
#include "aumeta/errors.hpp"
#include "aumeta/io.hpp"
#include "aumeta/metrics.hpp"
#include "aumeta/soft_f1.hpp"
#include "aumeta/trainer.hpp"

namespace aumeta::cli {

/// Gradient checks run by the CLI fail when the worst relative discrepancy
/// reaches this bound. Looser than the library's own test gate (1e-6) so a
/// marginal fixture still gets a clear pass/fail rather than flakiness.
inline constexpr double kGradCheckGate = 1e-5;

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Two-decimal display form used by the metric tables.
inline std::string score(double v) { return fixed(metrics::round_for_display(v), 2); }

inline std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

struct MergeArgs {
    std::vector<std::string> descriptor_paths;
    std::vector<std::string> table_paths;
    std::string out_path;
};

inline void cmd_merge(const MergeArgs& a, const std::string& format, std::ostream& out) {
    if (a.descriptor_paths.size() != a.table_paths.size())
        throw ValidationError("need one --table per --descriptor, got " +
                              std::to_string(a.table_paths.size()) + " tables for " +
                              std::to_string(a.descriptor_paths.size()) + " descriptors");
    std::vector<DatasetDescriptor> descriptors;
    std::vector<std::vector<AnnotationRow>> tables;
    for (std::size_t i = 0; i < a.descriptor_paths.size(); ++i) {
        descriptors.push_back(io::load_descriptor(a.descriptor_paths[i]));
        tables.push_back(io::load_annotation_table(a.table_paths[i]));
    }
    const MergedDatabase db = merge(descriptors, tables);
    const double fraction = missing_fraction(db);  // throws before anything is written
    io::save_database(db, a.out_path);
    if (format == "jsonl") {
        io::json line;
        line["records"] = db.records().size();
        line["classes"] = db.class_names().size();
        line["missing_fraction"] = fraction;
        out << line.dump() << "\n";
    } else {
        out << "records: " << db.records().size() << "\n";
        out << "classes: " << db.class_names().size() << "\n";
        out << "missing fraction: " << fixed(fraction, 4) << "\n";
    }
}

inline void cmd_stats(const std::string& db_path, const std::string& format,
                      std::ostream& out) {
    const MergedDatabase db = io::load_database(db_path);
    if (db.records().empty()) throw ValidationError("database has no records");
    const ClassHistogram hist = class_histogram(db);
    const double fraction = missing_fraction(db);
    if (format == "jsonl") {
        for (std::size_t c = 0; c < hist.class_names.size(); ++c) {
            io::json line;
            line["class"] = hist.class_names[c];
            line["displayed"] = hist.counts[c].displayed;
            line["not_displayed"] = hist.counts[c].not_displayed;
            line["unknown"] = hist.counts[c].unknown;
            out << line.dump() << "\n";
        }
        io::json totals;
        totals["records"] = db.records().size();
        totals["missing_fraction"] = fraction;
        out << totals.dump() << "\n";
    } else {
        out << "class,displayed,not_displayed,unknown\n";
        for (std::size_t c = 0; c < hist.class_names.size(); ++c)
            out << hist.class_names[c] << "," << hist.counts[c].displayed << ","
                << hist.counts[c].not_displayed << "," << hist.counts[c].unknown << "\n";
        out << "records: " << db.records().size() << "\n";
        out << "missing fraction: " << fixed(fraction, 4) << "\n";
    }
}

struct FilterArgs {
    std::string db_path;
    std::size_t min_occurrences = 20000;
    std::string out_path;
};

inline void cmd_filter(const FilterArgs& a, const std::string& format, std::ostream& out) {
    const MergedDatabase db = io::load_database(a.db_path);
    const auto selected = balance::occurrence_filter(db, {a.min_occurrences});
    const MergedDatabase filtered = balance::drop_all_unknown(db, selected);
    if (!a.out_path.empty()) io::save_database(filtered, a.out_path);
    if (format == "jsonl") {
        io::json line;
        line["selected_classes"] = selected;
        line["records_before"] = db.records().size();
        line["records_after"] = filtered.records().size();
        out << line.dump() << "\n";
    } else {
        out << "selected classes: " << (selected.empty() ? "(none)" : join(selected, ","))
            << "\n";
        out << "records before: " << db.records().size() << "\n";
        out << "records after: " << filtered.records().size() << "\n";
    }
}

struct BalanceArgs {
    std::string db_path;
    std::size_t min_occurrences = 20000;
    std::optional<std::size_t> target;
    std::string out_path;
};

inline void cmd_balance(const BalanceArgs& a, const std::string& format, std::ostream& out) {
    const MergedDatabase db = io::load_database(a.db_path);
    const auto selected = balance::occurrence_filter(db, {a.min_occurrences});
    if (selected.empty())
        throw ValidationError("no class reaches " + std::to_string(a.min_occurrences) +
                              " occurrences; nothing to balance");
    const auto before = balance::displayed_counts(db, selected);
    const balance::BalancePlan plan = balance::greedy_balance(db, selected, a.target);
    io::save_plan(plan, a.out_path);
    if (format == "jsonl") {
        io::json line;
        line["selected_classes"] = selected;
        line["displayed_before"] = before;
        line["achieved_counts"] = plan.achieved_counts;
        line["final_ratio"] = plan.final_ratio;
        out << line.dump() << "\n";
    } else {
        out << "class,displayed_before,displayed_after\n";
        for (std::size_t c = 0; c < selected.size(); ++c)
            out << selected[c] << "," << before[c] << "," << plan.achieved_counts[c] << "\n";
        out << "final ratio: " << fixed(plan.final_ratio, 4) << "\n";
    }
}

struct EvaluateArgs {
    std::string db_path;
    std::string pred_path;
    std::string weights_db_path;
    std::string report_path;
    double threshold = 0.5;
};

inline void cmd_evaluate(const EvaluateArgs& a, const std::string& format, std::ostream& out) {
    const MergedDatabase db = io::load_database(a.db_path);
    const PredictionMatrix pred =
        io::align_predictions(db, io::load_prediction_table(a.pred_path));
    const LabelMatrix truth = db.label_matrix();

    metrics::OccurrenceWeights weights;
    bool have_weights = false;
    if (!a.weights_db_path.empty()) {
        const MergedDatabase weights_db = io::load_database(a.weights_db_path);
        const auto counts =
            balance::displayed_counts(weights_db, weights_db.class_names());
        for (std::size_t c = 0; c < counts.size(); ++c)
            weights.counts[weights_db.class_names()[c]] = counts[c];
        have_weights = true;
    }

    const metrics::MetricReport report = metrics::evaluate(
        truth, metrics::binarize(pred, a.threshold), have_weights ? &weights : nullptr);
    if (!a.report_path.empty())
        io::write_file_atomic(a.report_path, io::metric_report_to_json(report).dump() + "\n");

    if (format == "jsonl") {
        const io::json doc = io::metric_report_to_json(report);
        for (const auto& entry : doc["per_class"]) out << entry.dump() << "\n";
        io::json summary = doc;
        summary.erase("per_class");
        out << summary.dump() << "\n";
    } else {
        out << "class,f1,accuracy\n";
        for (std::size_t c = 0; c < report.class_names.size(); ++c) {
            out << report.class_names[c] << ",";
            if (report.per_class_f1[c])
                out << score(*report.per_class_f1[c]) << "," << score(*report.per_class_accuracy[c]);
            else
                out << "skipped,skipped";
            out << "\n";
        }
        out << "macro_f1: " << score(report.macro_f1) << "\n";
        out << "accuracy: " << score(report.accuracy) << "\n";
        out << "selection_score: " << score(report.selection_score) << "\n";
        if (report.weighted_macro_f1)
            out << "weighted_macro_f1: " << score(*report.weighted_macro_f1) << "\n";
        if (!report.skipped_classes.empty())
            out << "skipped: " << join(report.skipped_classes, ",") << "\n";
    }
}

struct TrainDemoArgs {
    std::uint64_t seed = 42;
    std::size_t samples = 2000;
    std::size_t features = 10;
    std::size_t classes = 4;
    double missingness = 0.5;
    double noise = 0.02;
    trainer::TrainConfig config;
    std::string model_path;
    std::string report_path;
};

inline void cmd_train_demo(TrainDemoArgs a, const std::string& format, std::ostream& out) {
    a.config.seed = a.seed;
    const auto [features, labels] =
        trainer::synth_dataset(a.seed, a.samples, a.features, a.classes, a.missingness, a.noise);
    trainer::ToyModel model = trainer::ToyModel::zeros(a.features, labels.class_names());
    const trainer::TrainReport report = trainer::fit(std::move(model), features, labels, a.config);

    if (!a.model_path.empty()) io::save_model(report.best_model, a.model_path);
    if (!a.report_path.empty())
        io::write_file_atomic(a.report_path, io::train_report_to_json(report).dump() + "\n");

    if (format == "jsonl") {
        const io::json doc = io::train_report_to_json(report);
        for (const auto& entry : doc["history"]) out << entry.dump() << "\n";
        io::json summary;
        summary["best_epoch"] = doc["best_epoch"];
        if (!report.history.empty()) {
            summary["best_selection_score"] = report.history[*report.best_epoch].selection_score;
            summary["final_macro_f1"] = report.history.back().validation.macro_f1;
        }
        out << summary.dump() << "\n";
    } else {
        out << "epoch,train_loss,macro_f1,accuracy,selection_score\n";
        for (std::size_t e = 0; e < report.history.size(); ++e) {
            const auto& h = report.history[e];
            out << e << "," << fixed(h.train_loss, 4) << "," << fixed(h.validation.macro_f1, 4)
                << "," << fixed(h.validation.accuracy, 4) << ","
                << fixed(h.selection_score, 4) << "\n";
        }
        if (report.best_epoch) {
            out << "best_epoch: " << *report.best_epoch << "\n";
            out << "best_selection_score: "
                << fixed(report.history[*report.best_epoch].selection_score, 4) << "\n";
            out << "final_macro_f1: " << fixed(report.history.back().validation.macro_f1, 4)
                << "\n";
        } else {
            out << "best_epoch: none (no epochs ran)\n";
        }
    }
}

struct GradCheckArgs {
    std::string db_path;
    std::string pred_path;
    double step = 1e-6;
    loss::SoftF1Config config;
};

inline bool cmd_grad_check(const GradCheckArgs& a, const std::string& format,
                           std::ostream& out) {
    const MergedDatabase db = io::load_database(a.db_path);
    const PredictionMatrix pred =
        io::align_predictions(db, io::load_prediction_table(a.pred_path));
    const LabelMatrix truth = db.label_matrix();

    const loss::LossResult result = loss::soft_f1_loss(pred, truth, a.config);
    const double max_error = loss::finite_difference_check(pred, truth, a.config, a.step);
    const bool ok = max_error < kGradCheckGate;

    if (format == "jsonl") {
        io::json line;
        line["loss"] = result.loss;
        line["max_relative_error"] = max_error;
        line["passed"] = ok;
        line["per_class_soft_f1"] = result.per_class_soft_f1;
        line["batch_skipped_classes"] = result.batch_skipped_classes;
        out << line.dump() << "\n";
    } else {
        out << "class,soft_f1\n";
        for (const auto& name : truth.class_names()) {
            auto it = result.per_class_soft_f1.find(name);
            out << name << ","
                << (it == result.per_class_soft_f1.end() ? std::string("skipped")
                                                         : io::format_double(it->second))
                << "\n";
        }
        out << "loss: " << io::format_double(result.loss) << "\n";
        out << "max_relative_error: " << io::format_double(max_error) << "\n";
        out << (ok ? "gradient check passed\n" : "gradient check FAILED\n");
    }
    return ok;
}

}  // namespace detail

/// In-process entry point: parses `args` (program name excluded), writes
/// results to `out` and diagnostics to `err`. Exit codes: 0 success,
/// 1 validation or usage failure, 2 filesystem failure.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-label annotation merging, masked metrics and training tools", "aumeta"};
    app.require_subcommand(1);

    std::string format = "table";
    const auto add_format = [&](CLI::App* cmd) {
        cmd->add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"table", "jsonl"}))
            ->capture_default_str();
    };

    detail::MergeArgs merge_args;
    auto* merge_cmd =
        app.add_subcommand("merge", "Merge per-dataset annotation tables into one database");
    merge_cmd->add_option("--descriptor", merge_args.descriptor_paths,
                          "Dataset descriptor JSON (repeat per dataset)")
        ->required();
    merge_cmd->add_option("--table", merge_args.table_paths,
                          "Annotation CSV (one per descriptor, same order)")
        ->required();
    merge_cmd->add_option("--out", merge_args.out_path, "Merged database output path")
        ->required();
    add_format(merge_cmd);
    merge_cmd->callback([&] { detail::cmd_merge(merge_args, format, out); });

    std::string stats_db;
    auto* stats_cmd = app.add_subcommand("stats", "Per-class label distribution of a database");
    stats_cmd->add_option("--db", stats_db, "Merged database file")->required();
    add_format(stats_cmd);
    stats_cmd->callback([&] { detail::cmd_stats(stats_db, format, out); });

    detail::FilterArgs filter_args;
    auto* filter_cmd = app.add_subcommand(
        "filter", "Select classes by occurrence count and drop unannotated records");
    filter_cmd->add_option("--db", filter_args.db_path, "Merged database file")->required();
    filter_cmd
        ->add_option("--min-occurrences", filter_args.min_occurrences,
                     "Keep classes displayed at least this often")
        ->capture_default_str();
    filter_cmd->add_option("--out", filter_args.out_path, "Filtered database output path");
    add_format(filter_cmd);
    filter_cmd->callback([&] { detail::cmd_filter(filter_args, format, out); });

    detail::BalanceArgs balance_args;
    auto* balance_cmd =
        app.add_subcommand("balance", "Compute oversampling weights for the selected classes");
    balance_cmd->add_option("--db", balance_args.db_path, "Merged database file")->required();
    balance_cmd
        ->add_option("--min-occurrences", balance_args.min_occurrences,
                     "Class selection threshold")
        ->capture_default_str();
    balance_cmd->add_option("--target", balance_args.target,
                            "Per-class Displayed target count (default: min-max mode)");
    balance_cmd->add_option("--out", balance_args.out_path, "Balance plan output path")
        ->required();
    add_format(balance_cmd);
    balance_cmd->callback([&] { detail::cmd_balance(balance_args, format, out); });

    detail::EvaluateArgs eval_args;
    auto* eval_cmd =
        app.add_subcommand("evaluate", "Masked metrics of a prediction file against a database");
    eval_cmd->add_option("--db", eval_args.db_path, "Merged database file (ground truth)")
        ->required();
    eval_cmd->add_option("--pred", eval_args.pred_path, "Prediction CSV")->required();
    eval_cmd->add_option("--weights-db", eval_args.weights_db_path,
                         "Database whose Displayed counts weight the macro F1");
    eval_cmd->add_option("--report-out", eval_args.report_path, "Write the full report as JSON");
    eval_cmd->add_option("--threshold", eval_args.threshold, "Binarization threshold")
        ->capture_default_str();
    add_format(eval_cmd);
    eval_cmd->callback([&] { detail::cmd_evaluate(eval_args, format, out); });

    detail::TrainDemoArgs train_args;
    auto* train_cmd = app.add_subcommand(
        "train-demo", "Train the toy model on synthetic data with the masked soft-F1 loss");
    train_cmd->add_option("--seed", train_args.seed, "Seed for data and training")
        ->capture_default_str();
    train_cmd->add_option("--samples", train_args.samples, "Sample count")->capture_default_str();
    train_cmd->add_option("--features", train_args.features, "Feature count")
        ->capture_default_str();
    train_cmd->add_option("--classes", train_args.classes, "Class count")->capture_default_str();
    train_cmd->add_option("--missingness", train_args.missingness, "Unknown-cell probability")
        ->capture_default_str();
    train_cmd->add_option("--noise", train_args.noise, "Label flip probability")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_args.config.epochs, "Training epochs")
        ->capture_default_str();
    train_cmd->add_option("--batch-size", train_args.config.batch_size, "Minibatch size")
        ->capture_default_str();
    train_cmd
        ->add_option("--learning-rate", train_args.config.learning_rate, "Optimizer step size")
        ->capture_default_str();
    train_cmd->add_option("--threshold", train_args.config.threshold,
                          "Validation binarization threshold")
        ->capture_default_str();
    train_cmd->add_option("--model-out", train_args.model_path, "Write the best model as JSON");
    train_cmd->add_option("--report-out", train_args.report_path,
                          "Write the training history as JSON");
    add_format(train_cmd);
    train_cmd->callback([&] { detail::cmd_train_demo(train_args, format, out); });

    detail::GradCheckArgs grad_args;
    bool grad_ok = true;
    auto* grad_cmd = app.add_subcommand(
        "grad-check", "Verify analytic loss gradients against finite differences");
    grad_cmd->add_option("--db", grad_args.db_path, "Merged database file (ground truth)")
        ->required();
    grad_cmd->add_option("--pred", grad_args.pred_path, "Prediction CSV")->required();
    grad_cmd->add_option("--step", grad_args.step, "Finite difference step")
        ->capture_default_str();
    grad_cmd->add_option("--epsilon", grad_args.config.epsilon, "Loss denominator stabilizer")
        ->capture_default_str();
    add_format(grad_cmd);
    grad_cmd->callback([&] { grad_ok = detail::cmd_grad_check(grad_args, format, out); });

    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        // Help and version land on stdout with code 0; anything else is a
        // usage mistake and joins the validation class.
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    if (!grad_ok) {
        err << "error: gradient check failed (relative error at or above "
            << io::format_double(kGradCheckGate) << ")\n";
        return 1;
    }
    return 0;
}

}  // namespace aumeta::cli
