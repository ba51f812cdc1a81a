#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aumeta/balance.hpp"
#include "aumeta/database.hpp"
#include "aumeta/errors.hpp"
#include "aumeta/labels.hpp"
#include "aumeta/metrics.hpp"
#include "aumeta/trainer.hpp"

// File formats. Everything here is line-oriented text: a database or plan
// file starts with a one-line JSON header and continues with one delimited
// record per line. JSON objects serialize with sorted keys and numbers in
// shortest round-trip form, so identical data always produces identical
// bytes. Fields may contain commas or quotes (then they are quoted,
// doubling embedded quotes) but never line breaks; the formats stay strictly
// one record per line.

namespace aumeta::io {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failed on '" + path + "'");
    return std::move(buffer).str();
}

/// Write via a temporary file and rename, so a failed write never leaves a
/// partial file at the destination.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed on '" + tmp + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move '" + tmp + "' to '" + path + "'");
    }
}

/// Shortest decimal form that parses back to exactly the same double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string escape_csv(const std::string& field) {
    if (field.find_first_of("\n\r") != std::string::npos)
        throw ValidationError("field may not contain a line break: '" + field + "'");
    if (field.find_first_of(",\"") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    std::size_t i = 0;
    while (i < line.size()) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            current += ch;
            ++i;
            continue;
        }
        if (ch == '"' && current.empty()) {
            quoted = true;
            ++i;
            continue;
        }
        if (ch == ',') {
            fields.push_back(std::move(current));
            current.clear();
            ++i;
            continue;
        }
        current += ch;
        ++i;
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    fields.push_back(std::move(current));
    return fields;
}

/// Split into lines; a single trailing newline is expected, empty lines
/// elsewhere are rejected. Tolerates CRLF endings.
inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char ch : text) {
        if (ch == '\n') {
            if (!current.empty() && current.back() == '\r') current.pop_back();
            lines.push_back(std::move(current));
            current.clear();
        } else {
            current += ch;
        }
    }
    if (!current.empty()) lines.push_back(std::move(current));
    return lines;
}

inline long long parse_int(const std::string& field, std::size_t line_no) {
    long long value = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError("not an integer: '" + field + "'", line_no);
    return value;
}

inline double parse_probability(const std::string& field, std::size_t line_no) {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError("not a number: '" + field + "'", line_no);
    if (!(value >= 0.0 && value <= 1.0))
        throw ParseError("probability outside [0,1]: '" + field + "'", line_no);
    return value;
}

inline json parse_json(const std::string& text, const std::string& what,
                       std::size_t base_line = 1) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = base_line;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw ParseError(what + ": " + e.what(), line);
    }
}

inline const json& require_key(const json& obj, const char* key, const std::string& what) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(what + " is missing key '" + key + "'");
    return *it;
}

}  // namespace detail

// --- dataset descriptors -------------------------------------------------

inline DatasetDescriptor descriptor_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("descriptor must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "name" && key != "annotated_classes" && key != "source_uri" && key != "notes")
            throw ValidationError("descriptor has unknown key '" + key + "'");
    }
    DatasetDescriptor d;
    d.name = detail::require_key(doc, "name", "descriptor").get<std::string>();
    if (d.name.empty()) throw ValidationError("descriptor name must be non-empty");
    for (const auto& cls :
         detail::require_key(doc, "annotated_classes", "descriptor")) {
        const auto name = cls.get<std::string>();
        if (name.empty()) throw ValidationError("descriptor annotated class must be non-empty");
        if (!d.annotated_classes.insert(name).second)
            throw ValidationError("descriptor lists class '" + name + "' twice");
    }
    if (d.annotated_classes.empty())
        throw ValidationError("descriptor '" + d.name + "' annotates no classes");
    d.source_uri = detail::require_key(doc, "source_uri", "descriptor").get<std::string>();
    if (doc.contains("notes")) d.notes = doc["notes"].get<std::string>();
    return d;
}

inline json descriptor_to_json(const DatasetDescriptor& d) {
    json doc;
    doc["name"] = d.name;
    doc["annotated_classes"] = d.annotated_classes;
    doc["source_uri"] = d.source_uri;
    doc["notes"] = d.notes;
    return doc;
}

inline DatasetDescriptor load_descriptor(const std::string& path) {
    return descriptor_from_json(detail::parse_json(read_file(path), "descriptor"));
}

// --- annotation tables ---------------------------------------------------

/// Header `sample_id,media_ref,<class>,...`; cells are 1 (displayed),
/// 0 (not displayed), -1 or empty (unknown, omitted from the label map).
inline std::vector<AnnotationRow> annotation_table_from_string(const std::string& text) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw ParseError("annotation table is empty", 1);
    const auto header = detail::split_csv(lines[0], 1);
    if (header.size() < 3 || header[0] != "sample_id" || header[1] != "media_ref")
        throw ParseError("header must start with sample_id,media_ref and name at least one class",
                         1);
    std::vector<std::string> classes(header.begin() + 2, header.end());
    validate_class_names(classes);

    std::vector<AnnotationRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) throw ParseError("empty line", line_no);
        const auto fields = detail::split_csv(lines[i], line_no);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        AnnotationRow row;
        row.sample_id = fields[0];
        row.media_ref = fields[1];
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const std::string& cell = fields[c + 2];
            if (cell.empty() || cell == "-1") continue;
            if (cell == "1") row.labels[classes[c]] = true;
            else if (cell == "0") row.labels[classes[c]] = false;
            else throw ParseError("label cell must be 1, 0, -1 or empty, got '" + cell + "'",
                                  line_no);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<AnnotationRow> load_annotation_table(const std::string& path) {
    return annotation_table_from_string(read_file(path));
}

// --- merged database -----------------------------------------------------

inline std::string database_to_string(const MergedDatabase& db) {
    json header;
    header["format"] = "aumeta-db";
    header["version"] = 1;
    header["class_names"] = db.class_names();
    header["descriptors"] = json::array();
    for (const auto& d : db.descriptors()) header["descriptors"].push_back(descriptor_to_json(d));

    std::string out = header.dump();
    out += '\n';
    for (const auto& rec : db.records()) {
        out += detail::escape_csv(rec.sample_id);
        out += ',';
        out += detail::escape_csv(rec.dataset);
        out += ',';
        out += detail::escape_csv(rec.media_ref);
        for (Ternary t : rec.labels) {
            out += ',';
            out += std::to_string(ternary_code(t));
        }
        out += '\n';
    }
    return out;
}

inline MergedDatabase database_from_string(const std::string& text) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw ParseError("database file is empty", 1);
    const json header = detail::parse_json(lines[0], "database header");
    if (!header.is_object() || detail::require_key(header, "format", "database header") !=
                                   "aumeta-db")
        throw ValidationError("not a database file (format key mismatch)");
    if (detail::require_key(header, "version", "database header").get<int>() != 1)
        throw ValidationError("unsupported database version");

    std::vector<std::string> class_names;
    for (const auto& name : detail::require_key(header, "class_names", "database header"))
        class_names.push_back(name.get<std::string>());
    std::vector<DatasetDescriptor> descriptors;
    for (const auto& doc : detail::require_key(header, "descriptors", "database header"))
        descriptors.push_back(descriptor_from_json(doc));

    std::vector<SampleRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) throw ParseError("empty line", line_no);
        const auto fields = detail::split_csv(lines[i], line_no);
        if (fields.size() != 3 + class_names.size())
            throw ParseError("expected " + std::to_string(3 + class_names.size()) +
                                 " fields, got " + std::to_string(fields.size()),
                             line_no);
        SampleRecord rec;
        rec.sample_id = fields[0];
        rec.dataset = fields[1];
        rec.media_ref = fields[2];
        for (std::size_t c = 0; c < class_names.size(); ++c) {
            const long long code = detail::parse_int(fields[c + 3], line_no);
            if (code < -1 || code > 1)
                throw ParseError("ternary code must be -1, 0 or 1, got '" + fields[c + 3] + "'",
                                 line_no);
            rec.labels.push_back(ternary_from_code(static_cast<int>(code)));
        }
        records.push_back(std::move(rec));
    }
    return MergedDatabase(std::move(class_names), std::move(descriptors), std::move(records));
}

inline void save_database(const MergedDatabase& db, const std::string& path) {
    write_file_atomic(path, database_to_string(db));
}

inline MergedDatabase load_database(const std::string& path) {
    return database_from_string(read_file(path));
}

// --- predictions ---------------------------------------------------------

struct PredictionTable {
    std::vector<std::string> class_names;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
};

inline PredictionTable prediction_table_from_string(const std::string& text) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw ParseError("prediction file is empty", 1);
    const auto header = detail::split_csv(lines[0], 1);
    if (header.size() < 2 || header[0] != "sample_id")
        throw ParseError("header must start with sample_id and name at least one class", 1);
    PredictionTable table;
    table.class_names.assign(header.begin() + 1, header.end());
    validate_class_names(table.class_names);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) throw ParseError("empty line", line_no);
        const auto fields = detail::split_csv(lines[i], line_no);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        std::vector<double> values;
        values.reserve(table.class_names.size());
        for (std::size_t c = 1; c < fields.size(); ++c)
            values.push_back(detail::parse_probability(fields[c], line_no));
        table.rows.emplace_back(fields[0], std::move(values));
    }
    return table;
}

inline PredictionTable load_prediction_table(const std::string& path) {
    return prediction_table_from_string(read_file(path));
}

/// Reorder a prediction table into database record order. The class axes
/// must match exactly, and the sample ids must match one-to-one.
inline PredictionMatrix align_predictions(const MergedDatabase& db,
                                          const PredictionTable& table) {
    const auto& expected = db.class_names();
    for (std::size_t c = 0; c < std::max(expected.size(), table.class_names.size()); ++c) {
        if (c >= expected.size())
            throw ValidationError("prediction class axis has unexpected class '" +
                                  table.class_names[c] + "'");
        if (c >= table.class_names.size())
            throw ValidationError("prediction class axis is missing class '" + expected[c] + "'");
        if (table.class_names[c] != expected[c])
            throw ValidationError("prediction class axis differs at '" + table.class_names[c] +
                                  "' (expected '" + expected[c] + "')");
    }

    std::map<std::string, const std::vector<double>*> by_id;
    for (const auto& [id, values] : table.rows)
        if (!by_id.emplace(id, &values).second)
            throw ValidationError("duplicate prediction for sample_id '" + id + "'");

    PredictionMatrix pred(expected, 0);
    for (const auto& rec : db.records()) {
        auto it = by_id.find(rec.sample_id);
        if (it == by_id.end())
            throw ValidationError("no prediction for sample_id '" + rec.sample_id + "'");
        pred.append_row(*it->second);
        by_id.erase(it);
    }
    if (!by_id.empty())
        throw ValidationError("prediction for unknown sample_id '" + by_id.begin()->first + "'");
    return pred;
}

inline std::string predictions_to_string(const std::vector<std::string>& sample_ids,
                                         const PredictionMatrix& pred) {
    if (sample_ids.size() != pred.rows())
        throw ValidationError("prediction rows do not match sample id count");
    std::string out = "sample_id";
    for (const auto& name : pred.class_names()) {
        out += ',';
        out += detail::escape_csv(name);
    }
    out += '\n';
    for (std::size_t r = 0; r < pred.rows(); ++r) {
        out += detail::escape_csv(sample_ids[r]);
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            out += ',';
            out += format_double(pred.at(r, c));
        }
        out += '\n';
    }
    return out;
}

// --- balance plans -------------------------------------------------------

inline std::string plan_to_string(const balance::BalancePlan& plan) {
    json header;
    header["format"] = "aumeta-plan";
    header["version"] = 1;
    header["selected_classes"] = plan.selected_classes;
    header["achieved_counts"] = plan.achieved_counts;
    header["final_ratio"] = plan.final_ratio;
    std::string out = header.dump();
    out += '\n';
    for (const auto& [id, weight] : plan.weights) {
        out += detail::escape_csv(id);
        out += ',';
        out += std::to_string(weight);
        out += '\n';
    }
    return out;
}

inline balance::BalancePlan plan_from_string(const std::string& text) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw ParseError("plan file is empty", 1);
    const json header = detail::parse_json(lines[0], "plan header");
    if (!header.is_object() ||
        detail::require_key(header, "format", "plan header") != "aumeta-plan")
        throw ValidationError("not a balance plan file (format key mismatch)");
    if (detail::require_key(header, "version", "plan header").get<int>() != 1)
        throw ValidationError("unsupported plan version");

    balance::BalancePlan plan;
    for (const auto& name : detail::require_key(header, "selected_classes", "plan header"))
        plan.selected_classes.push_back(name.get<std::string>());
    for (const auto& count : detail::require_key(header, "achieved_counts", "plan header"))
        plan.achieved_counts.push_back(count.get<std::size_t>());
    plan.final_ratio = detail::require_key(header, "final_ratio", "plan header").get<double>();
    if (plan.achieved_counts.size() != plan.selected_classes.size())
        throw ValidationError("plan has " + std::to_string(plan.achieved_counts.size()) +
                              " achieved counts for " +
                              std::to_string(plan.selected_classes.size()) + " classes");

    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) throw ParseError("empty line", line_no);
        const auto fields = detail::split_csv(lines[i], line_no);
        if (fields.size() != 2)
            throw ParseError("expected sample_id,weight", line_no);
        const long long weight = detail::parse_int(fields[1], line_no);
        if (weight < 0) throw ParseError("weight must be non-negative", line_no);
        if (!seen.insert(fields[0]).second)
            throw ValidationError("duplicate sample_id '" + fields[0] + "' in plan");
        plan.weights.emplace_back(fields[0], static_cast<std::size_t>(weight));
    }
    return plan;
}

inline void save_plan(const balance::BalancePlan& plan, const std::string& path) {
    write_file_atomic(path, plan_to_string(plan));
}

inline balance::BalancePlan load_plan(const std::string& path) {
    return plan_from_string(read_file(path));
}

// --- models --------------------------------------------------------------

inline std::string model_to_string(const trainer::ToyModel& model) {
    json doc;
    doc["format"] = "aumeta-model";
    doc["version"] = 1;
    doc["class_names"] = model.class_names;
    doc["features"] = model.weights.rows();
    json weights = json::array();
    for (std::size_t f = 0; f < model.weights.rows(); ++f) {
        json row = json::array();
        for (std::size_t c = 0; c < model.weights.cols(); ++c) row.push_back(model.weights.at(f, c));
        weights.push_back(std::move(row));
    }
    doc["weights"] = std::move(weights);
    doc["bias"] = model.bias;
    return doc.dump() + "\n";
}

inline trainer::ToyModel model_from_string(const std::string& text) {
    const json doc = detail::parse_json(text, "model file");
    if (!doc.is_object() || detail::require_key(doc, "format", "model file") != "aumeta-model")
        throw ValidationError("not a model file (format key mismatch)");
    if (detail::require_key(doc, "version", "model file").get<int>() != 1)
        throw ValidationError("unsupported model version");

    std::vector<std::string> names;
    for (const auto& name : detail::require_key(doc, "class_names", "model file"))
        names.push_back(name.get<std::string>());
    const auto features = detail::require_key(doc, "features", "model file").get<std::size_t>();
    trainer::ToyModel model = trainer::ToyModel::zeros(features, names);

    const json& weights = detail::require_key(doc, "weights", "model file");
    if (weights.size() != features)
        throw ValidationError("model weights have " + std::to_string(weights.size()) +
                              " rows, expected " + std::to_string(features));
    for (std::size_t f = 0; f < features; ++f) {
        if (weights[f].size() != names.size())
            throw ValidationError("model weight row " + std::to_string(f) + " has " +
                                  std::to_string(weights[f].size()) + " entries, expected " +
                                  std::to_string(names.size()));
        for (std::size_t c = 0; c < names.size(); ++c)
            model.weights.at(f, c) = weights[f][c].get<double>();
    }
    const json& bias = detail::require_key(doc, "bias", "model file");
    if (bias.size() != names.size())
        throw ValidationError("model bias has " + std::to_string(bias.size()) +
                              " entries, expected " + std::to_string(names.size()));
    for (std::size_t c = 0; c < names.size(); ++c) model.bias[c] = bias[c].get<double>();
    return model;
}

inline void save_model(const trainer::ToyModel& model, const std::string& path) {
    write_file_atomic(path, model_to_string(model));
}

inline trainer::ToyModel load_model(const std::string& path) {
    return model_from_string(read_file(path));
}

// --- reports -------------------------------------------------------------

inline json metric_report_to_json(const metrics::MetricReport& report) {
    json doc;
    doc["macro_f1"] = report.macro_f1;
    doc["accuracy"] = report.accuracy;
    doc["selection_score"] = report.selection_score;
    doc["weighted_macro_f1"] =
        report.weighted_macro_f1 ? json(*report.weighted_macro_f1) : json(nullptr);
    doc["skipped_classes"] = report.skipped_classes;
    json per_class = json::array();
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
        json entry;
        entry["class"] = report.class_names[c];
        entry["f1"] = report.per_class_f1[c] ? json(*report.per_class_f1[c]) : json(nullptr);
        entry["accuracy"] =
            report.per_class_accuracy[c] ? json(*report.per_class_accuracy[c]) : json(nullptr);
        per_class.push_back(std::move(entry));
    }
    doc["per_class"] = std::move(per_class);
    return doc;
}

inline json train_report_to_json(const trainer::TrainReport& report) {
    json doc;
    doc["best_epoch"] = report.best_epoch ? json(*report.best_epoch) : json(nullptr);
    json history = json::array();
    for (std::size_t e = 0; e < report.history.size(); ++e) {
        json entry;
        entry["epoch"] = e;
        entry["train_loss"] = report.history[e].train_loss;
        entry["selection_score"] = report.history[e].selection_score;
        entry["validation"] = metric_report_to_json(report.history[e].validation);
        history.push_back(std::move(entry));
    }
    doc["history"] = std::move(history);
    return doc;
}

}  // namespace aumeta::io
