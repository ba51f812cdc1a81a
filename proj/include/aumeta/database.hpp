#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aumeta/errors.hpp"
#include "aumeta/labels.hpp"

namespace aumeta {

/// Declares which classes a source dataset annotates. Classes outside this
/// set are Unknown for every record the dataset contributes.
struct DatasetDescriptor {
    std::string name;
    std::set<std::string> annotated_classes;
    std::string source_uri;
    std::string notes;

    bool operator==(const DatasetDescriptor&) const = default;
};

/// One input row before merging: only explicitly annotated classes appear in
/// `labels`, and those carry a binary present/absent value. A class missing
/// from the map is Unknown for this row (occluded or simply not coded).
struct AnnotationRow {
    std::string sample_id;
    std::string media_ref;
    std::map<std::string, bool> labels;
};

/// One merged record: the label vector is aligned to the database class axis.
struct SampleRecord {
    std::string sample_id;
    std::string dataset;
    std::string media_ref;
    std::vector<Ternary> labels;

    bool operator==(const SampleRecord&) const = default;
};

struct ClassCounts {
    std::size_t displayed = 0;
    std::size_t not_displayed = 0;
    std::size_t unknown = 0;

    bool operator==(const ClassCounts&) const = default;
};

/// Per-class label distribution, aligned to the database class axis.
struct ClassHistogram {
    std::vector<std::string> class_names;
    std::vector<ClassCounts> counts;

    bool operator==(const ClassHistogram&) const = default;
};

class MergedDatabase {
public:
    MergedDatabase(std::vector<std::string> class_names,
                   std::vector<DatasetDescriptor> descriptors,
                   std::vector<SampleRecord> records)
        : class_names_(std::move(class_names)),
          descriptors_(std::move(descriptors)),
          records_(std::move(records)) {
        validate();
    }

    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const std::vector<DatasetDescriptor>& descriptors() const noexcept { return descriptors_; }
    const std::vector<SampleRecord>& records() const noexcept { return records_; }

    std::size_t class_index(const std::string& name) const {
        auto it = std::find(class_names_.begin(), class_names_.end(), name);
        if (it == class_names_.end())
            throw ValidationError("unknown class '" + name + "'");
        return static_cast<std::size_t>(it - class_names_.begin());
    }

    /// Ground-truth view of all records, rows in record order.
    LabelMatrix label_matrix() const {
        LabelMatrix m(class_names_);
        for (const auto& rec : records_)
            m.append_row(rec.labels);
        return m;
    }

    bool operator==(const MergedDatabase&) const = default;

private:
    void validate() const {
        validate_class_names(class_names_);
        if (class_names_.empty())
            throw ValidationError("merged database needs at least one class");
        if (!std::is_sorted(class_names_.begin(), class_names_.end()))
            throw ValidationError("class axis must be sorted lexicographically");

        std::unordered_map<std::string, const DatasetDescriptor*> by_name;
        for (const auto& d : descriptors_) {
            if (d.name.empty()) throw ValidationError("dataset name must be non-empty");
            if (d.annotated_classes.empty())
                throw ValidationError("dataset '" + d.name + "' annotates no classes");
            if (!by_name.emplace(d.name, &d).second)
                throw ValidationError("duplicate dataset name '" + d.name + "'");
            for (const auto& cls : d.annotated_classes)
                if (!std::binary_search(class_names_.begin(), class_names_.end(), cls))
                    throw ValidationError("dataset '" + d.name + "' annotates class '" + cls +
                                          "' outside the class axis");
        }

        std::unordered_set<std::string> ids;
        ids.reserve(records_.size());
        for (const auto& rec : records_) {
            if (!ids.insert(rec.sample_id).second)
                throw ValidationError("duplicate sample_id '" + rec.sample_id + "'");
            if (rec.labels.size() != class_names_.size())
                throw ValidationError("record '" + rec.sample_id + "' has " +
                                      std::to_string(rec.labels.size()) + " labels, expected " +
                                      std::to_string(class_names_.size()));
            auto it = by_name.find(rec.dataset);
            if (it == by_name.end())
                throw ValidationError("record '" + rec.sample_id + "' names unknown dataset '" +
                                      rec.dataset + "'");
            const auto& annotated = it->second->annotated_classes;
            for (std::size_t c = 0; c < class_names_.size(); ++c) {
                if (rec.labels[c] != Ternary::Unknown && annotated.count(class_names_[c]) == 0)
                    throw ValidationError("record '" + rec.sample_id + "' carries a label for '" +
                                          class_names_[c] + "' which dataset '" + rec.dataset +
                                          "' does not annotate");
            }
        }
    }

    std::vector<std::string> class_names_;
    std::vector<DatasetDescriptor> descriptors_;
    std::vector<SampleRecord> records_;
};

/// Combine per-dataset annotation tables into one database over the union
/// class axis. Record ids are namespaced as "<dataset>/<original-id>" so
/// distinct sources can never collide by accident; a collision after
/// namespacing is an error. Record order is input order: datasets in the
/// order given, rows in table order, which keeps serialization byte-stable.
inline MergedDatabase merge(const std::vector<DatasetDescriptor>& descriptors,
                            const std::vector<std::vector<AnnotationRow>>& tables) {
    if (descriptors.empty()) throw ValidationError("merge needs at least one dataset");
    if (tables.size() != descriptors.size())
        throw ValidationError("expected one annotation table per descriptor, got " +
                              std::to_string(tables.size()) + " tables for " +
                              std::to_string(descriptors.size()) + " descriptors");

    std::set<std::string> axis;
    for (const auto& d : descriptors) {
        if (d.name.empty()) throw ValidationError("dataset name must be non-empty");
        if (d.annotated_classes.empty())
            throw ValidationError("dataset '" + d.name + "' annotates no classes");
        axis.insert(d.annotated_classes.begin(), d.annotated_classes.end());
    }
    std::vector<std::string> class_names(axis.begin(), axis.end());
    validate_class_names(class_names);

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < class_names.size(); ++c) index[class_names[c]] = c;

    std::vector<SampleRecord> records;
    std::unordered_set<std::string> ids;
    for (std::size_t d = 0; d < descriptors.size(); ++d) {
        const auto& desc = descriptors[d];
        for (const auto& row : tables[d]) {
            if (row.sample_id.empty())
                throw ValidationError("dataset '" + desc.name + "' has a row with empty sample_id");
            SampleRecord rec;
            rec.sample_id = desc.name + "/" + row.sample_id;
            rec.dataset = desc.name;
            rec.media_ref = row.media_ref;
            rec.labels.assign(class_names.size(), Ternary::Unknown);
            for (const auto& [cls, displayed] : row.labels) {
                if (desc.annotated_classes.count(cls) == 0)
                    throw ValidationError("dataset '" + desc.name + "' row '" + row.sample_id +
                                          "' labels class '" + cls +
                                          "' outside its annotated set");
                rec.labels[index.at(cls)] =
                    displayed ? Ternary::Displayed : Ternary::NotDisplayed;
            }
            if (!ids.insert(rec.sample_id).second)
                throw ValidationError("duplicate sample_id '" + rec.sample_id + "'");
            records.push_back(std::move(rec));
        }
    }
    return MergedDatabase(std::move(class_names), descriptors, std::move(records));
}

/// Fraction of Unknown cells over the whole records x classes grid.
inline double missing_fraction(const MergedDatabase& db) {
    if (db.records().empty())
        throw ValidationError("missing_fraction of an empty database is undefined");
    std::size_t unknown = 0;
    for (const auto& rec : db.records())
        for (Ternary t : rec.labels)
            if (t == Ternary::Unknown) ++unknown;
    return static_cast<double>(unknown) /
           static_cast<double>(db.records().size() * db.class_names().size());
}

inline ClassHistogram class_histogram(const MergedDatabase& db) {
    ClassHistogram h;
    h.class_names = db.class_names();
    h.counts.assign(h.class_names.size(), ClassCounts{});
    for (const auto& rec : db.records()) {
        for (std::size_t c = 0; c < rec.labels.size(); ++c) {
            switch (rec.labels[c]) {
                case Ternary::Displayed: ++h.counts[c].displayed; break;
                case Ternary::NotDisplayed: ++h.counts[c].not_displayed; break;
                case Ternary::Unknown: ++h.counts[c].unknown; break;
            }
        }
    }
    return h;
}

}  // namespace aumeta
