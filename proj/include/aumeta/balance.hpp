#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aumeta/database.hpp"
#include "aumeta/errors.hpp"
#include "aumeta/labels.hpp"

namespace aumeta::balance {

struct SelectionConfig {
    /// Keep classes displayed at least this often. The threshold is a count
    /// of Displayed labels only; NotDisplayed and Unknown never contribute.
    std::size_t min_occurrences = 20000;
};

/// Integer repetition weights per record. Balancing only ever duplicates
/// existing samples, so weights start at 1 and grow; a stored plan may still
/// carry weight 0 to mean "dropped".
struct BalancePlan {
    std::vector<std::string> selected_classes;
    /// (sample_id, weight) in database record order.
    std::vector<std::pair<std::string, std::size_t>> weights;
    /// Displayed count per selected class after weight expansion.
    std::vector<std::size_t> achieved_counts;
    double final_ratio = 1.0;
};

inline std::vector<std::size_t> displayed_counts(const MergedDatabase& db,
                                                 const std::vector<std::string>& classes) {
    std::vector<std::size_t> idx;
    idx.reserve(classes.size());
    for (const auto& name : classes) idx.push_back(db.class_index(name));
    std::vector<std::size_t> counts(classes.size(), 0);
    for (const auto& rec : db.records())
        for (std::size_t c = 0; c < idx.size(); ++c)
            if (rec.labels[idx[c]] == Ternary::Displayed) ++counts[c];
    return counts;
}

/// Classes whose Displayed count meets the threshold, in class-axis order.
inline std::vector<std::string> occurrence_filter(const MergedDatabase& db,
                                                  const SelectionConfig& config = {}) {
    const auto counts = displayed_counts(db, db.class_names());
    std::vector<std::string> selected;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] >= config.min_occurrences) selected.push_back(db.class_names()[c]);
    return selected;
}

/// Remove records that carry no annotation at all within `selected`. An
/// explicit NotDisplayed counts as an annotation and keeps the record.
inline MergedDatabase drop_all_unknown(const MergedDatabase& db,
                                       const std::vector<std::string>& selected) {
    std::vector<std::size_t> idx;
    idx.reserve(selected.size());
    for (const auto& name : selected) idx.push_back(db.class_index(name));

    std::vector<SampleRecord> kept;
    for (const auto& rec : db.records()) {
        const bool annotated = std::any_of(idx.begin(), idx.end(), [&](std::size_t c) {
            return rec.labels[c] != Ternary::Unknown;
        });
        if (annotated) kept.push_back(rec);
    }
    return MergedDatabase(db.class_names(), db.descriptors(), std::move(kept));
}

/// max/min of per-class Displayed counts; 1.0 means perfectly balanced.
inline double imbalance_ratio(const std::vector<std::size_t>& counts,
                              const std::vector<std::string>& classes) {
    if (counts.empty()) throw ValidationError("imbalance_ratio needs at least one class");
    std::size_t lo = std::numeric_limits<std::size_t>::max();
    std::size_t hi = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            const std::string name = c < classes.size() ? classes[c] : std::to_string(c);
            throw ValidationError("class '" + name + "' has zero Displayed labels");
        }
        lo = std::min(lo, counts[c]);
        hi = std::max(hi, counts[c]);
    }
    return static_cast<double>(hi) / static_cast<double>(lo);
}

inline double imbalance_ratio(const MergedDatabase& db,
                              const std::vector<std::string>& classes) {
    return imbalance_ratio(displayed_counts(db, classes), classes);
}

namespace detail {

inline double ratio_of(const std::vector<std::size_t>& counts) {
    std::size_t lo = std::numeric_limits<std::size_t>::max();
    std::size_t hi = 0;
    for (std::size_t v : counts) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return static_cast<double>(hi) / static_cast<double>(lo);
}

}  // namespace detail

/// Greedy oversampling balancer. Every weight starts at 1; each iteration
/// adds one more copy of a single record and commits the choice that helps
/// most, breaking ties toward the lexicographically smallest sample_id so
/// the plan is fully deterministic.
///
/// Without a target ("min-max" mode) the scored quantity is the imbalance
/// ratio the addition would leave behind; iteration stops when no candidate
/// strictly improves it. With a scalar per-class target, candidates are
/// scored by how much they shrink the total shortfall below the target, and
/// iteration stops when the shortfall is gone or nothing shrinks it.
///
/// Correlated labels can make ratio 1 unreachable (duplicating a positive of
/// a scarce class drags its partner classes up too); the iteration cap of
/// 10x the record count bounds the loop in that case. The greedy step never
/// accepts a worsening move, so the final ratio never exceeds the identity
/// plan's ratio.
inline BalancePlan greedy_balance(const MergedDatabase& db,
                                  const std::vector<std::string>& selected,
                                  std::optional<std::size_t> target = std::nullopt) {
    if (selected.empty()) throw ValidationError("greedy_balance needs at least one class");
    std::vector<std::size_t> idx;
    idx.reserve(selected.size());
    for (const auto& name : selected) idx.push_back(db.class_index(name));

    const auto& records = db.records();
    // Per-record positive pattern restricted to the selected classes.
    std::vector<std::vector<std::size_t>> positives(records.size());
    std::vector<std::size_t> achieved(selected.size(), 0);
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t c = 0; c < idx.size(); ++c) {
            if (records[r].labels[idx[c]] == Ternary::Displayed) {
                positives[r].push_back(c);
                ++achieved[c];
            }
        }
    }
    for (std::size_t c = 0; c < selected.size(); ++c)
        if (achieved[c] == 0)
            throw ValidationError("class '" + selected[c] +
                                  "' has zero Displayed records; it cannot be balanced");

    std::vector<std::size_t> weights(records.size(), 1);
    const std::size_t cap = 10 * records.size();

    for (std::size_t iter = 0; iter < cap; ++iter) {
        std::size_t best = records.size();
        if (!target) {
            const double current = detail::ratio_of(achieved);
            double best_ratio = current;
            for (std::size_t r = 0; r < records.size(); ++r) {
                if (positives[r].empty()) continue;  // adds nothing to any count
                auto trial = achieved;
                for (std::size_t c : positives[r]) ++trial[c];
                const double ratio = detail::ratio_of(trial);
                if (ratio < best_ratio ||
                    (best < records.size() && ratio == best_ratio &&
                     records[r].sample_id < records[best].sample_id)) {
                    best_ratio = ratio;
                    best = r;
                }
            }
        } else {
            std::size_t best_gain = 0;
            for (std::size_t r = 0; r < records.size(); ++r) {
                std::size_t gain = 0;
                for (std::size_t c : positives[r])
                    if (achieved[c] < *target) ++gain;
                if (gain > best_gain ||
                    (gain == best_gain && gain > 0 && best < records.size() &&
                     records[r].sample_id < records[best].sample_id)) {
                    best_gain = gain;
                    best = r;
                }
            }
        }
        if (best == records.size()) break;  // no candidate helps
        ++weights[best];
        for (std::size_t c : positives[best]) ++achieved[c];
    }

    BalancePlan plan;
    plan.selected_classes = selected;
    plan.weights.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r)
        plan.weights.emplace_back(records[r].sample_id, weights[r]);

    // Recount from scratch instead of trusting the incremental bookkeeping.
    plan.achieved_counts.assign(selected.size(), 0);
    for (std::size_t r = 0; r < records.size(); ++r)
        for (std::size_t c : positives[r]) plan.achieved_counts[c] += weights[r];
    plan.final_ratio = imbalance_ratio(plan.achieved_counts, selected);
    return plan;
}

}  // namespace aumeta::balance
