#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aumeta/errors.hpp"
#include "aumeta/grid.hpp"

namespace aumeta {

/// Ground-truth state of one class on one sample. Unknown means "no
/// information"; it is never coerced to 0 or 1 anywhere in the library.
enum class Ternary : std::int8_t {
    Unknown = -1,
    NotDisplayed = 0,
    Displayed = 1,
};

/// On-disk code: 1 = Displayed, 0 = NotDisplayed, -1 = Unknown.
inline int ternary_code(Ternary t) noexcept { return static_cast<int>(t); }

inline Ternary ternary_from_code(int code) {
    switch (code) {
        case -1: return Ternary::Unknown;
        case 0: return Ternary::NotDisplayed;
        case 1: return Ternary::Displayed;
        default:
            throw ValidationError("ternary code must be -1, 0 or 1, got " + std::to_string(code));
    }
}

inline void validate_class_names(const std::vector<std::string>& names) {
    std::unordered_set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) throw ValidationError("class names must be non-empty");
        if (!seen.insert(name).second)
            throw ValidationError("duplicate class name '" + name + "'");
    }
}

/// Samples x classes grid of ternary ground truth, with a fixed class axis.
class LabelMatrix {
public:
    explicit LabelMatrix(std::vector<std::string> class_names, std::size_t rows = 0)
        : class_names_(std::move(class_names)),
          cells_(rows, class_names_.size(), Ternary::Unknown) {
        validate_class_names(class_names_);
        if (class_names_.empty()) throw ValidationError("label matrix needs at least one class");
    }

    static LabelMatrix from_rows(std::vector<std::string> class_names,
                                 const std::vector<std::vector<Ternary>>& rows) {
        LabelMatrix m(std::move(class_names));
        for (const auto& row : rows) m.append_row(row);
        return m;
    }

    std::size_t rows() const noexcept { return cells_.rows(); }
    std::size_t cols() const noexcept { return cells_.cols(); }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    Ternary at(std::size_t r, std::size_t c) const { return cells_.at(r, c); }
    void set(std::size_t r, std::size_t c, Ternary value) { cells_.at(r, c) = value; }

    std::vector<Ternary> column(std::size_t c) const { return cells_.column(c); }
    std::span<const Ternary> row(std::size_t r) const { return cells_.row(r); }

    void append_row(const std::vector<Ternary>& row) { cells_.append_row(row); }

    const Grid<Ternary>& grid() const noexcept { return cells_; }

    bool operator==(const LabelMatrix&) const = default;

private:
    std::vector<std::string> class_names_;
    Grid<Ternary> cells_;
};

/// Samples x classes grid of per-class probabilities in [0,1], produced by a
/// sigmoid output layer. Shares the class axis with its paired LabelMatrix.
class PredictionMatrix {
public:
    explicit PredictionMatrix(std::vector<std::string> class_names, std::size_t rows = 0,
                              double fill = 0.0)
        : class_names_(std::move(class_names)), cells_(rows, class_names_.size(), fill) {
        validate_class_names(class_names_);
        if (class_names_.empty())
            throw ValidationError("prediction matrix needs at least one class");
        validate_probability(fill);
    }

    static PredictionMatrix from_rows(std::vector<std::string> class_names,
                                      const std::vector<std::vector<double>>& rows) {
        PredictionMatrix m(std::move(class_names));
        for (const auto& row : rows) m.append_row(row);
        return m;
    }

    std::size_t rows() const noexcept { return cells_.rows(); }
    std::size_t cols() const noexcept { return cells_.cols(); }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    double at(std::size_t r, std::size_t c) const { return cells_.at(r, c); }

    void set(std::size_t r, std::size_t c, double value) {
        validate_probability(value);
        cells_.at(r, c) = value;
    }

    std::vector<double> column(std::size_t c) const { return cells_.column(c); }
    std::span<const double> row(std::size_t r) const { return cells_.row(r); }

    void append_row(const std::vector<double>& row) {
        for (double v : row) validate_probability(v);
        cells_.append_row(row);
    }

    const Grid<double>& grid() const noexcept { return cells_; }

    bool operator==(const PredictionMatrix&) const = default;

private:
    static void validate_probability(double v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError("probability outside [0,1]: " + std::to_string(v));
    }

    std::vector<std::string> class_names_;
    Grid<double> cells_;
};

/// Discrete predictions after thresholding, 0/1 per cell.
using BinaryMatrix = Grid<int>;

}  // namespace aumeta
