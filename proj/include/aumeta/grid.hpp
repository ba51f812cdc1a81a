#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aumeta/errors.hpp"

namespace aumeta {

/// Dense row-major rows x cols container. Backs the label, prediction and
/// gradient matrices.
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

    static Grid from_rows(const std::vector<std::vector<T>>& rows) {
        Grid g;
        for (const auto& row : rows) g.append_row(row);
        return g;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return cells_.size(); }
    bool empty() const noexcept { return cells_.empty(); }

    const T& at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
    T& at(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }

    std::span<const T> row(std::size_t r) const { return {cells_.data() + r * cols_, cols_}; }

    std::vector<T> column(std::size_t c) const {
        std::vector<T> out;
        out.reserve(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out.push_back(at(r, c));
        return out;
    }

    /// Appends one row; fixes the column count on the first append.
    void append_row(std::span<const T> row) {
        if (cols_ == 0 && rows_ == 0) cols_ = row.size();
        if (row.size() != cols_)
            throw ValidationError("row has " + std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(cols_));
        cells_.insert(cells_.end(), row.begin(), row.end());
        ++rows_;
    }

    void append_row(const std::vector<T>& row) { append_row(std::span<const T>(row)); }

    const std::vector<T>& data() const noexcept { return cells_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> cells_;
};

}  // namespace aumeta
