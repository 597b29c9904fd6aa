#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace radae {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const noexcept {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<const double> flat() const noexcept { return data_; }
    std::span<double> flat() noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    /// Appends `count` zero rows.
    void append_rows(std::size_t count) {
        data_.resize((rows_ + count) * cols_, 0.0);
        rows_ += count;
    }

    /// Appends `count` zero columns to every row.
    void append_cols(std::size_t count) {
        std::vector<double> next((cols_ + count) * rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            std::copy_n(data_.data() + r * cols_, cols_, next.data() + r * (cols_ + count));
        data_ = std::move(next);
        cols_ += count;
    }

    /// Keeps only the listed rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> keep) const {
        Matrix out(keep.size(), cols_);
        for (std::size_t i = 0; i < keep.size(); ++i)
            std::copy_n(data_.data() + keep[i] * cols_, cols_, out.data() + i * cols_);
        return out;
    }

    /// Keeps only the listed columns, in the given order.
    Matrix select_cols(std::span<const std::size_t> keep) const {
        Matrix out(rows_, keep.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t j = 0; j < keep.size(); ++j) out(r, j) = (*this)(r, keep[j]);
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace radae
