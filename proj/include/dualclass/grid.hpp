#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dualclass {

/// Dense row-major (scale, time) grid.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    template <typename U>
    bool same_shape(const Grid<U>& other) const {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    T& operator()(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
    const T& operator()(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<std::complex<double>>;
using MaskGrid = Grid<std::uint8_t>;

}  // namespace dualclass
