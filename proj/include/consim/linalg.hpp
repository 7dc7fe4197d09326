#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace consim {

// Small dense row-major matrix. Network sizes here are desk scale, so a
// flat std::vector<double> with direct elimination is all we need.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<size_t>(i) * cols_ + j];
    }
    double operator()(int i, int j) const {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<size_t>(i) * cols_ + j];
    }

    const std::vector<double>& data() const { return data_; }

    // max_i sum_j |a_ij|
    double inf_norm() const;

    std::vector<double> left_multiply(const std::vector<double>& row_vec) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

} // namespace consim
