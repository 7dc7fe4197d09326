#include "consim/linalg.hpp"

#include <cmath>

namespace consim {

double Matrix::inf_norm() const {
    double best = 0.0;
    for (int i = 0; i < rows_; ++i) {
        double row = 0.0;
        for (int j = 0; j < cols_; ++j) row += std::abs((*this)(i, j));
        if (row > best) best = row;
    }
    return best;
}

std::vector<double> Matrix::left_multiply(const std::vector<double>& row_vec) const {
    std::vector<double> out(static_cast<size_t>(cols_), 0.0);
    for (int i = 0; i < rows_; ++i) {
        const double v = row_vec[static_cast<size_t>(i)];
        if (v == 0.0) continue;
        for (int j = 0; j < cols_; ++j) out[static_cast<size_t>(j)] += v * (*this)(i, j);
    }
    return out;
}

} // namespace consim
