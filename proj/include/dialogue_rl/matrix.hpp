#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dialogue_rl {

using Vector = std::vector<double>;

inline void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw std::invalid_argument(msg);
    }
}

/// Row-major dense matrix of doubles. Every weight, gradient and activation
/// block in the model lives in one of these; shapes are checked at the
/// operation boundaries, not per element.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c) {
        require(r >= 0 && c >= 0, "Matrix: negative shape");
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
    }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return data.size(); }

    void fill(double v) { data.assign(data.size(), v); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) {
            m.at(i, i) = 1.0;
        }
        return m;
    }
};

} // namespace dialogue_rl
