#include "dialogue_rl/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dialogue_rl::kernels {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelFlops = 1u << 15;
} // namespace

Exec pick(std::size_t flops) {
    return flops >= kParallelFlops ? Exec::parallel : Exec::serial;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void matvec(const Matrix& w, const double* x, double* y, Exec exec) {
    const int m = w.rows;
    const int n = w.cols;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < m; ++r) {
            y[r] = dot(n, w.row(r), x);
        }
    } else {
        for (int r = 0; r < m; ++r) {
            y[r] = dot(n, w.row(r), x);
        }
    }
}

void matvec_acc(const Matrix& w, const double* x, double* y, Exec exec) {
    const int m = w.rows;
    const int n = w.cols;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < m; ++r) {
            y[r] += dot(n, w.row(r), x);
        }
    } else {
        for (int r = 0; r < m; ++r) {
            y[r] += dot(n, w.row(r), x);
        }
    }
}

void matvec_t_acc(const Matrix& w, const double* dy, double* dx, Exec exec) {
    const int m = w.rows;
    const int n = w.cols;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) {
                acc += w.at(r, c) * dy[r];
            }
            dx[c] += acc;
        }
    } else {
        // Serial path walks rows for cache friendliness; per-element order
        // within dx[c] stays ascending in r either way.
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) {
                acc += w.at(r, c) * dy[r];
            }
            dx[c] += acc;
        }
    }
}

void outer_acc(Matrix& dw, const double* dy, const double* x, Exec exec) {
    const int m = dw.rows;
    const int n = dw.cols;
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < m; ++r) {
            axpy(n, dy[r], x, dw.row(r));
        }
    } else {
        for (int r = 0; r < m; ++r) {
            axpy(n, dy[r], x, dw.row(r));
        }
    }
}

void axpy(int n, double a, const double* x, double* y) {
    for (int i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

double dot(int n, const double* a, const double* b) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void add_inplace(int n, const double* other, double* total, Exec exec) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            total[i] += other[i];
        }
    } else {
        for (int i = 0; i < n; ++i) {
            total[i] += other[i];
        }
    }
}

} // namespace dialogue_rl::kernels
