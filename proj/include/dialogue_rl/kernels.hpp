#pragma once

#include "dialogue_rl/matrix.hpp"

namespace dialogue_rl::kernels {

/// Execution backend for the dense kernels. The parallel variants split work
/// over independent output elements only, so serial and parallel results are
/// bit-identical for the same inputs.
enum class Exec { serial, parallel };

/// Picks the OpenMP path once a kernel has enough work to amortize the fork.
Exec pick(std::size_t flops);

/// Threads available to the parallel backend (1 when OpenMP is disabled).
int max_threads();

// y = W * x            (W: m x n, x: n, y: m)
void matvec(const Matrix& w, const double* x, double* y, Exec exec);

// y += W * x
void matvec_acc(const Matrix& w, const double* x, double* y, Exec exec);

// dx += W^T * dy       (dy: m, dx: n); each dx[j] is an independent column dot
void matvec_t_acc(const Matrix& w, const double* dy, double* dx, Exec exec);

// dW += dy * x^T       (dy: m, x: n)
void outer_acc(Matrix& dw, const double* dy, const double* x, Exec exec);

// y += a * x over n entries
void axpy(int n, double a, const double* x, double* y);

double dot(int n, const double* a, const double* b);

// total += other, elementwise over equally-shaped buffers
void add_inplace(int n, const double* other, double* total, Exec exec);

} // namespace dialogue_rl::kernels
