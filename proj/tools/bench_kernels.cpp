// Benchmark comparing the serial reference kernels against the OpenMP
// variants, plus the batch-level gradient accumulation they feed. Run it
// directly; it is not part of the test suite.

#include "dialogue_rl/kernels.hpp"
#include "dialogue_rl/rng.hpp"
#include "dialogue_rl/seq2seq.hpp"

#include <omp.h>

#include <cstdio>
#include <vector>

using namespace dialogue_rl;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = rng.uniform(-1.0, 1.0);
    }
    return m;
}

double time_matvec(const Matrix& w, const Vector& x, kernels::Exec exec, int iters) {
    Vector y(static_cast<std::size_t>(w.rows), 0.0);
    const double t0 = omp_get_wtime();
    for (int i = 0; i < iters; ++i) {
        kernels::matvec(w, x.data(), y.data(), exec);
    }
    const double dt = omp_get_wtime() - t0;
    // keep the result alive
    volatile double sink = y[0];
    (void)sink;
    return dt / iters;
}

void bench_matvec() {
    std::printf("matvec: serial vs parallel (threads=%d)\n", kernels::max_threads());
    std::printf("%10s %14s %14s %8s\n", "size", "serial us", "parallel us", "speedup");
    Rng rng(7);
    for (int n : {64, 256, 1024, 2048}) {
        const Matrix w = random_matrix(n, n, rng);
        Vector x(static_cast<std::size_t>(n));
        for (double& v : x) {
            v = rng.uniform(-1.0, 1.0);
        }
        const int iters = n <= 256 ? 2000 : 200;
        const double ts = time_matvec(w, x, kernels::Exec::serial, iters);
        const double tp = time_matvec(w, x, kernels::Exec::parallel, iters);
        std::printf("%6dx%-4d %14.2f %14.2f %8.2f\n", n, n, ts * 1e6, tp * 1e6, ts / tp);
    }
}

void bench_batch_grads() {
    // Per-pair gradient accumulation, the training hot path. The parallel
    // path distributes batch items; the reduction order is fixed either way.
    Rng rng(11);
    seq2seq::ModelParams model = seq2seq::ModelParams::init(210, 64, rng);

    std::vector<corpus::TrainPair> batch;
    for (int i = 0; i < 16; ++i) {
        corpus::TrainPair p;
        for (int t = 0; t < 8; ++t) {
            p.source.push_back(4 + static_cast<int>(rng.below(200)));
        }
        for (int t = 0; t < 7; ++t) {
            p.target.push_back(4 + static_cast<int>(rng.below(200)));
        }
        p.target.push_back(corpus::Vocab::eos_id);
        batch.push_back(std::move(p));
    }

    std::printf("\nbatch gradient accumulation (16 pairs, V=210, d=64)\n");
    for (int threads : {1, kernels::max_threads()}) {
        omp_set_num_threads(threads);
        seq2seq::ModelParams copy = model;
        const double t0 = omp_get_wtime();
        const int iters = 20;
        for (int i = 0; i < iters; ++i) {
            seq2seq::mle_step(batch, copy, 0.0);
        }
        const double dt = (omp_get_wtime() - t0) / iters;
        std::printf("  threads=%d  %.2f ms/step\n", threads, dt * 1e3);
    }
    omp_set_num_threads(kernels::max_threads());
}

} // namespace

int main() {
    bench_matvec();
    bench_batch_grads();
    return 0;
}
