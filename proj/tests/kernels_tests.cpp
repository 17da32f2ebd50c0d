#include "dialogue_rl/kernels.hpp"
#include "dialogue_rl/rng.hpp"

#include <doctest.h>

using namespace dialogue_rl;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = rng.uniform(-2.0, 2.0);
    }
    return m;
}

Vector random_vector(int n, Rng& rng) {
    Vector v(static_cast<std::size_t>(n));
    for (double& x : v) {
        x = rng.uniform(-2.0, 2.0);
    }
    return v;
}

} // namespace

TEST_CASE("serial and parallel kernels agree bitwise") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + static_cast<int>(rng.below(90));
        const int n = 1 + static_cast<int>(rng.below(90));
        const Matrix w = random_matrix(m, n, rng);
        const Vector x = random_vector(n, rng);
        const Vector dy = random_vector(m, rng);

        Vector y1(static_cast<std::size_t>(m), 0.0);
        Vector y2(static_cast<std::size_t>(m), 0.0);
        kernels::matvec(w, x.data(), y1.data(), kernels::Exec::serial);
        kernels::matvec(w, x.data(), y2.data(), kernels::Exec::parallel);
        CHECK(y1 == y2);

        Vector dx1(static_cast<std::size_t>(n), 0.5);
        Vector dx2(static_cast<std::size_t>(n), 0.5);
        kernels::matvec_t_acc(w, dy.data(), dx1.data(), kernels::Exec::serial);
        kernels::matvec_t_acc(w, dy.data(), dx2.data(), kernels::Exec::parallel);
        CHECK(dx1 == dx2);

        Matrix dw1(m, n);
        Matrix dw2(m, n);
        kernels::outer_acc(dw1, dy.data(), x.data(), kernels::Exec::serial);
        kernels::outer_acc(dw2, dy.data(), x.data(), kernels::Exec::parallel);
        CHECK(dw1.data == dw2.data);
    }
}

TEST_CASE("matvec_t accumulates the transpose product") {
    Matrix w(2, 3);
    w.data = {1, 2, 3, 4, 5, 6};
    Vector dy = {10, 100};
    Vector dx(3, 0.0);
    kernels::matvec_t_acc(w, dy.data(), dx.data(), kernels::Exec::serial);
    CHECK(dx[0] == doctest::Approx(410));
    CHECK(dx[1] == doctest::Approx(520));
    CHECK(dx[2] == doctest::Approx(630));
}

TEST_CASE("pick switches to the parallel path for large work") {
    CHECK(kernels::pick(16) == kernels::Exec::serial);
    CHECK(kernels::pick(1u << 20) == kernels::Exec::parallel);
}
