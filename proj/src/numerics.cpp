#include "dialogue_rl/numerics.hpp"

#include "dialogue_rl/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dialogue_rl::numerics {

double sigmoid(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

Vector affine(const Vector& x, const Matrix& w, const Vector& b) {
    require(w.cols == static_cast<int>(x.size()), "affine: W cols != len(x)");
    require(w.rows == static_cast<int>(b.size()), "affine: W rows != len(b)");
    Vector y = b;
    kernels::matvec_acc(w, x.data(), y.data(), kernels::pick(w.size()));
    return y;
}

Vector affine_backward(const Vector& x, const Matrix& w, const Vector& dy,
                       Matrix& dw, Vector& db) {
    require(w.rows == static_cast<int>(dy.size()), "affine_backward: W rows != len(dy)");
    require(w.cols == static_cast<int>(x.size()), "affine_backward: W cols != len(x)");
    require(dw.same_shape(w), "affine_backward: dW shape mismatch");
    require(db.size() == dy.size(), "affine_backward: db shape mismatch");

    const auto exec = kernels::pick(w.size());
    kernels::outer_acc(dw, dy.data(), x.data(), exec);
    for (std::size_t i = 0; i < dy.size(); ++i) {
        db[i] += dy[i];
    }
    Vector dx(x.size(), 0.0);
    kernels::matvec_t_acc(w, dy.data(), dx.data(), exec);
    return dx;
}

Vector softmax(const Vector& v) {
    Vector out = v;
    softmax_inplace(out);
    return out;
}

void softmax_inplace(Vector& v) {
    require(!v.empty(), "softmax: empty vector");
    const double mx = *std::max_element(v.begin(), v.end());
    require(std::isfinite(mx), "softmax: non-finite entry");
    double sum = 0.0;
    for (double& e : v) {
        e = std::exp(e - mx);
        sum += e;
    }
    const double inv = 1.0 / sum;
    for (double& e : v) {
        e *= inv;
    }
}

LstmParams LstmParams::zeros(int input_dim, int hidden) {
    LstmParams p;
    p.w_x = Matrix(4 * hidden, input_dim);
    p.w_h = Matrix(4 * hidden, hidden);
    p.b = Matrix(4 * hidden, 1);
    return p;
}

void lstm_cell(const Vector& x, const Vector& h, const Vector& c,
               const LstmParams& p, Vector& h_out, Vector& c_out,
               LstmCache* cache) {
    const int d = p.hidden_size();
    require(static_cast<int>(x.size()) == p.input_size(), "lstm_cell: x dim mismatch");
    require(static_cast<int>(h.size()) == d, "lstm_cell: h dim mismatch");
    require(static_cast<int>(c.size()) == d, "lstm_cell: c dim mismatch");

    // z = W_x x + W_h h + b, gate blocks [i; f; g; o]
    Vector z = p.b.data;
    const auto exec = kernels::pick(p.w_x.size() + p.w_h.size());
    kernels::matvec_acc(p.w_x, x.data(), z.data(), exec);
    kernels::matvec_acc(p.w_h, h.data(), z.data(), exec);

    Vector gi(d), gf(d), gg(d), go(d);
    for (int j = 0; j < d; ++j) {
        gi[j] = sigmoid(z[j]);
        gf[j] = sigmoid(z[d + j]);
        gg[j] = std::tanh(z[2 * d + j]);
        go[j] = sigmoid(z[3 * d + j]);
    }

    c_out.resize(d);
    h_out.resize(d);
    Vector tc(d);
    for (int j = 0; j < d; ++j) {
        c_out[j] = gf[j] * c[j] + gi[j] * gg[j];
        tc[j] = std::tanh(c_out[j]);
        h_out[j] = go[j] * tc[j];
    }

    if (cache != nullptr) {
        cache->x = x;
        cache->h_prev = h;
        cache->c_prev = c;
        cache->gi = std::move(gi);
        cache->gf = std::move(gf);
        cache->gg = std::move(gg);
        cache->go = std::move(go);
        cache->c = c_out;
        cache->tanh_c = std::move(tc);
        cache->h = h_out;
    }
}

void lstm_cell_backward(const LstmCache& cache, const LstmParams& p,
                        const Vector& dh, const Vector& dc,
                        LstmParams& grads, Vector& dx, Vector& dh_prev,
                        Vector& dc_prev) {
    const int d = p.hidden_size();
    require(static_cast<int>(dh.size()) == d && static_cast<int>(dc.size()) == d,
            "lstm_cell_backward: upstream dim mismatch");

    // Through h' = o . tanh(c') and c' = f.c + i.g
    Vector dz(4 * d);
    for (int j = 0; j < d; ++j) {
        const double d_go = dh[j] * cache.tanh_c[j];
        const double d_c = dc[j] + dh[j] * cache.go[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
        const double d_gi = d_c * cache.gg[j];
        const double d_gf = d_c * cache.c_prev[j];
        const double d_gg = d_c * cache.gi[j];
        dc_prev[j] += d_c * cache.gf[j];

        dz[j] = d_gi * cache.gi[j] * (1.0 - cache.gi[j]);
        dz[d + j] = d_gf * cache.gf[j] * (1.0 - cache.gf[j]);
        dz[2 * d + j] = d_gg * (1.0 - cache.gg[j] * cache.gg[j]);
        dz[3 * d + j] = d_go * cache.go[j] * (1.0 - cache.go[j]);
    }

    const auto exec = kernels::pick(p.w_x.size() + p.w_h.size());
    kernels::outer_acc(grads.w_x, dz.data(), cache.x.data(), exec);
    kernels::outer_acc(grads.w_h, dz.data(), cache.h_prev.data(), exec);
    for (int j = 0; j < 4 * d; ++j) {
        grads.b.data[j] += dz[j];
    }
    kernels::matvec_t_acc(p.w_x, dz.data(), dx.data(), exec);
    kernels::matvec_t_acc(p.w_h, dz.data(), dh_prev.data(), exec);
}

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<ParamView>& params,
                           const std::vector<const Matrix*>& analytic_grads,
                           double epsilon) {
    require(epsilon > 0.0, "grad_check: epsilon must be positive");
    require(params.size() == analytic_grads.size(), "grad_check: grads count mismatch");

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Matrix* theta = params[pi].second;
        const Matrix* grad = analytic_grads[pi];
        require(theta->same_shape(*grad), "grad_check: grad shape mismatch for " + params[pi].first);

        for (std::size_t k = 0; k < theta->size(); ++k) {
            const double saved = theta->data[k];
            theta->data[k] = saved + epsilon;
            const double lp = loss_fn();
            theta->data[k] = saved - epsilon;
            const double lm = loss_fn();
            theta->data[k] = saved;

            if (!std::isfinite(lp) || !std::isfinite(lm)) {
                throw std::runtime_error("grad_check: non-finite loss while perturbing " +
                                         params[pi].first + "[" + std::to_string(k) + "]");
            }

            const double numeric = (lp - lm) / (2.0 * epsilon);
            const double analytic = grad->data[k];
            const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(analytic - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param_path =
                    params[pi].first + "[" + std::to_string(k / theta->cols) + "," +
                    std::to_string(k % theta->cols) + "]";
            }
        }
    }
    return report;
}

} // namespace dialogue_rl::numerics
