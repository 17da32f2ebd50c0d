#pragma once

#include "dialogue_rl/matrix.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dialogue_rl::numerics {

/// y = W x + b. Dimensions: W rows = len(b), W cols = len(x).
Vector affine(const Vector& x, const Matrix& w, const Vector& b);

/// Backward pass of affine: given upstream dy, accumulates dW and db and
/// returns dx. Gradients are exact (no approximation).
Vector affine_backward(const Vector& x, const Matrix& w, const Vector& dy,
                       Matrix& dw, Vector& db);

/// Numerically stable softmax (max-subtraction). Entries positive, sum 1.
Vector softmax(const Vector& v);
void softmax_inplace(Vector& v);

/// Parameters of one gated LSTM cell. Gate rows of w_x / w_h / b are stacked
/// in the order [input; forget; candidate; output], each block `hidden` rows.
struct LstmParams {
    Matrix w_x; // 4d x input_dim
    Matrix w_h; // 4d x d
    Matrix b;   // 4d x 1

    int hidden_size() const { return w_h.cols; }
    int input_size() const { return w_x.cols; }

    static LstmParams zeros(int input_dim, int hidden);
};

/// Forward activations of one cell step, kept for the backward pass.
struct LstmCache {
    Vector x, h_prev, c_prev;
    Vector gi, gf, gg, go; // post-nonlinearity gates
    Vector c, tanh_c, h;
};

/// One LSTM step: c' = f.c + i.g, h' = o.tanh(c'). Writes the cache when
/// given one.
void lstm_cell(const Vector& x, const Vector& h, const Vector& c,
               const LstmParams& p, Vector& h_out, Vector& c_out,
               LstmCache* cache = nullptr);

/// Backward through one cell step. dh/dc are upstream gradients w.r.t. the
/// step outputs; parameter gradients accumulate into `grads`; dx, dh_prev and
/// dc_prev receive (accumulate) the input-side gradients.
void lstm_cell_backward(const LstmCache& cache, const LstmParams& p,
                        const Vector& dh, const Vector& dc,
                        LstmParams& grads, Vector& dx, Vector& dh_prev,
                        Vector& dc_prev);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param_path;
};

using ParamView = std::pair<std::string, Matrix*>;

/// Central-difference check of analytic gradients: for every scalar parameter
/// compares d loss/d theta against (loss(+eps) - loss(-eps)) / 2eps with the
/// relative-error denominator floored at 1e-8. `loss_fn` must be
/// deterministic for fixed parameters; it is re-evaluated with parameters
/// perturbed in place. Throws when a perturbed loss is non-finite, naming the
/// parameter.
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<ParamView>& params,
                           const std::vector<const Matrix*>& analytic_grads,
                           double epsilon);

double sigmoid(double z);

} // namespace dialogue_rl::numerics
