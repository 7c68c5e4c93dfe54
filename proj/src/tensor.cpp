#include "premir/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "premir/errors.hpp"

namespace premir {

void ensure_finite(std::span<const double> values, const std::string& what) {
  for (double v : values)
    if (!std::isfinite(v))
      throw InternalError("non-finite value in " + what);
}

namespace {

void require_finite_input(double x, const char* fn) {
  if (!std::isfinite(x)) throw InternalError(std::string(fn) + ": non-finite input");
}

}  // namespace

double sigmoid(double x) {
  require_finite_input(x, "sigmoid");
  return 1.0 / (1.0 + std::exp(-x));
}

double tanh_act(double x) {
  require_finite_input(x, "tanh");
  return std::tanh(x);
}

double hard_sigmoid(double x) {
  require_finite_input(x, "hard_sigmoid");
  return std::clamp(0.2 * x + 0.5, 0.0, 1.0);
}

double d_sigmoid(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

double d_tanh(double x) {
  const double t = tanh_act(x);
  return 1.0 - t * t;
}

double d_hard_sigmoid(double x) {
  require_finite_input(x, "hard_sigmoid");
  return (x > -2.5 && x < 2.5) ? 0.2 : 0.0;
}

MseResult mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows != target.rows || pred.cols != target.cols)
    throw InternalError("mse_loss: shape mismatch " + std::to_string(pred.rows) + "x" +
                        std::to_string(pred.cols) + " vs " + std::to_string(target.rows) +
                        "x" + std::to_string(target.cols));
  if (pred.rows == 0) throw InternalError("mse_loss: empty prediction");

  MseResult out;
  out.gradient = Matrix(pred.rows, pred.cols);
  const double inv_m = 1.0 / static_cast<double>(pred.rows);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    out.loss += d * d;
    out.gradient.data[i] = 2.0 * inv_m * d;
  }
  out.loss *= inv_m;
  ensure_finite({&out.loss, 1}, "mse_loss");
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw InternalError("adam_step: parameter/gradient/state size mismatch");

  const AdamConfig& c = state.config;
  ++state.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= c.alpha * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
  ensure_finite(params, "adam_step parameters");
}

Vec dropout_mask(std::size_t n, double rate, Rng& stream) {
  if (rate < 0.0 || rate >= 1.0)
    throw ValidationError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  Vec mask(n, 0.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i)
    mask[i] = (stream.next_double() < rate) ? 0.0 : keep_scale;
  return mask;
}

double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<double> params, std::span<const double> analytic,
                  const GradCheckOptions& options) {
  if (params.size() != analytic.size())
    throw InternalError("grad_check: gradient size mismatch");

  std::vector<std::size_t> coords;
  if (options.max_coords > 0 && options.max_coords < params.size()) {
    Rng pick = Rng(options.subsample_seed).derive("grad_check");
    std::vector<std::size_t> all(params.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    pick.shuffle(all);
    coords.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(options.max_coords));
  } else {
    coords.resize(params.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  }

  double max_rel = 0.0;
  for (std::size_t i : coords) {
    const double saved = params[i];
    params[i] = saved + options.step;
    const double up = f(params);
    params[i] = saved - options.step;
    const double down = f(params);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double denom =
        std::max({options.denom_floor, std::abs(numeric), std::abs(analytic[i])});
    max_rel = std::max(max_rel, std::abs(numeric - analytic[i]) / denom);
  }
  return max_rel;
}

}  // namespace premir
