#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "premir/rng.hpp"

namespace premir {

using Vec = std::vector<double>;

// Row-major dense matrix, 64-bit throughout. Entries are expected to stay
// finite; boundary checks use ensure_finite rather than per-op scanning.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
};

/// Throws InternalError naming `what` if any entry is NaN/Inf.
void ensure_finite(std::span<const double> values, const std::string& what);

// --- activations ------------------------------------------------------------

double sigmoid(double x);
double tanh_act(double x);
/// clamp(0.2 x + 0.5, 0, 1)
double hard_sigmoid(double x);

double d_sigmoid(double x);       // derivative at x
double d_tanh(double x);          // derivative at x
double d_hard_sigmoid(double x);  // 0.2 inside (-2.5, 2.5), 0 outside

// Derivatives recovered from the activation value (the backward pass only
// keeps post-activation values).
inline double d_sigmoid_from_y(double y) { return y * (1.0 - y); }
inline double d_tanh_from_y(double y) { return 1.0 - y * y; }
inline double d_hard_sigmoid_from_y(double y) { return (y > 0.0 && y < 1.0) ? 0.2 : 0.0; }

// --- loss --------------------------------------------------------------------

struct MseResult {
  double loss = 0.0;
  Matrix gradient;  // dE/dpred, shape of pred
};

/// E = (1/m) sum over samples and dims of (pred - target)^2, m = pred.rows.
/// gradient = (2/m) (pred - target).
MseResult mse_loss(const Matrix& pred, const Matrix& target);

// --- Adam ---------------------------------------------------------------------

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  Vec m;  // first moment per parameter
  Vec v;  // second moment per parameter
  long t = 0;

  AdamState() = default;
  AdamState(std::size_t n, const AdamConfig& cfg)
      : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam step, in place. t increments once per call.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// --- dropout -------------------------------------------------------------------

/// Inverted-scaling dropout mask: entries are 0 with probability `rate`,
/// otherwise 1/(1-rate). Training-time only; inference never applies a mask.
Vec dropout_mask(std::size_t n, double rate, Rng& stream);

// --- gradient checking -----------------------------------------------------------

struct GradCheckOptions {
  double step = 1e-5;        // central-difference step per coordinate
  double denom_floor = 1e-5; // relative-error denominator floor
  std::size_t max_coords = 0;  // 0 = check every coordinate, else random subsample
  std::uint64_t subsample_seed = 0;
};

/// Compares `analytic` against central finite differences of `f` at `params`.
/// Returns the maximum relative error |a - n| / max(floor, |a|, |n|).
double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<double> params, std::span<const double> analytic,
                  const GradCheckOptions& options = {});

}  // namespace premir
