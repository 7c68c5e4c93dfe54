#include "premir/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "premir/errors.hpp"
#include "premir/seqdata.hpp"
#include "premir/version.hpp"

namespace premir {

namespace {

int encode_base(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'U': return 3;
    default:
      throw ValidationError("unknown sequence symbol '" + std::string(1, c) + "'");
  }
}

int encode_bracket(char c) {
  switch (c) {
    case '(': return 0;
    case '.': return 1;
    case ')': return 2;
    default:
      throw ValidationError("unknown structure symbol '" + std::string(1, c) + "'");
  }
}

std::vector<int> encode(const std::string& text, int (*enc)(char)) {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(enc(c));
  return out;
}

// Enumeration of the trainable blocks in a fixed order; absent blocks are
// empty and contribute nothing to the flat view.
struct BlockRef {
  const char* name;
  Matrix* matrix = nullptr;
  Vec* vec = nullptr;

  std::size_t size() const { return matrix ? matrix->size() : vec->size(); }
  double* data() { return matrix ? matrix->data.data() : vec->data(); }
  const double* data() const { return matrix ? matrix->data.data() : vec->data(); }
};

std::vector<BlockRef> blocks(ModelWeights& w) {
  return {
      {"embed_seq", &w.embed_seq}, {"embed_fwd", &w.embed_fwd}, {"embed_bwd", &w.embed_bwd},
      {"lstm_seq.w", &w.lstm_seq.w}, {"lstm_seq.u", &w.lstm_seq.u},
      {"lstm_seq.b", nullptr, &w.lstm_seq.b},
      {"lstm_fwd.w", &w.lstm_fwd.w}, {"lstm_fwd.u", &w.lstm_fwd.u},
      {"lstm_fwd.b", nullptr, &w.lstm_fwd.b},
      {"lstm_bwd.w", &w.lstm_bwd.w}, {"lstm_bwd.u", &w.lstm_bwd.u},
      {"lstm_bwd.b", nullptr, &w.lstm_bwd.b},
      {"fc_seq.w", &w.fc_seq.w}, {"fc_seq.b", nullptr, &w.fc_seq.b},
      {"fc_str.w", &w.fc_str.w}, {"fc_str.b", nullptr, &w.fc_str.b},
      {"fc_multi.w", &w.fc_multi.w}, {"fc_multi.b", nullptr, &w.fc_multi.b},
  };
}

std::vector<BlockRef> blocks(const ModelWeights& w) {
  return blocks(const_cast<ModelWeights&>(w));
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in,
                      std::size_t fan_out, Rng& stream) {
  Matrix m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : m.data) v = stream.next_uniform(-limit, limit);
  return m;
}

// Modified Gram-Schmidt on the columns of a random Gaussian square matrix.
Matrix orthogonal_matrix(std::size_t n, Rng& stream) {
  Matrix q(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    Vec v(n);
    double norm = 0.0;
    do {
      for (std::size_t r = 0; r < n; ++r) v[r] = stream.next_gaussian();
      for (std::size_t prev = 0; prev < col; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += q(r, prev) * v[r];
        for (std::size_t r = 0; r < n; ++r) v[r] -= dot * q(r, prev);
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (std::size_t r = 0; r < n; ++r) q(r, col) = v[r] / norm;
  }
  return q;
}

LstmParams lstm_zeros(std::size_t input_dim, std::size_t hidden) {
  LstmParams p;
  p.w = Matrix(4 * hidden, input_dim);
  p.u = Matrix(4 * hidden, hidden);
  p.b = Vec(4 * hidden, 0.0);
  return p;
}

LstmParams lstm_init(std::size_t input_dim, std::size_t hidden, Rng stream) {
  LstmParams p = lstm_zeros(input_dim, hidden);
  Rng ws = stream.derive("w");
  Rng us = stream.derive("u");
  for (std::size_t gate = 0; gate < 4; ++gate) {
    const Matrix gw = glorot_uniform(hidden, input_dim, input_dim, hidden, ws);
    const Matrix gu = orthogonal_matrix(hidden, us);
    for (std::size_t r = 0; r < hidden; ++r)
      for (std::size_t c = 0; c < input_dim; ++c) p.w(gate * hidden + r, c) = gw(r, c);
    for (std::size_t r = 0; r < hidden; ++r)
      for (std::size_t c = 0; c < hidden; ++c) p.u(gate * hidden + r, c) = gu(r, c);
  }
  // forget-gate bias 1 keeps early cell memory open
  for (std::size_t r = 0; r < hidden; ++r) p.b[hidden + r] = 1.0;
  return p;
}

DenseParams dense_zeros(std::size_t in_dim, std::size_t out_dim) {
  return {Matrix(out_dim, in_dim), Vec(out_dim, 0.0)};
}

DenseParams dense_init(std::size_t in_dim, std::size_t out_dim, Rng stream) {
  DenseParams p = dense_zeros(in_dim, out_dim);
  p.w = glorot_uniform(out_dim, in_dim, in_dim, out_dim, stream);
  return p;
}

Matrix embed_init(std::size_t symbols, std::size_t dim, Rng stream) {
  Matrix m(symbols, dim);
  for (double& v : m.data) v = stream.next_uniform(-0.05, 0.05);
  return m;
}

constexpr std::size_t kOutputs = 2;

}  // namespace

ModelWeights ModelWeights::zeros(const Hyperparameters& hp) {
  hp.validate();
  ModelWeights w;
  w.hp = hp;
  const std::size_t h = hp.hidden_size;
  if (w.uses_sequence()) {
    w.embed_seq = Matrix(4, hp.embed_seq_dim);
    w.lstm_seq = lstm_zeros(hp.embed_seq_dim, h);
    w.fc_seq = dense_zeros(h, kOutputs);
  }
  if (w.uses_structure()) {
    w.embed_fwd = Matrix(3, hp.embed_str_dim);
    w.lstm_fwd = lstm_zeros(hp.embed_str_dim, h);
    if (w.split_structure()) {
      w.embed_bwd = Matrix(3, hp.embed_str_dim);
      w.lstm_bwd = lstm_zeros(hp.embed_str_dim, h);
      w.fc_str = dense_zeros(2 * h, kOutputs);
    } else {
      w.fc_str = dense_zeros(h, kOutputs);
    }
  }
  const std::size_t multi_in =
      (hp.modality == Modality::multimodal) ? 2 * kOutputs : kOutputs;
  w.fc_multi = dense_zeros(multi_in, kOutputs);
  return w;
}

ModelWeights ModelWeights::init(const Hyperparameters& hp, Rng stream) {
  ModelWeights w = zeros(hp);
  const std::size_t h = hp.hidden_size;
  if (w.uses_sequence()) {
    w.embed_seq = embed_init(4, hp.embed_seq_dim, stream.derive("embed_seq"));
    w.lstm_seq = lstm_init(hp.embed_seq_dim, h, stream.derive("lstm_seq"));
    w.fc_seq = dense_init(h, kOutputs, stream.derive("fc_seq"));
  }
  if (w.uses_structure()) {
    w.embed_fwd = embed_init(3, hp.embed_str_dim, stream.derive("embed_fwd"));
    w.lstm_fwd = lstm_init(hp.embed_str_dim, h, stream.derive("lstm_fwd"));
    if (w.split_structure()) {
      w.embed_bwd = embed_init(3, hp.embed_str_dim, stream.derive("embed_bwd"));
      w.lstm_bwd = lstm_init(hp.embed_str_dim, h, stream.derive("lstm_bwd"));
      w.fc_str = dense_init(2 * h, kOutputs, stream.derive("fc_str"));
    } else {
      w.fc_str = dense_init(h, kOutputs, stream.derive("fc_str"));
    }
  }
  w.fc_multi = dense_init(w.fc_multi.w.cols, kOutputs, stream.derive("fc_multi"));
  return w;
}

std::size_t ModelWeights::param_count() const {
  std::size_t n = 0;
  for (const BlockRef& b : blocks(*this)) n += b.size();
  return n;
}

Vec ModelWeights::flatten() const {
  Vec flat;
  flat.reserve(param_count());
  for (const BlockRef& b : blocks(*this))
    flat.insert(flat.end(), b.data(), b.data() + b.size());
  return flat;
}

void ModelWeights::assign_from_flat(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw InternalError("assign_from_flat: size mismatch");
  std::size_t offset = 0;
  for (BlockRef& b : blocks(*this)) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + b.size()), b.data());
    offset += b.size();
  }
}

// --- forward / backward -------------------------------------------------------

namespace {

// Post-activation values kept per timestep; hard-sigmoid and tanh derivatives
// are recovered from them during the backward sweep.
struct LstmCache {
  std::vector<int> symbols;
  std::vector<Vec> gate_i, gate_f, gate_g, gate_o;
  std::vector<Vec> c, tanh_c, h;

  std::size_t steps() const { return h.size(); }
};

// One recurrence step: gates from x_t and h_{t-1}, then the cell update.
void lstm_step(const LstmParams& p, const double* x, std::size_t dim, const Vec& h_prev,
               const Vec& c_prev, Vec& gi, Vec& gf, Vec& gg, Vec& go, Vec& c, Vec& tc,
               Vec& h) {
  const std::size_t hidden = p.hidden();
  Vec z(4 * hidden);
  for (std::size_t r = 0; r < 4 * hidden; ++r) {
    double acc = p.b[r];
    const double* wr = &p.w.data[r * dim];
    for (std::size_t cidx = 0; cidx < dim; ++cidx) acc += wr[cidx] * x[cidx];
    const double* ur = &p.u.data[r * hidden];
    for (std::size_t cidx = 0; cidx < hidden; ++cidx) acc += ur[cidx] * h_prev[cidx];
    z[r] = acc;
  }
  for (std::size_t n = 0; n < hidden; ++n) {
    gi[n] = hard_sigmoid(z[n]);
    gf[n] = hard_sigmoid(z[hidden + n]);
    gg[n] = tanh_act(z[2 * hidden + n]);
    go[n] = hard_sigmoid(z[3 * hidden + n]);
    c[n] = gf[n] * c_prev[n] + gi[n] * gg[n];
    tc[n] = std::tanh(c[n]);
    h[n] = go[n] * tc[n];
  }
}

void lstm_forward_cached(const std::vector<int>& symbols, const Matrix& embed,
                         const LstmParams& p, LstmCache& cache) {
  const std::size_t hidden = p.hidden();
  const std::size_t dim = embed.cols;
  const std::size_t T = symbols.size();
  cache.symbols = symbols;
  cache.gate_i.assign(T, Vec());
  cache.gate_f.assign(T, Vec());
  cache.gate_g.assign(T, Vec());
  cache.gate_o.assign(T, Vec());
  cache.c.assign(T, Vec());
  cache.tanh_c.assign(T, Vec());
  cache.h.assign(T, Vec());

  Vec h_prev(hidden, 0.0);
  Vec c_prev(hidden, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = &embed.data[static_cast<std::size_t>(symbols[t]) * dim];
    Vec gi(hidden), gf(hidden), gg(hidden), go(hidden), c(hidden), tc(hidden), h(hidden);
    lstm_step(p, x, dim, h_prev, c_prev, gi, gf, gg, go, c, tc, h);
    cache.gate_i[t] = std::move(gi);
    cache.gate_f[t] = std::move(gf);
    cache.gate_g[t] = std::move(gg);
    cache.gate_o[t] = std::move(go);
    cache.c[t] = c;
    cache.tanh_c[t] = std::move(tc);
    cache.h[t] = h;
    c_prev = std::move(c);
    h_prev = std::move(h);
  }
}

/// Backpropagation through time from the gradient of the final hidden state.
void lstm_backward(const LstmParams& p, const Matrix& embed, const LstmCache& cache,
                   const Vec& dh_final, LstmParams& grads, Matrix& embed_grads) {
  const std::size_t hidden = p.hidden();
  const std::size_t dim = embed.cols;
  const std::size_t T = cache.steps();
  if (T == 0) return;

  Vec dh = dh_final;
  Vec dc(hidden, 0.0);
  Vec dz(4 * hidden);
  const Vec zero(hidden, 0.0);

  for (std::size_t t = T; t-- > 0;) {
    const Vec& gi = cache.gate_i[t];
    const Vec& gf = cache.gate_f[t];
    const Vec& gg = cache.gate_g[t];
    const Vec& go = cache.gate_o[t];
    const Vec& tc = cache.tanh_c[t];
    const Vec& c_prev = (t > 0) ? cache.c[t - 1] : zero;
    const Vec& h_prev = (t > 0) ? cache.h[t - 1] : zero;

    for (std::size_t n = 0; n < hidden; ++n) {
      const double d_out = dh[n] * tc[n];
      const double dct = dc[n] + dh[n] * go[n] * (1.0 - tc[n] * tc[n]);
      const double d_in = dct * gg[n];
      const double d_forget = dct * c_prev[n];
      const double d_cand = dct * gi[n];
      dz[n] = d_in * d_hard_sigmoid_from_y(gi[n]);
      dz[hidden + n] = d_forget * d_hard_sigmoid_from_y(gf[n]);
      dz[2 * hidden + n] = d_cand * (1.0 - gg[n] * gg[n]);
      dz[3 * hidden + n] = d_out * d_hard_sigmoid_from_y(go[n]);
      dc[n] = dct * gf[n];  // flows to t-1
    }

    const double* x = &embed.data[static_cast<std::size_t>(cache.symbols[t]) * dim];
    double* ex = &embed_grads.data[static_cast<std::size_t>(cache.symbols[t]) * dim];
    for (std::size_t r = 0; r < 4 * hidden; ++r) {
      const double g = dz[r];
      grads.b[r] += g;
      double* gw = &grads.w.data[r * dim];
      for (std::size_t cidx = 0; cidx < dim; ++cidx) gw[cidx] += g * x[cidx];
      double* gu = &grads.u.data[r * hidden];
      for (std::size_t cidx = 0; cidx < hidden; ++cidx) gu[cidx] += g * h_prev[cidx];
      const double* wr = &p.w.data[r * dim];
      for (std::size_t cidx = 0; cidx < dim; ++cidx) ex[cidx] += g * wr[cidx];
    }
    for (std::size_t n = 0; n < hidden; ++n) {
      double acc = 0.0;
      for (std::size_t r = 0; r < 4 * hidden; ++r) acc += p.u.data[r * hidden + n] * dz[r];
      dh[n] = acc;
    }
  }
}

Vec dense_forward(const DenseParams& p, const Vec& in) {
  Vec out(p.b.size());
  for (std::size_t r = 0; r < p.b.size(); ++r) {
    double acc = p.b[r];
    const double* wr = &p.w.data[r * p.w.cols];
    for (std::size_t c = 0; c < p.w.cols; ++c) acc += wr[c] * in[c];
    out[r] = sigmoid(acc);
  }
  return out;
}

/// dE/d(input) given dE/d(output); accumulates weight gradients.
Vec dense_backward(const DenseParams& p, const Vec& in, const Vec& out, const Vec& d_out,
                   DenseParams& grads) {
  Vec d_in(p.w.cols, 0.0);
  for (std::size_t r = 0; r < p.b.size(); ++r) {
    const double dz = d_out[r] * d_sigmoid_from_y(out[r]);
    grads.b[r] += dz;
    double* gw = &grads.w.data[r * p.w.cols];
    const double* wr = &p.w.data[r * p.w.cols];
    for (std::size_t c = 0; c < p.w.cols; ++c) {
      gw[c] += dz * in[c];
      d_in[c] += dz * wr[c];
    }
  }
  return d_in;
}

struct FullCache {
  LstmCache seq, fwd, bwd;
  Vec h_seq, h_fwd, h_bwd;        // final branch states (zero vectors when T = 0)
  Vec in_seq, in_str, in_multi;   // dense inputs, after dropout in train mode
  Vec mask_seq, mask_str, mask_multi;  // empty in infer mode
  Vec y_seq, y_str, y_hat;
};

Vec final_h(const LstmCache& cache, std::size_t hidden) {
  return cache.steps() == 0 ? Vec(hidden, 0.0) : cache.h.back();
}

void apply_mask(Vec& values, const Vec& mask) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= mask[i];
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void run_forward(const PreparedSample& sample, const ModelWeights& w, RunMode mode,
                 Rng* dropout_stream, FullCache& cache) {
  const Hyperparameters& hp = w.hp;
  const std::size_t hidden = hp.hidden_size;
  const bool train_mode = mode == RunMode::train;
  if (train_mode && hp.dropout_rate > 0.0 && dropout_stream == nullptr)
    throw InternalError("forward: train mode needs a dropout stream");

  auto mask_or_identity = [&](std::size_t n, Vec& mask_out) -> void {
    if (train_mode && hp.dropout_rate > 0.0)
      mask_out = dropout_mask(n, hp.dropout_rate, *dropout_stream);
    else
      mask_out.clear();
  };

  if (w.uses_sequence()) {
    lstm_forward_cached(encode(sample.sequence, encode_base), w.embed_seq, w.lstm_seq, cache.seq);
    cache.h_seq = final_h(cache.seq, hidden);
    cache.in_seq = cache.h_seq;
    mask_or_identity(cache.in_seq.size(), cache.mask_seq);
    if (!cache.mask_seq.empty()) apply_mask(cache.in_seq, cache.mask_seq);
    cache.y_seq = dense_forward(w.fc_seq, cache.in_seq);
  }
  if (w.uses_structure()) {
    if (w.split_structure()) {
      lstm_forward_cached(encode(sample.forward, encode_bracket), w.embed_fwd, w.lstm_fwd, cache.fwd);
      lstm_forward_cached(encode(sample.backward_flipped, encode_bracket), w.embed_bwd, w.lstm_bwd,
                   cache.bwd);
      cache.h_fwd = final_h(cache.fwd, hidden);
      cache.h_bwd = final_h(cache.bwd, hidden);
      cache.in_str = concat(cache.h_fwd, cache.h_bwd);
    } else {
      lstm_forward_cached(encode(sample.structure, encode_bracket), w.embed_fwd, w.lstm_fwd,
                   cache.fwd);
      cache.h_fwd = final_h(cache.fwd, hidden);
      cache.in_str = cache.h_fwd;
    }
    mask_or_identity(cache.in_str.size(), cache.mask_str);
    if (!cache.mask_str.empty()) apply_mask(cache.in_str, cache.mask_str);
    cache.y_str = dense_forward(w.fc_str, cache.in_str);
  }

  switch (hp.modality) {
    case Modality::multimodal: cache.in_multi = concat(cache.y_seq, cache.y_str); break;
    case Modality::seq_only: cache.in_multi = cache.y_seq; break;
    case Modality::str_only: cache.in_multi = cache.y_str; break;
  }
  mask_or_identity(cache.in_multi.size(), cache.mask_multi);
  if (!cache.mask_multi.empty()) apply_mask(cache.in_multi, cache.mask_multi);
  cache.y_hat = dense_forward(w.fc_multi, cache.in_multi);
}

/// Accumulates dE/dW into `grads` for one sample, given dE/dy_hat.
void run_backward(const ModelWeights& w, const FullCache& cache, const Vec& d_y_hat,
                  ModelWeights& grads) {
  Vec d_multi_in =
      dense_backward(w.fc_multi, cache.in_multi, cache.y_hat, d_y_hat, grads.fc_multi);
  if (!cache.mask_multi.empty()) apply_mask(d_multi_in, cache.mask_multi);

  Vec d_y_seq, d_y_str;
  switch (w.hp.modality) {
    case Modality::multimodal:
      d_y_seq.assign(d_multi_in.begin(), d_multi_in.begin() + 2);
      d_y_str.assign(d_multi_in.begin() + 2, d_multi_in.end());
      break;
    case Modality::seq_only: d_y_seq = d_multi_in; break;
    case Modality::str_only: d_y_str = d_multi_in; break;
  }

  if (w.uses_sequence()) {
    Vec d_in = dense_backward(w.fc_seq, cache.in_seq, cache.y_seq, d_y_seq, grads.fc_seq);
    if (!cache.mask_seq.empty()) apply_mask(d_in, cache.mask_seq);
    lstm_backward(w.lstm_seq, w.embed_seq, cache.seq, d_in, grads.lstm_seq, grads.embed_seq);
  }
  if (w.uses_structure()) {
    Vec d_in = dense_backward(w.fc_str, cache.in_str, cache.y_str, d_y_str, grads.fc_str);
    if (!cache.mask_str.empty()) apply_mask(d_in, cache.mask_str);
    if (w.split_structure()) {
      const std::size_t hidden = w.hp.hidden_size;
      Vec d_fwd(d_in.begin(), d_in.begin() + static_cast<std::ptrdiff_t>(hidden));
      Vec d_bwd(d_in.begin() + static_cast<std::ptrdiff_t>(hidden), d_in.end());
      lstm_backward(w.lstm_fwd, w.embed_fwd, cache.fwd, d_fwd, grads.lstm_fwd,
                    grads.embed_fwd);
      lstm_backward(w.lstm_bwd, w.embed_bwd, cache.bwd, d_bwd, grads.lstm_bwd,
                    grads.embed_bwd);
    } else {
      lstm_backward(w.lstm_fwd, w.embed_fwd, cache.fwd, d_in, grads.lstm_fwd,
                    grads.embed_fwd);
    }
  }
}

std::array<double, 2> one_hot_target(int label) {
  // label 0 -> (1,0), label 1 -> (0,1); y_hat[1] is the positive-class output
  return label == 1 ? std::array<double, 2>{0.0, 1.0} : std::array<double, 2>{1.0, 0.0};
}

}  // namespace

ForwardTrace forward(const PreparedSample& sample, const ModelWeights& weights, RunMode mode,
                     Rng* dropout_stream) {
  FullCache cache;
  run_forward(sample, weights, mode, dropout_stream, cache);
  ForwardTrace trace;
  trace.seq = {cache.seq.h, cache.seq.c};
  trace.fwd = {cache.fwd.h, cache.fwd.c};
  trace.bwd = {cache.bwd.h, cache.bwd.c};
  trace.h_seq = cache.h_seq;
  trace.h_fwd = cache.h_fwd;
  trace.h_bwd = cache.h_bwd;
  trace.y_seq = cache.y_seq;
  trace.y_str = cache.y_str;
  trace.y_hat = cache.y_hat;
  return trace;
}

BatchGradients batch_gradients(const std::vector<PreparedSample>& batch,
                               const ModelWeights& weights, RunMode mode,
                               Rng* dropout_stream) {
  if (batch.empty()) throw InternalError("batch_gradients: empty batch");
  BatchGradients out;
  out.grads = ModelWeights::zeros(weights.hp);
  const double inv_m = 1.0 / static_cast<double>(batch.size());

  for (std::size_t s = 0; s < batch.size(); ++s) {
    Rng sample_stream = dropout_stream ? dropout_stream->derive(s) : Rng(0);
    FullCache cache;
    run_forward(batch[s], weights, mode, dropout_stream ? &sample_stream : nullptr, cache);
    const std::array<double, 2> target = one_hot_target(batch[s].label);
    Vec d_y_hat(2);
    for (std::size_t k = 0; k < 2; ++k) {
      const double diff = cache.y_hat[k] - target[k];
      out.loss += inv_m * diff * diff;
      d_y_hat[k] = 2.0 * inv_m * diff;
    }
    run_backward(weights, cache, d_y_hat, out.grads);
  }
  ensure_finite({&out.loss, 1}, "batch loss");
  return out;
}

TrainResult train(const std::vector<PreparedSample>& data, const Hyperparameters& hp,
                  const Rng& stream, const TrainOptions& options) {
  hp.validate();
  if (data.empty()) throw ValidationError("train: empty dataset");
  bool has_pos = false, has_neg = false;
  for (const PreparedSample& s : data) (s.label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ValidationError("train: need both classes in the training set");

  TrainResult result;
  result.weights = ModelWeights::init(hp, stream.derive("init"));
  AdamState adam(result.weights.param_count(), hp.adam);
  Rng shuffle_root = stream.derive("shuffle");
  Rng dropout_root = stream.derive("dropout");

  std::vector<bool> snapshot_wanted;
  if (options.heldout != nullptr) {
    snapshot_wanted.assign(hp.epochs + 1, false);
    for (std::size_t e : options.snapshot_epochs)
      if (e >= 1 && e <= hp.epochs) snapshot_wanted[e] = true;
  }

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    Rng epoch_shuffle = shuffle_root.derive(epoch);
    Rng epoch_dropout = dropout_root.derive(epoch);
    const auto batches = minibatches(data.size(), hp.batch_size, epoch_shuffle);

    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<PreparedSample> batch;
      batch.reserve(batches[b].size());
      for (std::size_t idx : batches[b]) batch.push_back(data[idx]);

      Rng batch_dropout = epoch_dropout.derive(b);
      const bool use_dropout = hp.dropout_rate > 0.0;
      BatchGradients bg = batch_gradients(batch, result.weights, RunMode::train,
                                          use_dropout ? &batch_dropout : nullptr);
      epoch_loss += bg.loss * static_cast<double>(batch.size());

      Vec flat_params = result.weights.flatten();
      const Vec flat_grads = bg.grads.flatten();
      adam_step(flat_params, flat_grads, adam);
      result.weights.assign_from_flat(flat_params);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(data.size()));

    if (options.heldout != nullptr && snapshot_wanted[epoch]) {
      const std::vector<Prediction> preds = predict(*options.heldout, result.weights);
      std::vector<int> labels, outcomes;
      labels.reserve(preds.size());
      outcomes.reserve(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i) {
        outcomes.push_back(preds[i].label);
        labels.push_back((*options.heldout)[i].label);
      }
      const ConfusionCounts counts = confusion(outcomes, labels);
      result.heldout_metrics.push_back(
          {epoch, balanced_metrics(counts), raw_metrics(counts)});
    }
  }
  return result;
}

std::vector<Prediction> predict(const std::vector<PreparedSample>& samples,
                                const ModelWeights& weights) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (const PreparedSample& s : samples) {
    FullCache cache;
    run_forward(s, weights, RunMode::infer, nullptr, cache);
    Prediction p;
    p.id = s.id;
    p.y_hat = {cache.y_hat[0], cache.y_hat[1]};
    p.label = cache.y_hat[1] > cache.y_hat[0] ? 1 : 0;  // tie -> negative
    p.score = cache.y_hat[1] / (cache.y_hat[0] + cache.y_hat[1]);
    out.push_back(std::move(p));
  }
  return out;
}

TraceExport capture_trace(const PreparedSample& sample, const ModelWeights& weights) {
  FullCache cache;
  run_forward(sample, weights, RunMode::infer, nullptr, cache);

  const std::size_t hidden = weights.hp.hidden_size;
  const std::size_t length = sample.sequence.size();
  TraceExport out;
  out.id = sample.id;
  out.sequence = sample.sequence;
  out.structure = sample.structure;
  out.split_index = sample.split_index;

  if (weights.uses_sequence()) {
    out.seq_cells = Matrix(hidden, length);
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t n = 0; n < hidden; ++n) out.seq_cells(n, t) = cache.seq.c[t][n];
  }
  if (weights.uses_structure()) {
    out.str_cells = Matrix(hidden, length);
    if (weights.split_structure()) {
      const std::size_t k = sample.split_index;
      // columns left of k follow the forward branch; the rest re-flip the
      // backward branch so column p describes structure position p+1
      for (std::size_t p = 0; p < length; ++p) {
        const Vec& c = (p + 1 < k) ? cache.fwd.c[p] : cache.bwd.c[length - 1 - p];
        for (std::size_t n = 0; n < hidden; ++n) out.str_cells(n, p) = c[n];
      }
    } else {
      for (std::size_t p = 0; p < length; ++p)
        for (std::size_t n = 0; n < hidden; ++n) out.str_cells(n, p) = cache.fwd.c[p][n];
    }
  }
  return out;
}

// --- serialization --------------------------------------------------------------

nlohmann::json weights_to_json(const ModelWeights& w) {
  nlohmann::json j;
  j["format"] = "premir-weights";
  j["version"] = 1;
  j["hyperparameters"] = to_json(w.hp);
  nlohmann::json blocks_json = nlohmann::json::object();
  for (const BlockRef& b : blocks(w)) {
    if (b.size() == 0) continue;
    nlohmann::json entry;
    if (b.matrix) {
      entry["rows"] = b.matrix->rows;
      entry["cols"] = b.matrix->cols;
      entry["data"] = b.matrix->data;
    } else {
      entry["rows"] = b.vec->size();
      entry["cols"] = 1;
      entry["data"] = *b.vec;
    }
    blocks_json[b.name] = std::move(entry);
  }
  j["blocks"] = std::move(blocks_json);
  return j;
}

ModelWeights weights_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j["format"] != "premir-weights")
    throw ValidationError("not a premir weights file");
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw ValidationError("unsupported weights file version");

  const Hyperparameters hp = hyperparameters_from_json(j.at("hyperparameters"));
  ModelWeights w = ModelWeights::zeros(hp);
  const nlohmann::json& blocks_json = j.at("blocks");
  for (BlockRef& b : blocks(w)) {
    if (b.size() == 0) {
      if (blocks_json.contains(b.name))
        throw ValidationError(std::string("weights file has unexpected block \"") + b.name +
                              "\" for these hyperparameters");
      continue;
    }
    if (!blocks_json.contains(b.name))
      throw ValidationError(std::string("weights file missing block \"") + b.name + "\"");
    const nlohmann::json& entry = blocks_json.at(b.name);
    const std::size_t rows = entry.at("rows").get<std::size_t>();
    const std::size_t cols = entry.at("cols").get<std::size_t>();
    const std::size_t expect_rows = b.matrix ? b.matrix->rows : b.vec->size();
    const std::size_t expect_cols = b.matrix ? b.matrix->cols : 1;
    if (rows != expect_rows || cols != expect_cols)
      throw ValidationError(std::string("weights block \"") + b.name + "\" has shape " +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            ", expected " + std::to_string(expect_rows) + "x" +
                            std::to_string(expect_cols));
    const Vec data = entry.at("data").get<Vec>();
    if (data.size() != b.size())
      throw ValidationError(std::string("weights block \"") + b.name + "\" has wrong size");
    std::copy(data.begin(), data.end(), b.data());
    ensure_finite({b.data(), b.size()}, std::string("weights block ") + b.name);
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const ModelWeights& w,
                  const nlohmann::json& provenance) {
  nlohmann::json j = weights_to_json(w);
  j["provenance"] = provenance;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write weights file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open weights file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed weights file " + path.string() + ": " + e.what());
  }
  return weights_from_json(j);
}

}  // namespace premir
