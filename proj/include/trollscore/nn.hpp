#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/rng.hpp"
#include "trollscore/trajectory.hpp"

namespace trollscore {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Training hyper-parameters. Defaults: four recurrent layers of width 64
// with dropout after each, Adam at the usual constants, early stopping on
// validation loss.
struct TrainConfig {
  std::size_t window = 200;           // L
  int input_size = kPairAlphabetSize; // one-hot width (3 for action-only)
  std::vector<int> hidden_sizes = {64, 64, 64, 64};
  double dropout_rate = 0.2;
  bool all_sigmoid_cell = false;  // replace tanh by sigmoid inside the cell
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  std::size_t early_stop_patience = 5;
  double grad_clip_norm = 5.0;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (window == 0) throw DataError("config: window length must be >= 1");
    if (input_size <= 0) throw DataError("config: input size must be positive");
    if (hidden_sizes.empty()) throw DataError("config: need at least one layer");
    for (int h : hidden_sizes) {
      if (h <= 0) throw DataError("config: hidden sizes must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
      throw DataError("config: dropout rate must be in [0, 1)");
    }
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
      throw DataError("config: Adam betas must be in (0, 1)");
    }
    if (learning_rate <= 0.0 || epsilon <= 0.0 || grad_clip_norm <= 0.0) {
      throw DataError("config: learning rate, epsilon, clip norm must be positive");
    }
    if (batch_size == 0 || max_epochs == 0) {
      throw DataError("config: batch size and max epochs must be positive");
    }
  }
};

enum Gate { kGateInput = 0, kGateForget = 1, kGateCell = 2, kGateOutput = 3 };
inline constexpr int kGates = 4;

struct MatView {
  double* data = nullptr;
  int rows = 0;
  int cols = 0;

  double* row(int r) { return data + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data + static_cast<std::size_t>(r) * cols; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct VecView {
  double* data = nullptr;
  int size = 0;

  double& operator[](int i) { return data[i]; }
  double operator[](int i) const { return data[i]; }
};

// All learnable parameters in one flat buffer. Per layer and gate: an
// input-to-hidden matrix, a hidden-to-hidden matrix, and a bias vector,
// followed by the dense head. Flat storage keeps Adam, clipping,
// serialization, and finite differencing to plain loops over one array.
class LstmParams {
 public:
  LstmParams() = default;

  LstmParams(int input_size, std::vector<int> hidden_sizes, bool all_sigmoid)
      : input_size_(input_size),
        hidden_(std::move(hidden_sizes)),
        all_sigmoid_(all_sigmoid) {
    std::size_t total = 0;
    int in = input_size_;
    for (int h : hidden_) {
      wx_off_.push_back(total);
      total += static_cast<std::size_t>(kGates) * h * in;
      wh_off_.push_back(total);
      total += static_cast<std::size_t>(kGates) * h * h;
      b_off_.push_back(total);
      total += static_cast<std::size_t>(kGates) * h;
      in = h;
    }
    dense_w_off_ = total;
    total += static_cast<std::size_t>(hidden_.back());
    dense_b_off_ = total;
    total += 1;
    theta_.assign(total, 0.0);
  }

  int input_size() const { return input_size_; }
  int n_layers() const { return static_cast<int>(hidden_.size()); }
  int hidden(int layer) const { return hidden_[layer]; }
  const std::vector<int>& hidden_sizes() const { return hidden_; }
  int layer_input(int layer) const {
    return layer == 0 ? input_size_ : hidden_[layer - 1];
  }
  bool all_sigmoid() const { return all_sigmoid_; }

  MatView w_x(int layer, int gate) {
    int h = hidden_[layer], in = layer_input(layer);
    return {theta_.data() + wx_off_[layer] + static_cast<std::size_t>(gate) * h * in,
            h, in};
  }
  MatView w_h(int layer, int gate) {
    int h = hidden_[layer];
    return {theta_.data() + wh_off_[layer] + static_cast<std::size_t>(gate) * h * h,
            h, h};
  }
  VecView bias(int layer, int gate) {
    int h = hidden_[layer];
    return {theta_.data() + b_off_[layer] + static_cast<std::size_t>(gate) * h, h};
  }
  VecView dense_w() { return {theta_.data() + dense_w_off_, hidden_.back()}; }
  double& dense_b() { return theta_[dense_b_off_]; }

  MatView w_x(int layer, int gate) const {
    return const_cast<LstmParams*>(this)->w_x(layer, gate);
  }
  MatView w_h(int layer, int gate) const {
    return const_cast<LstmParams*>(this)->w_h(layer, gate);
  }
  VecView bias(int layer, int gate) const {
    return const_cast<LstmParams*>(this)->bias(layer, gate);
  }
  VecView dense_w() const { return const_cast<LstmParams*>(this)->dense_w(); }
  double dense_b() const { return theta_[dense_b_off_]; }

  std::vector<double>& flat() { return theta_; }
  const std::vector<double>& flat() const { return theta_; }
  std::size_t size() const { return theta_.size(); }

  bool all_finite() const {
    for (double v : theta_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // Same shape with zeroed values; gradient and moment buffers.
  LstmParams zeros_like() const {
    LstmParams p(input_size_, hidden_, all_sigmoid_);
    return p;
  }

  bool operator==(const LstmParams& o) const {
    return input_size_ == o.input_size_ && hidden_ == o.hidden_ &&
           all_sigmoid_ == o.all_sigmoid_ && theta_ == o.theta_;
  }

 private:
  int input_size_ = 0;
  std::vector<int> hidden_;
  bool all_sigmoid_ = false;
  std::vector<std::size_t> wx_off_, wh_off_, b_off_;
  std::size_t dense_w_off_ = 0, dense_b_off_ = 0;
  std::vector<double> theta_;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Xavier-uniform weights, zero biases except forget-gate biases at 1.
inline LstmParams init_params(const TrainConfig& config, std::uint64_t rng_seed) {
  config.validate();
  LstmParams p(config.input_size, config.hidden_sizes, config.all_sigmoid_cell);
  Rng rng(rng_seed);
  auto xavier_fill = [&](MatView m, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int r = 0; r < m.rows; ++r) {
      double* row = m.row(r);
      for (int c = 0; c < m.cols; ++c) row[c] = rng.uniform(-bound, bound);
    }
  };
  for (int l = 0; l < p.n_layers(); ++l) {
    const int h = p.hidden(l), in = p.layer_input(l);
    for (int g = 0; g < kGates; ++g) {
      xavier_fill(p.w_x(l, g), in, h);
      xavier_fill(p.w_h(l, g), h, h);
      if (g == kGateForget) {
        VecView b = p.bias(l, g);
        for (int i = 0; i < b.size; ++i) b[i] = 1.0;
      }
    }
  }
  {
    VecView w = p.dense_w();
    const double bound = std::sqrt(6.0 / (p.hidden(p.n_layers() - 1) + 1));
    for (int i = 0; i < w.size; ++i) w[i] = rng.uniform(-bound, bound);
  }
  return p;
}

// Per-timestep, per-layer activations recorded during a training-mode
// forward pass; everything backward-through-time needs.
struct ForwardCache {
  std::size_t T = 0;
  // [layer][t] -> vector(h)
  std::vector<std::vector<std::vector<double>>> gate_i, gate_f, gate_g, gate_o;
  std::vector<std::vector<std::vector<double>>> cell, cell_act, hidden, dropped;
  // dropout masks, already scaled by 1/(1-p); empty when dropout is off
  std::vector<std::vector<std::vector<double>>> mask;
  std::vector<int> input_codes;
  double logit = 0.0;
  double prob = 0.5;
  bool valid = false;
};

namespace detail {

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline double cell_act(double x, bool all_sigmoid) {
  return all_sigmoid ? sigmoid(x) : std::tanh(x);
}

}  // namespace detail

// Scratch buffers for an inference pass; reuse one per worker thread.
struct InferWorkspace {
  std::vector<std::vector<double>> h, c, x;
};

// Inference-mode forward pass: dropout off, no cache, pure in (params, codes).
inline double forward_infer(const LstmParams& params, const std::vector<int>& codes,
                            InferWorkspace& ws) {
  const int L = static_cast<int>(codes.size());
  const int n_layers = params.n_layers();
  const bool all_sig = params.all_sigmoid();
  ws.h.resize(n_layers);
  ws.c.resize(n_layers);
  ws.x.resize(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    ws.h[l].assign(params.hidden(l), 0.0);
    ws.c[l].assign(params.hidden(l), 0.0);
    ws.x[l].assign(params.hidden(l), 0.0);
  }
  for (int t = 0; t < L; ++t) {
    const int code = codes[t];
    if (code < 0 || code >= params.input_size()) {
      throw DataError("forward: code " + std::to_string(code) +
                      " out of range for input size " +
                      std::to_string(params.input_size()));
    }
    for (int l = 0; l < n_layers; ++l) {
      const int h = params.hidden(l);
      const int in = params.layer_input(l);
      const double* x = l == 0 ? nullptr : ws.x[l - 1].data();
      double* h_prev = ws.h[l].data();
      double* c_prev = ws.c[l].data();
      MatView wx[kGates], wh[kGates];
      VecView bias[kGates];
      for (int g = 0; g < kGates; ++g) {
        wx[g] = params.w_x(l, g);
        wh[g] = params.w_h(l, g);
        bias[g] = params.bias(l, g);
      }
      double gates[4];
      for (int u = 0; u < h; ++u) {
        for (int g = 0; g < kGates; ++g) {
          double z = bias[g][u];
          z += l == 0 ? wx[g].row(u)[code] : detail::dot(wx[g].row(u), x, in);
          z += detail::dot(wh[g].row(u), h_prev, h);
          gates[g] = z;
        }
        const double gi = sigmoid(gates[kGateInput]);
        const double gf = sigmoid(gates[kGateForget]);
        const double gg = detail::cell_act(gates[kGateCell], all_sig);
        const double go = sigmoid(gates[kGateOutput]);
        const double c = gf * c_prev[u] + gi * gg;
        ws.x[l][u] = go * detail::cell_act(c, all_sig);
        c_prev[u] = c;
      }
      // recurrent state for the next step is this step's output
      std::copy(ws.x[l].begin(), ws.x[l].end(), ws.h[l].begin());
    }
  }
  VecView w = params.dense_w();
  const double logit =
      detail::dot(w.data, ws.x[n_layers - 1].data(), w.size) + params.dense_b();
  return sigmoid(logit);
}

inline double forward_infer(const LstmParams& params, const std::vector<int>& codes) {
  InferWorkspace ws;
  return forward_infer(params, codes, ws);
}

// Scratch for batched inference; per-layer state is unit-major [h * B].
struct BatchInferWorkspace {
  std::vector<std::vector<double>> h, c, x;
  std::vector<double> z[kGates];
};

inline constexpr std::size_t kInferBatch = 32;

// Runs B equal-length windows through the network at once. Per output
// element the accumulation order is independent of B, so results do not
// depend on how callers chunk their windows.
inline void forward_infer_batch(const LstmParams& params,
                                const int* const* windows, std::size_t batch,
                                std::size_t length, double* probs,
                                BatchInferWorkspace& ws) {
  const int n_layers = params.n_layers();
  const bool all_sig = params.all_sigmoid();
  const std::size_t B = batch;
  ws.h.resize(n_layers);
  ws.c.resize(n_layers);
  ws.x.resize(n_layers);
  int max_h = 0;
  for (int l = 0; l < n_layers; ++l) {
    const std::size_t n = static_cast<std::size_t>(params.hidden(l)) * B;
    ws.h[l].assign(n, 0.0);
    ws.c[l].assign(n, 0.0);
    ws.x[l].assign(n, 0.0);
    max_h = std::max(max_h, params.hidden(l));
  }
  for (int g = 0; g < kGates; ++g) {
    ws.z[g].assign(static_cast<std::size_t>(max_h) * B, 0.0);
  }

  for (std::size_t t = 0; t < length; ++t) {
    for (int l = 0; l < n_layers; ++l) {
      const int h = params.hidden(l);
      const int in = params.layer_input(l);
      const double* x = l == 0 ? nullptr : ws.x[l - 1].data();
      MatView wx[kGates], wh[kGates];
      VecView bias[kGates];
      for (int g = 0; g < kGates; ++g) {
        wx[g] = params.w_x(l, g);
        wh[g] = params.w_h(l, g);
        bias[g] = params.bias(l, g);
      }
      for (int g = 0; g < kGates; ++g) {
        double* z = ws.z[g].data();
        const double* hp = ws.h[l].data();
        for (int u = 0; u < h; ++u) {
          double* __restrict zu = z + static_cast<std::size_t>(u) * B;
          const double bu = bias[g][u];
          const double* wxr = wx[g].row(u);
          if (l == 0) {
            for (std::size_t b = 0; b < B; ++b) {
              const int code = windows[b][t];
              if (code < 0 || code >= in) {
                throw DataError("forward: code " + std::to_string(code) +
                                " out of range for input size " + std::to_string(in));
              }
              zu[b] = bu + wxr[code];
            }
          } else {
            for (std::size_t b = 0; b < B; ++b) zu[b] = bu;
            for (int j = 0; j < in; ++j) {
              const double w = wxr[j];
              const double* __restrict xr = x + static_cast<std::size_t>(j) * B;
              for (std::size_t b = 0; b < B; ++b) zu[b] += w * xr[b];
            }
          }
          const double* whr = wh[g].row(u);
          for (int j = 0; j < h; ++j) {
            const double w = whr[j];
            const double* __restrict hr = hp + static_cast<std::size_t>(j) * B;
            for (std::size_t b = 0; b < B; ++b) zu[b] += w * hr[b];
          }
        }
      }
      double* __restrict cc = ws.c[l].data();
      double* __restrict xx = ws.x[l].data();
      const double* __restrict zi = ws.z[kGateInput].data();
      const double* __restrict zf = ws.z[kGateForget].data();
      const double* __restrict zg = ws.z[kGateCell].data();
      const double* __restrict zo = ws.z[kGateOutput].data();
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * B; ++i) {
        const double gi = sigmoid(zi[i]);
        const double gf = sigmoid(zf[i]);
        const double gg = detail::cell_act(zg[i], all_sig);
        const double go = sigmoid(zo[i]);
        const double c = gf * cc[i] + gi * gg;
        cc[i] = c;
        xx[i] = go * detail::cell_act(c, all_sig);
      }
      std::copy(ws.x[l].begin(), ws.x[l].end(), ws.h[l].begin());
    }
  }
  VecView w = params.dense_w();
  const double* top = ws.x[n_layers - 1].data();
  for (std::size_t b = 0; b < B; ++b) probs[b] = params.dense_b();
  for (int j = 0; j < w.size; ++j) {
    const double wj = w.data[j];
    const double* xr = top + static_cast<std::size_t>(j) * B;
    for (std::size_t b = 0; b < B; ++b) probs[b] += wj * xr[b];
  }
  for (std::size_t b = 0; b < B; ++b) probs[b] = sigmoid(probs[b]);
}

// Batched probabilities for a list of equal-length code windows.
inline std::vector<double> infer_probs(const LstmParams& params,
                                       const std::vector<const int*>& windows,
                                       std::size_t length) {
  std::vector<double> probs(windows.size());
  BatchInferWorkspace ws;
  for (std::size_t start = 0; start < windows.size(); start += kInferBatch) {
    const std::size_t B = std::min(kInferBatch, windows.size() - start);
    forward_infer_batch(params, windows.data() + start, B, length,
                        probs.data() + start, ws);
  }
  return probs;
}

// Training-mode forward pass. Inverted dropout (scale 1/(1-p)) is applied to
// every layer's output; masks land in the cache. When `fixed_masks` is given
// (gradient checking) those masks are used instead of drawing from rng.
inline double forward_train(const LstmParams& params, const std::vector<int>& codes,
                            double dropout_rate, Rng& rng, ForwardCache& cache,
                            const std::vector<std::vector<std::vector<double>>>*
                                fixed_masks = nullptr) {
  const std::size_t T = codes.size();
  const int n_layers = params.n_layers();
  const bool all_sig = params.all_sigmoid();
  cache.T = T;
  cache.input_codes = codes;
  auto resize = [&](std::vector<std::vector<std::vector<double>>>& v) {
    v.assign(n_layers, {});
    for (int l = 0; l < n_layers; ++l) {
      v[l].assign(T, std::vector<double>(params.hidden(l), 0.0));
    }
  };
  resize(cache.gate_i);
  resize(cache.gate_f);
  resize(cache.gate_g);
  resize(cache.gate_o);
  resize(cache.cell);
  resize(cache.cell_act);
  resize(cache.hidden);
  resize(cache.dropped);
  resize(cache.mask);

  const bool use_dropout = dropout_rate > 0.0;
  const double keep = 1.0 - dropout_rate;
  for (std::size_t t = 0; t < T; ++t) {
    const int code = codes[t];
    if (code < 0 || code >= params.input_size()) {
      throw DataError("forward: code " + std::to_string(code) +
                      " out of range for input size " +
                      std::to_string(params.input_size()));
    }
    for (int l = 0; l < n_layers; ++l) {
      const int h = params.hidden(l);
      const int in = params.layer_input(l);
      const double* x = l == 0 ? nullptr : cache.dropped[l - 1][t].data();
      const double* h_prev = t == 0 ? nullptr : cache.hidden[l][t - 1].data();
      const double* c_prev = t == 0 ? nullptr : cache.cell[l][t - 1].data();
      MatView wx[kGates], wh[kGates];
      VecView bias[kGates];
      for (int g = 0; g < kGates; ++g) {
        wx[g] = params.w_x(l, g);
        wh[g] = params.w_h(l, g);
        bias[g] = params.bias(l, g);
      }
      for (int u = 0; u < h; ++u) {
        double z[4];
        for (int g = 0; g < kGates; ++g) {
          double zz = bias[g][u];
          zz += l == 0 ? wx[g].row(u)[code] : detail::dot(wx[g].row(u), x, in);
          if (t > 0) zz += detail::dot(wh[g].row(u), h_prev, h);
          z[g] = zz;
        }
        const double gi = sigmoid(z[kGateInput]);
        const double gf = sigmoid(z[kGateForget]);
        const double gg = detail::cell_act(z[kGateCell], all_sig);
        const double go = sigmoid(z[kGateOutput]);
        const double c = gf * (t == 0 ? 0.0 : c_prev[u]) + gi * gg;
        const double ca = detail::cell_act(c, all_sig);
        cache.gate_i[l][t][u] = gi;
        cache.gate_f[l][t][u] = gf;
        cache.gate_g[l][t][u] = gg;
        cache.gate_o[l][t][u] = go;
        cache.cell[l][t][u] = c;
        cache.cell_act[l][t][u] = ca;
        cache.hidden[l][t][u] = go * ca;
        double m = 1.0;
        if (fixed_masks) {
          m = (*fixed_masks)[l][t][u];
        } else if (use_dropout) {
          m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        cache.mask[l][t][u] = m;
        cache.dropped[l][t][u] = cache.hidden[l][t][u] * m;
      }
    }
  }
  VecView w = const_cast<LstmParams&>(params).dense_w();
  cache.logit = detail::dot(w.data, cache.dropped[n_layers - 1][T - 1].data(),
                            w.size) +
                params.dense_b();
  cache.prob = sigmoid(cache.logit);
  cache.valid = true;
  return cache.prob;
}

inline constexpr double kBceClamp = 1e-12;

// -[y ln p + (1-y) ln(1-p)], with p clamped away from {0,1}.
inline double loss_bce(double p, int label) {
  p = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

// Exact BCE gradients via backpropagation through time. Accumulates into
// `grads` scaled by `scale` (1/batch for batch means).
inline void backward(const LstmParams& params, const ForwardCache& cache, int label,
                     LstmParams& grads, double scale = 1.0) {
  if (!cache.valid) throw DataError("backward: missing forward cache");
  const int n_layers = params.n_layers();
  const std::size_t T = cache.T;
  const bool all_sig = params.all_sigmoid();

  const double dlogit = (cache.prob - static_cast<double>(label)) * scale;

  // d(loss)/d(dropped output) per layer and timestep, filled top-down
  std::vector<std::vector<std::vector<double>>> d_dropped(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    d_dropped[l].assign(T, std::vector<double>(params.hidden(l), 0.0));
  }
  {
    VecView w = const_cast<LstmParams&>(params).dense_w();
    VecView gw = grads.dense_w();
    const auto& top = cache.dropped[n_layers - 1][T - 1];
    for (int u = 0; u < w.size; ++u) {
      gw[u] += dlogit * top[u];
      d_dropped[n_layers - 1][T - 1][u] += dlogit * w.data[u];
    }
    grads.dense_b() += dlogit;
  }

  for (int l = n_layers - 1; l >= 0; --l) {
    const int h = params.hidden(l);
    const int in = params.layer_input(l);
    std::vector<double> dh_rec(h, 0.0), dc(h, 0.0);
    std::vector<double> dz(kGates * h, 0.0);
    for (int t = static_cast<int>(T) - 1; t >= 0; --t) {
      const auto& gi = cache.gate_i[l][t];
      const auto& gf = cache.gate_f[l][t];
      const auto& gg = cache.gate_g[l][t];
      const auto& go = cache.gate_o[l][t];
      const auto& ca = cache.cell_act[l][t];
      for (int u = 0; u < h; ++u) {
        // through the dropout mask, plus the recurrent path
        double dh = d_dropped[l][t][u] * cache.mask[l][t][u] + dh_rec[u];
        const double d_o = dh * ca[u];
        const double d_ca = dh * go[u];
        const double ca_deriv =
            all_sig ? ca[u] * (1.0 - ca[u]) : 1.0 - ca[u] * ca[u];
        dc[u] += d_ca * ca_deriv;
        const double c_prev = t == 0 ? 0.0 : cache.cell[l][t - 1][u];
        const double d_i = dc[u] * gg[u];
        const double d_g = dc[u] * gi[u];
        const double d_f = dc[u] * c_prev;
        dc[u] *= gf[u];  // becomes dc for t-1
        const double gg_deriv =
            all_sig ? gg[u] * (1.0 - gg[u]) : 1.0 - gg[u] * gg[u];
        dz[kGateInput * h + u] = d_i * gi[u] * (1.0 - gi[u]);
        dz[kGateForget * h + u] = d_f * gf[u] * (1.0 - gf[u]);
        dz[kGateCell * h + u] = d_g * gg_deriv;
        dz[kGateOutput * h + u] = d_o * go[u] * (1.0 - go[u]);
      }
      const int code = cache.input_codes[t];
      const double* x = l == 0 ? nullptr : cache.dropped[l - 1][t].data();
      const double* h_prev = t == 0 ? nullptr : cache.hidden[l][t - 1].data();
      std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
      for (int g = 0; g < kGates; ++g) {
        MatView gwx = grads.w_x(l, g);
        MatView gwh = grads.w_h(l, g);
        VecView gb = grads.bias(l, g);
        MatView wx = const_cast<LstmParams&>(params).w_x(l, g);
        MatView wh = const_cast<LstmParams&>(params).w_h(l, g);
        for (int u = 0; u < h; ++u) {
          const double d = dz[g * h + u];
          if (d == 0.0) continue;
          if (l == 0) {
            gwx.row(u)[code] += d;
          } else {
            detail::axpy(d, x, gwx.row(u), in);
            detail::axpy(d, wx.row(u), d_dropped[l - 1][t].data(), in);
          }
          if (t > 0) {
            detail::axpy(d, h_prev, gwh.row(u), h);
            detail::axpy(d, wh.row(u), dh_rec.data(), h);
          }
          gb[u] += d;
        }
      }
    }
  }
}

// Scales gradients so the global L2 norm does not exceed max_norm.
inline double clip_gradients(LstmParams& grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads.flat()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grads.flat()) g *= s;
  }
  return norm;
}

struct AdamState {
  std::vector<double> m, v;
  std::size_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update with bias correction; `state.t` counts completed steps.
inline void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state,
                      const TrainConfig& config) {
  TS_CHECK(params.size() == grads.size() && params.size() == state.m.size(),
           "adam_step: shape mismatch");
  state.t += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  auto& theta = params.flat();
  const auto& g = grads.flat();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    theta[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
  }
  TS_CHECK(params.all_finite(), "adam_step: non-finite parameter after update");
}

// ---- gradient verification ---------------------------------------------

// Mean BCE over a batch with every dropout mask pinned.
inline double batch_loss_fixed_masks(
    const LstmParams& params, const std::vector<Trajectory>& batch,
    const std::vector<int>& labels,
    const std::vector<std::vector<std::vector<std::vector<double>>>>& masks) {
  double total = 0.0;
  ForwardCache cache;
  Rng dummy(0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double p =
        forward_train(params, batch[i].codes, 0.0, dummy, cache, &masks[i]);
    total += loss_bce(p, labels[i]);
  }
  return total / static_cast<double>(batch.size());
}

// Central finite differences of the batch-mean loss, one entry at a time.
inline std::vector<double> numeric_gradients(
    const LstmParams& params, const std::vector<Trajectory>& batch,
    const std::vector<int>& labels,
    const std::vector<std::vector<std::vector<std::vector<double>>>>& masks,
    double step = 1e-5) {
  LstmParams work = params;
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double orig = work.flat()[i];
    work.flat()[i] = orig + step;
    const double up = batch_loss_fixed_masks(work, batch, labels, masks);
    work.flat()[i] = orig - step;
    const double down = batch_loss_fixed_masks(work, batch, labels, masks);
    work.flat()[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

inline double max_relative_error(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  TS_CHECK(a.size() == b.size(), "max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), 1e-8});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t n_params = 0;
  std::size_t batch = 0;
};

// Compares backward() against central finite differences on a random batch
// with frozen dropout masks.
inline GradCheckResult grad_check(const TrainConfig& config,
                                  std::size_t batch_size = 4,
                                  double fd_step = 1e-5) {
  config.validate();
  LstmParams params = init_params(config, config.rng_seed);
  Rng rng(config.rng_seed + 1);

  std::vector<Trajectory> batch(batch_size);
  std::vector<int> labels(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch[i].codes.resize(config.window);
    for (auto& c : batch[i].codes) {
      c = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(config.input_size)));
    }
    labels[i] = static_cast<int>(rng.next_below(2));
  }

  // draw masks once, then freeze them for both gradient routes
  std::vector<std::vector<std::vector<std::vector<double>>>> masks(batch_size);
  const double keep = 1.0 - config.dropout_rate;
  for (std::size_t i = 0; i < batch_size; ++i) {
    masks[i].assign(params.n_layers(), {});
    for (int l = 0; l < params.n_layers(); ++l) {
      masks[i][l].assign(config.window, std::vector<double>(params.hidden(l), 1.0));
      if (config.dropout_rate > 0.0) {
        for (auto& step_mask : masks[i][l]) {
          for (auto& m : step_mask) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        }
      }
    }
  }

  LstmParams analytic = params.zeros_like();
  ForwardCache cache;
  Rng dummy(0);
  for (std::size_t i = 0; i < batch_size; ++i) {
    forward_train(params, batch[i].codes, 0.0, dummy, cache, &masks[i]);
    backward(params, cache, labels[i], analytic,
             1.0 / static_cast<double>(batch_size));
  }
  const auto numeric = numeric_gradients(params, batch, labels, masks, fd_step);

  GradCheckResult res;
  res.max_rel_error = max_relative_error(analytic.flat(), numeric);
  res.n_params = params.size();
  res.batch = batch_size;
  return res;
}

// ---- model persistence ---------------------------------------------------
//
// Layout (little-endian): magic "TSLSTM01", u32 format version, u32 pair
// table version, u32 input size, u32 layer count, u32 per-layer widths,
// u8 all-sigmoid flag, u64 parameter count, then raw f64 parameters.

inline constexpr char kModelMagic[8] = {'T', 'S', 'L', 'S', 'T', 'M', '0', '1'};

namespace detail {

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (in.gcount() != sizeof(T)) {
    throw DataError(std::string("truncated model file (reading ") + what + ")");
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline void save_params(const LstmParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kModelMagic, sizeof(kModelMagic));
  detail::write_le<std::uint32_t>(out, kModelFormatVersion);
  detail::write_le<std::uint32_t>(out, kPairTableVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.input_size()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.n_layers()));
  for (int h : params.hidden_sizes()) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  }
  detail::write_le<std::uint8_t>(out, params.all_sigmoid() ? 1 : 0);
  detail::write_le<std::uint64_t>(out, params.size());
  for (double v : params.flat()) detail::write_le<double>(out, v);
  if (!out) throw DataError("write failed: " + path);
}

inline LstmParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  char magic[sizeof(kModelMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw DataError("not a model file: " + path);
  }
  const auto version = detail::read_le<std::uint32_t>(in, "format version");
  if (version != kModelFormatVersion) {
    throw DataError("unsupported model format version " + std::to_string(version));
  }
  const auto table = detail::read_le<std::uint32_t>(in, "pair table version");
  if (table != kPairTableVersion) {
    throw DataError("model uses pair table version " + std::to_string(table) +
                    ", expected " + std::to_string(kPairTableVersion));
  }
  const auto input_size = detail::read_le<std::uint32_t>(in, "input size");
  const auto n_layers = detail::read_le<std::uint32_t>(in, "layer count");
  if (input_size == 0 || n_layers == 0 || n_layers > 64) {
    throw DataError("model file has inconsistent dimensions");
  }
  std::vector<int> hidden(n_layers);
  for (auto& h : hidden) {
    h = static_cast<int>(detail::read_le<std::uint32_t>(in, "layer width"));
    if (h <= 0) throw DataError("model file has inconsistent dimensions");
  }
  const bool all_sig = detail::read_le<std::uint8_t>(in, "cell flag") != 0;
  LstmParams params(static_cast<int>(input_size), hidden, all_sig);
  const auto count = detail::read_le<std::uint64_t>(in, "parameter count");
  if (count != params.size()) {
    throw DataError("model file has inconsistent dimensions");
  }
  for (auto& v : params.flat()) v = detail::read_le<double>(in, "parameters");
  return params;
}

}  // namespace trollscore
