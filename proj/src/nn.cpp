#include "catgen/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eigen_view.hpp"

namespace catgen::nn {

using detail::mat;
using detail::vec;

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void uniform_fill(Tensor& t, double bound, Rng& rng) {
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

AffineParams AffineParams::init(std::size_t out, std::size_t in, Rng& rng) {
  AffineParams p = zeros(out, in);
  uniform_fill(p.weight, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  return p;
}

AffineParams AffineParams::zeros(std::size_t out, std::size_t in) {
  return AffineParams{Tensor({out, in}), Tensor({out})};
}

LstmCellParams LstmCellParams::init(std::size_t input, std::size_t hidden,
                                    Rng& rng) {
  LstmCellParams p = zeros(input, hidden);
  uniform_fill(p.w_ih, 1.0 / std::sqrt(static_cast<double>(input)), rng);
  uniform_fill(p.w_hh, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  for (std::size_t k = hidden; k < 2 * hidden; ++k) p.bias[k] = 1.0;
  return p;
}

LstmCellParams LstmCellParams::zeros(std::size_t input, std::size_t hidden) {
  return LstmCellParams{Tensor({4 * hidden, input}), Tensor({4 * hidden, hidden}),
                        Tensor({4 * hidden})};
}

Tensor affine_forward(const AffineParams& p, const Tensor& x) {
  require(x.cols() == p.in_dim(), "affine_forward: input width mismatch");
  Tensor y({x.rows(), p.out_dim()});
  mat(y).noalias() = mat(x) * mat(p.weight).transpose();
  mat(y).rowwise() += vec(p.bias).transpose();
  return y;
}

Tensor affine_backward(const AffineParams& p, const Tensor& x,
                       const Tensor& grad_y, AffineParams& grad) {
  require(grad_y.rows() == x.rows() && grad_y.cols() == p.out_dim(),
          "affine_backward: gradient shape mismatch");
  mat(grad.weight).noalias() += mat(grad_y).transpose() * mat(x);
  vec(grad.bias) += mat(grad_y).colwise().sum().transpose();
  Tensor grad_x({x.rows(), x.cols()});
  mat(grad_x).noalias() = mat(grad_y) * mat(p.weight);
  return grad_x;
}

LstmStepCache lstm_step(const LstmCellParams& p, const Tensor& x,
                        const Tensor& h_prev, const Tensor& c_prev) {
  const std::size_t batch = x.rows();
  const std::size_t hidden = p.hidden_dim();
  require(x.cols() == p.input_dim(), "lstm_step: input width mismatch");
  require(h_prev.rows() == batch && h_prev.cols() == hidden, "lstm_step: h_prev shape");
  require(c_prev.rows() == batch && c_prev.cols() == hidden, "lstm_step: c_prev shape");

  LstmStepCache cache{x, h_prev, c_prev, Tensor({batch, 4 * hidden}),
                      Tensor({batch, hidden}), Tensor({batch, hidden}),
                      Tensor({batch, hidden})};
  auto gates = mat(cache.gates);
  gates.noalias() = mat(x) * mat(p.w_ih).transpose();
  gates.noalias() += mat(h_prev) * mat(p.w_hh).transpose();
  gates.rowwise() += vec(p.bias).transpose();

  for (std::size_t b = 0; b < batch; ++b) {
    auto g = cache.gates.row(b);
    for (std::size_t k = 0; k < hidden; ++k) {
      const double in = sigmoid(g[k]);
      const double forget = sigmoid(g[hidden + k]);
      const double cand = std::tanh(g[2 * hidden + k]);
      const double out = sigmoid(g[3 * hidden + k]);
      g[k] = in;
      g[hidden + k] = forget;
      g[2 * hidden + k] = cand;
      g[3 * hidden + k] = out;
      const double c = forget * c_prev.at(b, k) + in * cand;
      const double tc = std::tanh(c);
      cache.c.at(b, k) = c;
      cache.tanh_c.at(b, k) = tc;
      cache.h.at(b, k) = out * tc;
    }
  }
  return cache;
}

LstmStepGrads lstm_step_backward(const LstmCellParams& p,
                                 const LstmStepCache& cache,
                                 const Tensor& grad_h, const Tensor& grad_c,
                                 LstmCellParams& grad) {
  const std::size_t batch = cache.h.rows();
  const std::size_t hidden = p.hidden_dim();
  require(grad_h.same_shape(cache.h) && grad_c.same_shape(cache.c),
          "lstm_step_backward: gradient shape mismatch");

  Tensor grad_pre({batch, 4 * hidden});
  LstmStepGrads out{Tensor({batch, p.input_dim()}), Tensor({batch, hidden}),
                    Tensor({batch, hidden})};
  for (std::size_t b = 0; b < batch; ++b) {
    const auto g = cache.gates.row(b);
    auto d = grad_pre.row(b);
    for (std::size_t k = 0; k < hidden; ++k) {
      const double in = g[k];
      const double forget = g[hidden + k];
      const double cand = g[2 * hidden + k];
      const double o = g[3 * hidden + k];
      const double tc = cache.tanh_c.at(b, k);
      const double dh = grad_h.at(b, k);
      const double dc = grad_c.at(b, k) + dh * o * (1.0 - tc * tc);
      d[k] = dc * cand * in * (1.0 - in);
      d[hidden + k] = dc * cache.c_prev.at(b, k) * forget * (1.0 - forget);
      d[2 * hidden + k] = dc * in * (1.0 - cand * cand);
      d[3 * hidden + k] = dh * tc * o * (1.0 - o);
      out.c_prev.at(b, k) = dc * forget;
    }
  }
  mat(grad.w_ih).noalias() += mat(grad_pre).transpose() * mat(cache.x);
  mat(grad.w_hh).noalias() += mat(grad_pre).transpose() * mat(cache.h_prev);
  vec(grad.bias) += mat(grad_pre).colwise().sum().transpose();
  mat(out.x).noalias() = mat(grad_pre) * mat(p.w_ih);
  mat(out.h_prev).noalias() = mat(grad_pre) * mat(p.w_hh);
  return out;
}

Tensor embedding_forward(const EmbeddingTable& e, std::span<const TokenId> ids) {
  const std::size_t vocab = e.table.rows();
  const std::size_t dim = e.table.cols();
  Tensor out({ids.size(), dim});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= vocab) {
      throw std::out_of_range("embedding_forward: token id " +
                              std::to_string(ids[r]) + " out of range");
    }
    std::ranges::copy(e.table.row(static_cast<std::size_t>(ids[r])), out.row(r).begin());
  }
  return out;
}

void embedding_backward(std::span<const TokenId> ids, const Tensor& grad_rows,
                        Tensor& grad_table) {
  require(grad_rows.rows() == ids.size() && grad_rows.cols() == grad_table.cols(),
          "embedding_backward: shape mismatch");
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto dst = grad_table.row(static_cast<std::size_t>(ids[r]));
    const auto src = grad_rows.row(r);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

DropoutResult dropout_forward(const Tensor& x, double rate, Rng& rng,
                              bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  if (!training || rate == 0.0) {
    return {x, Tensor(x.shape(), 1.0)};
  }
  const double scale = 1.0 / (1.0 - rate);
  DropoutResult r{x, Tensor(x.shape())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = rng.uniform() >= rate ? scale : 0.0;
    r.mask[i] = keep;
    r.output[i] = x[i] * keep;
  }
  return r;
}

Tensor dropout_backward(const Tensor& grad_y, const Tensor& mask) {
  require(grad_y.same_shape(mask), "dropout_backward: shape mismatch");
  Tensor g = grad_y;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return g;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::ranges::max_element(p);
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         std::span<const TokenId> targets,
                                         std::span<const std::uint8_t> mask) {
  const std::size_t rows = logits.rows();
  const std::size_t vocab = logits.cols();
  require(targets.size() == rows && mask.size() == rows,
          "softmax_cross_entropy: target/mask length mismatch");

  CrossEntropyResult r;
  r.grad_logits = Tensor(logits.shape());
  r.row_loss.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) r.count += mask[i] != 0;
  if (r.count == 0) return r;
  const double inv = 1.0 / static_cast<double>(r.count);

  for (std::size_t i = 0; i < rows; ++i) {
    if (mask[i] == 0) continue;
    const auto t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw std::out_of_range("softmax_cross_entropy: target out of range");
    }
    const auto z = logits.row(i);
    const double mx = *std::ranges::max_element(z);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_norm = mx + std::log(sum);
    r.row_loss[i] = log_norm - z[static_cast<std::size_t>(t)];
    auto g = r.grad_logits.row(i);
    for (std::size_t k = 0; k < vocab; ++k) g[k] = std::exp(z[k] - log_norm) * inv;
    g[static_cast<std::size_t>(t)] -= inv;
  }

  std::vector<double> sorted = r.row_loss;
  std::ranges::sort(sorted);
  double total = 0.0;
  for (double v : sorted) total += v;
  r.loss = total * inv;
  return r;
}

double l2_penalty(const Tensor& w, double factor, Tensor* grad) {
  if (factor < 0.0) throw std::invalid_argument("l2 factor must be non-negative");
  if (factor == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : w.values()) sum += v * v;
  if (grad != nullptr) vec(*grad) += (2.0 * factor) * vec(w);
  return factor * sum;
}

void adam_update(Tensor& param, const Tensor& grad, AdamMoments& state,
                 const AdamConfig& cfg, std::int64_t step) {
  require(step >= 1, "adam_update: step is 1-based");
  require(param.same_shape(grad), "adam_update: gradient shape mismatch");
  if (state.m.empty()) {
    state.m = Tensor(param.shape());
    state.v = Tensor(param.shape());
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace catgen::nn
