#include "catgen/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eigen_view.hpp"

namespace catgen::model {

using detail::mat;

namespace {

Tensor tanh_of(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = std::tanh(v);
  return y;
}

// grad * (1 - y^2) for y = tanh(pre).
Tensor tanh_backward(const Tensor& grad, const Tensor& y) {
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
  return g;
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void expect_shape(const Tensor& t, std::vector<std::size_t> shape, std::string_view name) {
  if (t.shape() != shape) {
    throw std::invalid_argument("parameter " + std::string(name) +
                                " has a shape inconsistent with the model config");
  }
}

}  // namespace

void ModelConfig::validate() const {
  for (auto [value, name] : {std::pair{vocab_size, "vocab_size"},
                             {glove_dim, "glove_dim"},
                             {input_embed_dim, "input_embed_dim"},
                             {dense1_dim, "dense1_dim"},
                             {lstm1_dim, "lstm1_dim"},
                             {lstm2_dim, "lstm2_dim"},
                             {dense2_dim, "dense2_dim"},
                             {seq_len, "seq_len"},
                             {num_categories, "num_categories"}}) {
    if (value == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must be in [0, 1)");
  }
  if (!(l2 >= 0.0)) throw std::invalid_argument("l2 must be non-negative");
}

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng, const Tensor* pretrained) {
  cfg.validate();
  ModelParams p;
  if (pretrained != nullptr) {
    expect_shape(*pretrained, {cfg.vocab_size, cfg.glove_dim}, "glove.table");
    p.glove.table = *pretrained;
  } else {
    p.glove.table = Tensor({cfg.vocab_size, cfg.glove_dim});
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.glove_dim));
    for (auto& v : p.glove.table.values()) v = rng.uniform(-bound, bound);
  }
  p.glove.trainable = false;
  p.embed.table = Tensor({cfg.vocab_size, cfg.input_embed_dim});
  {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.input_embed_dim));
    for (auto& v : p.embed.table.values()) v = rng.uniform(-bound, bound);
  }
  p.embed.trainable = true;
  p.dense1 = nn::AffineParams::init(cfg.dense1_dim, cfg.dense1_input_dim(), rng);
  p.lstm1 = nn::LstmCellParams::init(cfg.dense1_dim, cfg.lstm1_dim, rng);
  p.lstm2 = nn::LstmCellParams::init(cfg.lstm1_dim, cfg.lstm2_dim, rng);
  p.dense2 = nn::AffineParams::init(cfg.dense2_dim, cfg.lstm2_dim, rng);
  p.output = nn::AffineParams::init(cfg.vocab_size, cfg.dense2_dim, rng);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.visit([](std::string_view, Tensor& t, ParamKind) { t.fill(0.0); });
  return z;
}

void ModelParams::check_shapes(const ModelConfig& cfg) const {
  expect_shape(glove.table, {cfg.vocab_size, cfg.glove_dim}, "glove.table");
  expect_shape(embed.table, {cfg.vocab_size, cfg.input_embed_dim}, "embed.table");
  expect_shape(dense1.weight, {cfg.dense1_dim, cfg.dense1_input_dim()}, "dense1.weight");
  expect_shape(dense1.bias, {cfg.dense1_dim}, "dense1.bias");
  expect_shape(lstm1.w_ih, {4 * cfg.lstm1_dim, cfg.dense1_dim}, "lstm1.w_ih");
  expect_shape(lstm1.w_hh, {4 * cfg.lstm1_dim, cfg.lstm1_dim}, "lstm1.w_hh");
  expect_shape(lstm1.bias, {4 * cfg.lstm1_dim}, "lstm1.bias");
  expect_shape(lstm2.w_ih, {4 * cfg.lstm2_dim, cfg.lstm1_dim}, "lstm2.w_ih");
  expect_shape(lstm2.w_hh, {4 * cfg.lstm2_dim, cfg.lstm2_dim}, "lstm2.w_hh");
  expect_shape(lstm2.bias, {4 * cfg.lstm2_dim}, "lstm2.bias");
  expect_shape(dense2.weight, {cfg.dense2_dim, cfg.lstm2_dim}, "dense2.weight");
  expect_shape(dense2.bias, {cfg.dense2_dim}, "dense2.bias");
  expect_shape(output.weight, {cfg.vocab_size, cfg.dense2_dim}, "output.weight");
  expect_shape(output.bias, {cfg.vocab_size}, "output.bias");
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
  std::vector<const Tensor*> lhs, rhs;
  a.visit([&](std::string_view, const Tensor& t, ParamKind) { lhs.push_back(&t); });
  b.visit([&](std::string_view, const Tensor& t, ParamKind) { rhs.push_back(&t); });
  if (a.glove.trainable != b.glove.trainable || a.embed.trainable != b.embed.trainable) {
    return false;
  }
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (!catgen::bitwise_equal(*lhs[i], *rhs[i])) return false;
  }
  return true;
}

ModelState ModelState::zeros(const ModelConfig& cfg, std::size_t batch) {
  return {Tensor({batch, cfg.lstm1_dim}), Tensor({batch, cfg.lstm1_dim}),
          Tensor({batch, cfg.lstm2_dim}), Tensor({batch, cfg.lstm2_dim})};
}

StepOutput forward_step(const ModelParams& params, const ModelConfig& cfg,
                        std::span<const TokenId> tokens,
                        std::span<const CategoryId> categories,
                        const ModelState& state, bool training, Rng& rng) {
  const std::size_t batch = tokens.size();
  if (batch == 0 || categories.size() != batch) {
    throw std::invalid_argument("forward_step: token/category batch size mismatch");
  }
  for (auto c : categories) {
    if (c < 0 || static_cast<std::size_t>(c) >= cfg.num_categories) {
      throw std::out_of_range("category id " + std::to_string(c) + " out of range");
    }
  }

  StepOutput out;
  StepCache& cache = out.cache;
  cache.tokens.assign(tokens.begin(), tokens.end());

  const Tensor glove = nn::embedding_forward(params.glove, tokens);
  const Tensor embed = nn::embedding_forward(params.embed, tokens);
  const std::size_t g = cfg.glove_dim;
  const std::size_t e = cfg.input_embed_dim;
  cache.x = Tensor({batch, cfg.dense1_input_dim()});
  for (std::size_t b = 0; b < batch; ++b) {
    auto row = cache.x.row(b);
    std::ranges::copy(glove.row(b), row.begin());
    std::ranges::copy(embed.row(b), row.begin() + static_cast<std::ptrdiff_t>(g));
    row[g + e + static_cast<std::size_t>(categories[b])] = 1.0;
  }

  cache.a1 = tanh_of(nn::affine_forward(params.dense1, cache.x));
  auto d1 = nn::dropout_forward(cache.a1, cfg.dropout, rng, training);
  cache.drop1 = std::move(d1.mask);

  cache.lstm1 = nn::lstm_step(params.lstm1, d1.output, state.h1, state.c1);
  auto d2 = nn::dropout_forward(cache.lstm1.h, cfg.dropout, rng, training);
  cache.drop2 = std::move(d2.mask);

  cache.lstm2 = nn::lstm_step(params.lstm2, d2.output, state.h2, state.c2);
  auto d3 = nn::dropout_forward(cache.lstm2.h, cfg.dropout, rng, training);
  cache.drop3 = std::move(d3.mask);
  cache.a2_in = std::move(d3.output);

  cache.a2 = tanh_of(nn::affine_forward(params.dense2, cache.a2_in));
  out.logits = nn::affine_forward(params.output, cache.a2);
  out.state = {cache.lstm1.h, cache.lstm1.c, cache.lstm2.h, cache.lstm2.c};
  return out;
}

Batch Batch::from_examples(std::span<const corpus::TrainingExample> examples) {
  Batch b;
  b.batch_size = examples.size();
  if (examples.empty()) return b;
  b.seq_len = examples.front().inputs.size();
  b.categories.reserve(b.batch_size);
  b.inputs.assign(b.batch_size * b.seq_len, corpus::Vocabulary::kPad);
  b.targets.assign(b.batch_size * b.seq_len, corpus::Vocabulary::kPad);
  b.mask.assign(b.batch_size * b.seq_len, 0);
  for (std::size_t i = 0; i < b.batch_size; ++i) {
    const auto& ex = examples[i];
    if (ex.inputs.size() != b.seq_len || ex.targets.size() != b.seq_len ||
        ex.mask.size() != b.seq_len) {
      throw std::invalid_argument("batch examples must share one window length");
    }
    b.categories.push_back(ex.category);
    for (std::size_t t = 0; t < b.seq_len; ++t) {
      b.inputs[t * b.batch_size + i] = ex.inputs[t];
      b.targets[t * b.batch_size + i] = ex.targets[t];
      b.mask[t * b.batch_size + i] = ex.mask[t];
    }
  }
  return b;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double l2_penalty(const ModelParams& params, double factor, ModelGradients* grads) {
  std::vector<Tensor*> grad_tensors;
  if (grads != nullptr) {
    grads->visit([&](std::string_view, Tensor& t, ParamKind) { grad_tensors.push_back(&t); });
  }
  double total = 0.0;
  std::size_t i = 0;
  params.visit([&](std::string_view, const Tensor& t, ParamKind kind) {
    if (kind == ParamKind::Weight) {
      total += nn::l2_penalty(t, factor, grads != nullptr ? grad_tensors[i] : nullptr);
    }
    ++i;
  });
  return total;
}

SequenceResult forward_sequence(const ModelParams& params, const ModelConfig& cfg,
                                const Batch& batch, bool training, Rng& rng) {
  if (batch.batch_size == 0) throw std::invalid_argument("forward_sequence: empty batch");
  const std::size_t B = batch.batch_size;
  const std::size_t T = batch.seq_len;

  SequenceResult r;
  r.logits.reserve(T);
  r.caches.reserve(T);
  ModelState state = ModelState::zeros(cfg, B);
  Tensor stacked({T * B, cfg.vocab_size});
  for (std::size_t t = 0; t < T; ++t) {
    auto step = forward_step(params, cfg, batch.inputs_at(t), batch.categories, state,
                             training, rng);
    std::ranges::copy(step.logits.values(),
                      stacked.values().begin() + static_cast<std::ptrdiff_t>(t * B * cfg.vocab_size));
    state = std::move(step.state);
    r.logits.push_back(std::move(step.logits));
    r.caches.push_back(std::move(step.cache));
  }

  auto ce = nn::softmax_cross_entropy(stacked, batch.targets, batch.mask);
  r.cross_entropy = ce.loss;
  r.grad_logits = std::move(ce.grad_logits);
  r.predicted = ce.count;
  for (std::size_t row = 0; row < T * B; ++row) {
    if (batch.mask[row] == 0) continue;
    if (static_cast<TokenId>(argmax(stacked.row(row))) == batch.targets[row]) ++r.correct;
  }
  r.l2 = l2_penalty(params, cfg.l2, nullptr);
  r.loss = r.cross_entropy + r.l2;
  return r;
}

ModelGradients backward_sequence(const ModelParams& params, const ModelConfig& cfg,
                                 const Batch& batch, const SequenceResult& fwd) {
  const std::size_t B = batch.batch_size;
  const std::size_t T = batch.seq_len;
  const std::size_t V = cfg.vocab_size;
  if (fwd.caches.size() != T) throw std::invalid_argument("backward_sequence: cache length mismatch");

  ModelGradients grads = params.zeros_like();
  Tensor dh1({B, cfg.lstm1_dim}), dc1({B, cfg.lstm1_dim});
  Tensor dh2({B, cfg.lstm2_dim}), dc2({B, cfg.lstm2_dim});
  Tensor grad_logits({B, V});

  for (std::size_t t = T; t-- > 0;) {
    const StepCache& c = fwd.caches[t];
    std::copy_n(fwd.grad_logits.data() + t * B * V, B * V, grad_logits.data());

    Tensor g = nn::affine_backward(params.output, c.a2, grad_logits, grads.output);
    g = nn::affine_backward(params.dense2, c.a2_in, tanh_backward(g, c.a2), grads.dense2);
    g = nn::dropout_backward(g, c.drop3);
    add_into(dh2, g);
    auto l2g = nn::lstm_step_backward(params.lstm2, c.lstm2, dh2, dc2, grads.lstm2);
    dh2 = std::move(l2g.h_prev);
    dc2 = std::move(l2g.c_prev);

    g = nn::dropout_backward(l2g.x, c.drop2);
    add_into(dh1, g);
    auto l1g = nn::lstm_step_backward(params.lstm1, c.lstm1, dh1, dc1, grads.lstm1);
    dh1 = std::move(l1g.h_prev);
    dc1 = std::move(l1g.c_prev);

    g = nn::dropout_backward(l1g.x, c.drop1);
    const Tensor grad_x =
        nn::affine_backward(params.dense1, c.x, tanh_backward(g, c.a1), grads.dense1);

    const std::size_t gd = cfg.glove_dim;
    const std::size_t ed = cfg.input_embed_dim;
    if (params.glove.trainable) {
      Tensor rows({B, gd});
      for (std::size_t b = 0; b < B; ++b) {
        std::copy_n(grad_x.row(b).begin(), gd, rows.row(b).begin());
      }
      nn::embedding_backward(c.tokens, rows, grads.glove.table);
    }
    if (params.embed.trainable) {
      Tensor rows({B, ed});
      for (std::size_t b = 0; b < B; ++b) {
        std::copy_n(grad_x.row(b).begin() + static_cast<std::ptrdiff_t>(gd), ed,
                    rows.row(b).begin());
      }
      nn::embedding_backward(c.tokens, rows, grads.embed.table);
    }
  }

  l2_penalty(params, cfg.l2, &grads);
  return grads;
}

}  // namespace catgen::model
