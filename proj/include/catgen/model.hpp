#pragma once

// Category-conditioned stacked LSTM language model.
//
// Per time step:
//   x  = [glove[token] | embed[token] | onehot(category)]
//   a1 = dropout(tanh(dense1(x)))
//   h1 = lstm1(a1)      -> dropout
//   h2 = lstm2(h1)      -> dropout
//   a2 = tanh(dense2(h2))
//   logits = output(a2)
//
// Dropout only touches the activations handed to the next layer; the
// recurrent state carried between steps is never masked.

#include <span>
#include <string_view>
#include <vector>

#include "catgen/corpus.hpp"
#include "catgen/nn.hpp"
#include "catgen/rng.hpp"
#include "catgen/tensor.hpp"
#include "catgen/types.hpp"

namespace catgen::model {

struct ModelConfig {
  std::size_t vocab_size = 12614;
  std::size_t glove_dim = 200;
  std::size_t input_embed_dim = 512;
  std::size_t dense1_dim = 512;
  std::size_t lstm1_dim = 1024;
  std::size_t lstm2_dim = 512;
  std::size_t dense2_dim = 512;
  double dropout = 0.2;
  double l2 = 1e-5;
  std::size_t seq_len = 13;
  std::size_t num_categories = 3;

  std::size_t dense1_input_dim() const {
    return glove_dim + input_embed_dim + num_categories;
  }
  /// Throws std::invalid_argument on a non-positive dimension, dropout
  /// outside [0,1) or negative l2.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class ParamKind { Weight, Bias, Frozen };

struct ModelParams {
  nn::EmbeddingTable glove{Tensor{}, false};
  nn::EmbeddingTable embed;
  nn::AffineParams dense1;
  nn::LstmCellParams lstm1;
  nn::LstmCellParams lstm2;
  nn::AffineParams dense2;
  nn::AffineParams output;

  /// Random init. `pretrained`, when given, becomes the frozen word-vector
  /// table and must be [vocab_size x glove_dim]; otherwise that table is
  /// drawn uniformly in +-1/sqrt(glove_dim) and frozen.
  static ModelParams init(const ModelConfig& cfg, Rng& rng,
                          const Tensor* pretrained = nullptr);
  /// All-zero tensors with the same shapes (used as gradient buffers).
  ModelParams zeros_like() const;

  bool empty() const { return output.weight.empty(); }
  /// Throws when tensor shapes disagree with `cfg`.
  void check_shapes(const ModelConfig& cfg) const;

  /// Calls f(name, tensor, kind) for every tensor in a fixed order. The
  /// glove table reports Frozen unless it is marked trainable.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    f(std::string_view("glove.table"), p.glove.table,
      p.glove.trainable ? ParamKind::Weight : ParamKind::Frozen);
    f(std::string_view("embed.table"), p.embed.table,
      p.embed.trainable ? ParamKind::Weight : ParamKind::Frozen);
    f(std::string_view("dense1.weight"), p.dense1.weight, ParamKind::Weight);
    f(std::string_view("dense1.bias"), p.dense1.bias, ParamKind::Bias);
    f(std::string_view("lstm1.w_ih"), p.lstm1.w_ih, ParamKind::Weight);
    f(std::string_view("lstm1.w_hh"), p.lstm1.w_hh, ParamKind::Weight);
    f(std::string_view("lstm1.bias"), p.lstm1.bias, ParamKind::Bias);
    f(std::string_view("lstm2.w_ih"), p.lstm2.w_ih, ParamKind::Weight);
    f(std::string_view("lstm2.w_hh"), p.lstm2.w_hh, ParamKind::Weight);
    f(std::string_view("lstm2.bias"), p.lstm2.bias, ParamKind::Bias);
    f(std::string_view("dense2.weight"), p.dense2.weight, ParamKind::Weight);
    f(std::string_view("dense2.bias"), p.dense2.bias, ParamKind::Bias);
    f(std::string_view("output.weight"), p.output.weight, ParamKind::Weight);
    f(std::string_view("output.bias"), p.output.bias, ParamKind::Bias);
  }
};

using ModelGradients = ModelParams;

bool bitwise_equal(const ModelParams& a, const ModelParams& b);

struct ModelState {
  Tensor h1, c1, h2, c2;
  static ModelState zeros(const ModelConfig& cfg, std::size_t batch);
};

struct StepCache {
  std::vector<TokenId> tokens;
  Tensor x;  // concatenated input
  Tensor a1;
  Tensor drop1;
  nn::LstmStepCache lstm1;
  Tensor drop2;
  nn::LstmStepCache lstm2;
  Tensor drop3;
  Tensor a2_in;  // dropped lstm2 output fed to dense2
  Tensor a2;
};

struct StepOutput {
  Tensor logits;  // [B x vocab]
  ModelState state;
  StepCache cache;
};

/// One time step for a batch. Throws std::out_of_range on token or category
/// ids outside the configured ranges.
StepOutput forward_step(const ModelParams& params, const ModelConfig& cfg,
                        std::span<const TokenId> tokens,
                        std::span<const CategoryId> categories,
                        const ModelState& state, bool training, Rng& rng);

/// Time-major view of equally long training examples.
struct Batch {
  std::size_t batch_size = 0;
  std::size_t seq_len = 0;
  std::vector<CategoryId> categories;  // [B]
  std::vector<TokenId> inputs;         // [T x B], index t * B + b
  std::vector<TokenId> targets;        // [T x B]
  std::vector<std::uint8_t> mask;      // [T x B]

  static Batch from_examples(std::span<const corpus::TrainingExample> examples);
  std::span<const TokenId> inputs_at(std::size_t t) const {
    return std::span<const TokenId>(inputs).subspan(t * batch_size, batch_size);
  }
};

struct SequenceResult {
  double loss = 0.0;           // cross_entropy + l2
  double cross_entropy = 0.0;
  double l2 = 0.0;
  std::size_t predicted = 0;   // unmasked positions
  std::size_t correct = 0;     // argmax == target among unmasked positions
  std::vector<Tensor> logits;  // per step [B x vocab]
  std::vector<StepCache> caches;
  Tensor grad_logits;          // [T*B x vocab], row t * B + b
};

SequenceResult forward_sequence(const ModelParams& params, const ModelConfig& cfg,
                                const Batch& batch, bool training, Rng& rng);

/// Full BPTT through both LSTM layers and both embedding paths, plus the L2
/// term. A frozen glove table receives no gradient (its buffer stays zero).
ModelGradients backward_sequence(const ModelParams& params, const ModelConfig& cfg,
                                 const Batch& batch, const SequenceResult& fwd);

/// cfg.l2 * sum of squares over Weight-kind tensors; adds the gradient into
/// `grads` when non-null.
double l2_penalty(const ModelParams& params, double factor, ModelGradients* grads);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace catgen::model
