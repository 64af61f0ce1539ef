#pragma once

// Dense layers with hand-derived gradients: affine, LSTM cell, embedding
// lookup, inverted dropout, softmax cross-entropy, L2 penalty and Adam.
//
// Batched tensors are [batch x features], row-major. Backward functions
// accumulate (+=) into parameter gradient tensors so that per-time-step
// contributions sum naturally during BPTT.

#include <cstdint>
#include <span>
#include <vector>

#include "catgen/rng.hpp"
#include "catgen/tensor.hpp"
#include "catgen/types.hpp"

namespace catgen::nn {

struct AffineParams {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  /// Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  static AffineParams init(std::size_t out, std::size_t in, Rng& rng);
  static AffineParams zeros(std::size_t out, std::size_t in);
};

/// Gate rows are laid out as [input | forget | candidate | output], each H
/// rows tall.
struct LstmCellParams {
  Tensor w_ih;  // [4H x D]
  Tensor w_hh;  // [4H x H]
  Tensor bias;  // [4H]

  std::size_t input_dim() const { return w_ih.cols(); }
  std::size_t hidden_dim() const { return w_hh.cols(); }

  /// Each weight matrix uniform in +-1/sqrt(its fan-in); forget-gate bias 1.
  static LstmCellParams init(std::size_t input, std::size_t hidden, Rng& rng);
  static LstmCellParams zeros(std::size_t input, std::size_t hidden);
};

struct EmbeddingTable {
  Tensor table;  // [V x E]
  bool trainable = true;
};

Tensor affine_forward(const AffineParams& p, const Tensor& x);

/// Adds dL/dW and dL/db into `grad`; returns dL/dx.
Tensor affine_backward(const AffineParams& p, const Tensor& x,
                       const Tensor& grad_y, AffineParams& grad);

struct LstmStepCache {
  Tensor x;
  Tensor h_prev;
  Tensor c_prev;
  Tensor gates;  // activated i, f, g, o; [B x 4H]
  Tensor c;
  Tensor tanh_c;
  Tensor h;
};

LstmStepCache lstm_step(const LstmCellParams& p, const Tensor& x,
                        const Tensor& h_prev, const Tensor& c_prev);

struct LstmStepGrads {
  Tensor x;
  Tensor h_prev;
  Tensor c_prev;
};

/// `grad_h` and `grad_c` are the total gradients reaching h and c of this
/// step (from the layer above and from the next time step).
LstmStepGrads lstm_step_backward(const LstmCellParams& p,
                                 const LstmStepCache& cache,
                                 const Tensor& grad_h, const Tensor& grad_c,
                                 LstmCellParams& grad);

Tensor embedding_forward(const EmbeddingTable& e, std::span<const TokenId> ids);

/// Scatter-adds row gradients into `grad_table`.
void embedding_backward(std::span<const TokenId> ids, const Tensor& grad_rows,
                        Tensor& grad_table);

struct DropoutResult {
  Tensor output;
  Tensor mask;  // per-element multiplier: 0 or 1/(1-rate)
};

/// Inverted dropout. Inference mode (or rate 0) returns x unchanged with an
/// all-ones mask and consumes no randomness. Throws for rate outside [0,1).
DropoutResult dropout_forward(const Tensor& x, double rate, Rng& rng,
                              bool training);
Tensor dropout_backward(const Tensor& grad_y, const Tensor& mask);

std::vector<double> softmax(std::span<const double> logits);

struct CrossEntropyResult {
  double loss = 0.0;            // mean over unmasked rows; 0 if none
  Tensor grad_logits;           // (softmax - onehot) / count, zero on masked rows
  std::vector<double> row_loss; // per-row -log p(target); 0 on masked rows
  std::size_t count = 0;        // number of unmasked rows
};

/// `mask[r] != 0` marks row r as counted. The mean is accumulated in sorted
/// order of the row losses so the result does not depend on row order.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         std::span<const TokenId> targets,
                                         std::span<const std::uint8_t> mask);

/// factor * sum(w^2); adds 2 * factor * w into `grad` when non-null.
double l2_penalty(const Tensor& w, double factor, Tensor* grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

/// Optimizer state for a whole parameter set; `moments[i]` pairs with the
/// i-th parameter tensor and stays empty for tensors never updated.
struct AdamState {
  std::int64_t step = 0;
  std::vector<AdamMoments> moments;
};

/// One bias-corrected Adam update. `step` is 1-based. Moments are allocated
/// on first use.
void adam_update(Tensor& param, const Tensor& grad, AdamMoments& state,
                 const AdamConfig& cfg, std::int64_t step);

}  // namespace catgen::nn
