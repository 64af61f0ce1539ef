#pragma once

#include <span>
#include <string>
#include <vector>

#include "catgen/checkpoint.hpp"
#include "catgen/corpus.hpp"
#include "catgen/model.hpp"
#include "catgen/rng.hpp"

namespace catgen::gen {

struct GenerationConfig {
  CategoryId category = 0;
  /// Probability per token of sampling from the softmax instead of taking
  /// the argmax.
  double exploration = 0.0;
  corpus::TokenSeq seed_text;
  std::size_t max_tokens = 30;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SampleDecision {
  TokenId token;
  bool explored;  // true when drawn from the softmax distribution
};

/// One uniform draw decides explore vs exploit (skipped entirely when
/// exploration is 0); exploring draws a second uniform to sample the
/// softmax. Argmax ties go to the lowest id.
SampleDecision sample_next(std::span<const double> logits, double exploration, Rng& rng);
TokenId sample_next_token(std::span<const double> logits, double exploration, Rng& rng);

struct Generation {
  std::vector<TokenId> seed;          // encoded seed tokens (no sos)
  std::vector<TokenId> continuation;  // generated tokens, eos excluded
  bool reached_eos = false;

  std::vector<TokenId> all() const;
};

/// Feeds <sos> + seed with the category at every step, then samples until
/// <eos> or `max_tokens` generated tokens. Throws if the model is unloaded
/// or its vocabulary is empty.
Generation generate(const model::Checkpoint& model, CategoryId category,
                    std::span<const TokenId> seed, double exploration,
                    std::size_t max_tokens, std::uint64_t rng_seed);

/// Encodes the seed text (OOV -> <unk>) and generates.
Generation generate(const model::Checkpoint& model, const GenerationConfig& cfg);

enum class SpacingMode {
  Spaced,  // tokens joined by single spaces
  Glued,   // closing punctuation attached to the preceding token
};

std::string detokenize(std::span<const std::string> tokens, SpacingMode mode = SpacingMode::Spaced);
std::string detokenize(std::span<const TokenId> ids, const corpus::Vocabulary& vocab,
                       SpacingMode mode = SpacingMode::Spaced);

}  // namespace catgen::gen
