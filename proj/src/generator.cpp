#include "catgen/generator.hpp"

#include <cmath>
#include <stdexcept>
#include <string_view>

namespace catgen::gen {

void GenerationConfig::validate() const {
  if (!(exploration >= 0.0 && exploration <= 1.0)) {
    throw std::invalid_argument("exploration must be in [0, 1]");
  }
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be at least 1");
  if (category < 0) throw std::invalid_argument("category must be non-negative");
}

SampleDecision sample_next(std::span<const double> logits, double exploration, Rng& rng) {
  if (logits.empty()) throw std::invalid_argument("cannot sample from empty logits");
  if (exploration > 0.0 && rng.uniform() < exploration) {
    const auto p = nn::softmax(logits);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      acc += p[i];
      last_nonzero = i;
      if (u < acc) return {static_cast<TokenId>(i), true};
    }
    return {static_cast<TokenId>(last_nonzero), true};
  }
  return {static_cast<TokenId>(model::argmax(logits)), false};
}

TokenId sample_next_token(std::span<const double> logits, double exploration, Rng& rng) {
  return sample_next(logits, exploration, rng).token;
}

std::vector<TokenId> Generation::all() const {
  std::vector<TokenId> out = seed;
  out.insert(out.end(), continuation.begin(), continuation.end());
  return out;
}

Generation generate(const model::Checkpoint& model, CategoryId category,
                    std::span<const TokenId> seed, double exploration,
                    std::size_t max_tokens, std::uint64_t rng_seed) {
  const auto& cfg = model.config;
  if (model.params.empty()) throw std::runtime_error("model is not loaded");
  if (model.vocab.size() <= corpus::Vocabulary::kNumSpecials) {
    throw std::runtime_error("model vocabulary has no content tokens");
  }
  GenerationConfig check;
  check.category = category;
  check.exploration = exploration;
  check.max_tokens = max_tokens;
  check.validate();
  if (static_cast<std::size_t>(category) >= cfg.num_categories) {
    throw std::out_of_range("category " + std::to_string(category) + " not in model (has " +
                            std::to_string(cfg.num_categories) + ")");
  }

  Rng rng(rng_seed);
  Generation g;
  g.seed.assign(seed.begin(), seed.end());
  const CategoryId cat[1] = {category};
  auto state = model::ModelState::zeros(cfg, 1);

  auto feed = [&](TokenId token) {
    const TokenId tok[1] = {token};
    auto step = model::forward_step(model.params, cfg, tok, cat, state, false, rng);
    state = std::move(step.state);
    return std::move(step.logits);
  };

  Tensor logits = feed(corpus::Vocabulary::kSos);
  for (TokenId t : seed) logits = feed(t);
  while (g.continuation.size() < max_tokens) {
    const TokenId next = sample_next_token(logits.row(0), exploration, rng);
    if (next == corpus::Vocabulary::kEos) {
      g.reached_eos = true;
      break;
    }
    g.continuation.push_back(next);
    if (g.continuation.size() == max_tokens) break;
    logits = feed(next);
  }
  return g;
}

Generation generate(const model::Checkpoint& model, const GenerationConfig& cfg) {
  cfg.validate();
  std::vector<TokenId> seed;
  for (const auto& t : cfg.seed_text) seed.push_back(model.vocab.id(t));
  return generate(model, cfg.category, seed, cfg.exploration, cfg.max_tokens, cfg.rng_seed);
}

namespace {

bool is_closing_punct(std::string_view t) {
  return t == "." || t == "," || t == "!" || t == "?" || t == ";" || t == ":" || t == ")";
}

}  // namespace

std::string detokenize(std::span<const std::string> tokens, SpacingMode mode) {
  std::string out;
  for (const auto& t : tokens) {
    const bool glue = mode == SpacingMode::Glued && is_closing_punct(t);
    if (!out.empty() && !glue) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string detokenize(std::span<const TokenId> ids, const corpus::Vocabulary& vocab,
                       SpacingMode mode) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) tokens.push_back(vocab.token(id));
  return detokenize(tokens, mode);
}

}  // namespace catgen::gen
