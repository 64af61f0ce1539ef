#pragma once

// Shared fixtures and small-model helpers for the unit and acceptance tests.

#include <filesystem>
#include <string>
#include <vector>

#include "catgen/checkpoint.hpp"
#include "catgen/dataset.hpp"
#include "catgen/model.hpp"
#include "catgen/trainer.hpp"

namespace catgen::testing {

std::filesystem::path fixture(const std::string& name);

/// Reads "<category>\t<text>" lines into one source per category.
std::vector<corpus::SourceText> read_tsv_sources(const std::filesystem::path& path);

corpus::Dataset toy_dataset();
/// Every toy sentence under tag 0 plus its word reversal under tag 1.
corpus::Dataset forward_reverse_dataset();
corpus::Dataset disjoint_dataset();

/// vocab 12, glove 3, embed 4, dense1 4, lstm 6/4, dense2 4, seq_len 3, 2 categories.
model::ModelConfig tiny_config();

/// Reduced model used for the memorization experiments.
model::ModelConfig small_config(const corpus::Dataset& ds);
train::TrainingConfig small_training(std::size_t epochs, std::uint64_t seed);

model::Checkpoint train_checkpoint(const corpus::Dataset& ds, const model::ModelConfig& mcfg,
                                   const train::TrainingConfig& tcfg);

/// Inference-mode next-token accuracy over every windowed example.
double token_accuracy(const model::Checkpoint& ck, const std::vector<corpus::SentenceRecord>& records);

/// Random batch of `batch` examples for `cfg`, at least one target unmasked.
model::Batch random_batch(const model::ModelConfig& cfg, std::size_t batch, Rng& rng);

struct GradCheck {
  std::size_t entries = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;
  std::string worst;
};

/// Compares backward_sequence against central differences (eps 1e-5) for
/// every trainable entry. An entry passes when |a - n| <= 1e-4 * max(|a|,|n|)
/// or |a - n| <= 1e-8.
GradCheck gradient_check(const model::ModelParams& params, const model::ModelConfig& cfg,
                         const model::Batch& batch, bool training, std::uint64_t dropout_seed);

}  // namespace catgen::testing
