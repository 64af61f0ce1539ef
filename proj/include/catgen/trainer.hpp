#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "catgen/corpus.hpp"
#include "catgen/dataset.hpp"
#include "catgen/model.hpp"
#include "catgen/nn.hpp"
#include "catgen/rng.hpp"

namespace catgen::train {

struct TrainingConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t rng_seed = 1;
  /// Per-category sampling probabilities; empty means uniform.
  std::vector<double> category_weights;
  /// Write a checkpoint every N epochs (0 disables).
  std::size_t checkpoint_every = 0;
  /// Global gradient-norm clip (0 disables).
  double clip_norm = 5.0;

  /// Resolved weights for `num_categories`: uniform when unset. Throws when
  /// the count is wrong, any weight is negative, or they do not sum to 1
  /// within 1e-9.
  std::vector<double> resolved_weights(std::size_t num_categories) const;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double accuracy = 0.0;  // over unmasked positions
  double seconds = 0.0;
};

/// Windowed examples grouped by category.
class TrainingSet {
 public:
  TrainingSet(std::span<const corpus::SentenceRecord> records,
              std::size_t num_categories, std::size_t seq_len);

  std::size_t num_categories() const { return by_category_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<corpus::TrainingExample>& category(std::size_t c) const {
    return by_category_.at(c);
  }

 private:
  std::vector<std::vector<corpus::TrainingExample>> by_category_;
  std::size_t size_ = 0;
};

struct ExampleRef {
  std::size_t category;
  std::size_t index;
};

/// Draws a category from `weights`, then an example uniformly inside it,
/// independently for every slot. Throws if a positively weighted category
/// has no examples.
std::vector<ExampleRef> stratified_indices(const TrainingSet& set,
                                           std::span<const double> weights,
                                           std::size_t batch_size, Rng& rng);
std::vector<corpus::TrainingExample> stratified_batch(const TrainingSet& set,
                                                      std::span<const double> weights,
                                                      std::size_t batch_size, Rng& rng);

/// Raised when a batch produces a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  /// Start from these parameters instead of a fresh initialization.
  std::optional<model::ModelParams> initial;
  std::optional<nn::AdamState> optimizer;
  /// Used for fresh initialization only.
  std::optional<Tensor> pretrained;
  /// Needed to write periodic checkpoints.
  const corpus::Vocabulary* vocab = nullptr;
  std::filesystem::path checkpoint_path;
  /// Appends `epoch\tloss\taccuracy\tseconds` lines.
  std::filesystem::path log_path;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  model::ModelParams params;
  nn::AdamState optimizer;
  std::vector<EpochReport> reports;
};

/// Steps per epoch: ceil(|examples| / batch_size).
std::size_t steps_per_epoch(const TrainingSet& set, std::size_t batch_size);

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(model::ModelGradients& grads, double max_norm);

TrainResult train(const TrainingSet& set, const TrainingConfig& cfg,
                  const model::ModelConfig& mcfg, TrainOptions options = {});

enum class Experiment { JustJokes, ForwardReverse, ThreeCategory };

Experiment parse_experiment(std::string_view name);
std::string_view experiment_name(Experiment e);

/// Reshapes a prepared dataset for an experiment:
///  * just-jokes: category-0 records only, one category;
///  * forward-reverse: category-0 records under tag 0 plus their word
///    reversals under tag 1 (a dataset prepared with --reverse-augment is
///    used as is);
///  * three-category: requires exactly three categories.
corpus::Dataset experiment_dataset(Experiment e, const corpus::Dataset& prepared);

struct ExperimentResult {
  corpus::Dataset dataset;
  model::ModelConfig model_config;
  TrainResult training;
};

/// Loads the dataset in `data_dir`, applies `experiment_dataset`, fixes the
/// vocabulary size and category count in `mcfg`, and trains.
ExperimentResult run_experiment(Experiment e, const std::filesystem::path& data_dir,
                                const TrainingConfig& cfg, model::ModelConfig mcfg,
                                TrainOptions options = {});

}  // namespace catgen::train
