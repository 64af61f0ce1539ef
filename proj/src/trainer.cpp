#include "catgen/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "catgen/checkpoint.hpp"
#include "catgen/keyvalue.hpp"

namespace catgen::train {

std::vector<double> TrainingConfig::resolved_weights(std::size_t num_categories) const {
  if (category_weights.empty()) {
    return std::vector<double>(num_categories, 1.0 / static_cast<double>(num_categories));
  }
  if (category_weights.size() != num_categories) {
    throw std::invalid_argument("category_weights needs one entry per category");
  }
  double sum = 0.0;
  for (double w : category_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("category weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("category weights must sum to 1");
  return category_weights;
}

TrainingSet::TrainingSet(std::span<const corpus::SentenceRecord> records,
                         std::size_t num_categories, std::size_t seq_len)
    : by_category_(num_categories) {
  for (const auto& r : records) {
    corpus::validate(r);
    if (static_cast<std::size_t>(r.category) >= num_categories) {
      throw std::out_of_range("record category exceeds num_categories");
    }
    for (auto& ex : corpus::window_examples(r, seq_len)) {
      by_category_[static_cast<std::size_t>(r.category)].push_back(std::move(ex));
      ++size_;
    }
  }
}

std::vector<ExampleRef> stratified_indices(const TrainingSet& set,
                                           std::span<const double> weights,
                                           std::size_t batch_size, Rng& rng) {
  if (weights.size() != set.num_categories()) {
    throw std::invalid_argument("one sampling weight per category required");
  }
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (weights[c] > 0.0 && set.category(c).empty()) {
      throw std::invalid_argument("category " + std::to_string(c) +
                                  " has positive weight but no examples");
    }
  }
  std::vector<double> cumulative(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  std::size_t last_positive = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (weights[c] > 0.0) last_positive = c;
  }

  std::vector<ExampleRef> refs;
  refs.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const double u = rng.uniform() * cumulative.back();
    std::size_t c = 0;
    while (c < last_positive && (weights[c] <= 0.0 || u >= cumulative[c])) ++c;
    refs.push_back({c, rng.index(set.category(c).size())});
  }
  return refs;
}

std::vector<corpus::TrainingExample> stratified_batch(const TrainingSet& set,
                                                      std::span<const double> weights,
                                                      std::size_t batch_size, Rng& rng) {
  std::vector<corpus::TrainingExample> out;
  for (const auto& ref : stratified_indices(set, weights, batch_size, rng)) {
    out.push_back(set.category(ref.category)[ref.index]);
  }
  return out;
}

std::size_t steps_per_epoch(const TrainingSet& set, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  return (set.size() + batch_size - 1) / batch_size;
}

double clip_global_norm(model::ModelGradients& grads, double max_norm) {
  double sq = 0.0;
  grads.visit([&](std::string_view, const Tensor& t, model::ParamKind kind) {
    if (kind == model::ParamKind::Frozen) return;
    for (double v : t.values()) sq += v * v;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grads.visit([&](std::string_view, Tensor& t, model::ParamKind) {
      for (auto& v : t.values()) v *= scale;
    });
  }
  return norm;
}

namespace {

std::string describe_batch(const std::vector<ExampleRef>& refs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i) out << ',';
    out << refs[i].category << ':' << refs[i].index;
  }
  return out.str();
}

}  // namespace

TrainResult train(const TrainingSet& set, const TrainingConfig& cfg,
                  const model::ModelConfig& mcfg, TrainOptions options) {
  mcfg.validate();
  if (set.size() == 0) throw std::invalid_argument("training corpus is empty");
  if (set.num_categories() != mcfg.num_categories) {
    throw std::invalid_argument("training set and model disagree on category count");
  }
  const auto weights = cfg.resolved_weights(mcfg.num_categories);
  const bool checkpointing = cfg.checkpoint_every > 0 && !options.checkpoint_path.empty();
  if (checkpointing && options.vocab == nullptr) {
    throw std::invalid_argument("periodic checkpoints need the vocabulary");
  }

  Rng rng(cfg.rng_seed);
  TrainResult result;
  if (options.initial) {
    options.initial->check_shapes(mcfg);
    result.params = std::move(*options.initial);
  } else {
    result.params = model::ModelParams::init(
        mcfg, rng, options.pretrained ? &*options.pretrained : nullptr);
  }
  std::size_t tensor_count = 0;
  result.params.visit([&](std::string_view, const Tensor&, model::ParamKind) { ++tensor_count; });
  result.optimizer = options.optimizer.value_or(nn::AdamState{});
  if (result.optimizer.moments.empty()) result.optimizer.moments.resize(tensor_count);
  if (result.optimizer.moments.size() != tensor_count) {
    throw std::invalid_argument("optimizer state does not match the parameter set");
  }

  const nn::AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon};
  const std::size_t steps = steps_per_epoch(set, cfg.batch_size);
  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot open training log: " + options.log_path.string());
  }

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t predicted = 0;
    for (std::size_t step = 0; step < steps; ++step) {
      const auto refs = stratified_indices(set, weights, cfg.batch_size, rng);
      std::vector<corpus::TrainingExample> examples;
      examples.reserve(refs.size());
      for (const auto& ref : refs) examples.push_back(set.category(ref.category)[ref.index]);
      const auto batch = model::Batch::from_examples(examples);

      const auto fwd = model::forward_sequence(result.params, mcfg, batch, true, rng);
      if (!std::isfinite(fwd.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(step + 1) + " (optimizer step " +
                            std::to_string(result.optimizer.step + 1) +
                            "); batch category:index = " + describe_batch(refs));
      }
      auto grads = model::backward_sequence(result.params, mcfg, batch, fwd);
      clip_global_norm(grads, cfg.clip_norm);

      ++result.optimizer.step;
      std::vector<const Tensor*> grad_tensors;
      grads.visit([&](std::string_view, const Tensor& t, model::ParamKind) {
        grad_tensors.push_back(&t);
      });
      std::size_t i = 0;
      result.params.visit([&](std::string_view, Tensor& t, model::ParamKind kind) {
        if (kind != model::ParamKind::Frozen) {
          nn::adam_update(t, *grad_tensors[i], result.optimizer.moments[i], adam,
                          result.optimizer.step);
        }
        ++i;
      });

      loss_sum += fwd.loss;
      correct += fwd.correct;
      predicted += fwd.predicted;
    }

    EpochReport report;
    report.epoch = epoch;
    report.mean_loss = loss_sum / static_cast<double>(steps);
    report.accuracy =
        predicted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted);
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.reports.push_back(report);

    if (log) {
      log << report.epoch << '\t' << format_double(report.mean_loss) << '\t'
          << format_double(report.accuracy) << '\t' << format_double(report.seconds) << '\n';
      log.flush();
    }
    if (options.on_epoch) options.on_epoch(report);
    if (checkpointing && epoch % cfg.checkpoint_every == 0) {
      model::save_checkpoint({mcfg, *options.vocab, result.params, result.optimizer},
                             options.checkpoint_path);
    }
  }
  return result;
}

Experiment parse_experiment(std::string_view name) {
  if (name == "just-jokes") return Experiment::JustJokes;
  if (name == "forward-reverse") return Experiment::ForwardReverse;
  if (name == "three-category") return Experiment::ThreeCategory;
  throw std::invalid_argument("unknown experiment '" + std::string(name) +
                              "' (expected just-jokes, forward-reverse or three-category)");
}

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::JustJokes:
      return "just-jokes";
    case Experiment::ForwardReverse:
      return "forward-reverse";
    case Experiment::ThreeCategory:
      return "three-category";
  }
  return "unknown";
}

corpus::Dataset experiment_dataset(Experiment e, const corpus::Dataset& prepared) {
  corpus::Dataset ds;
  ds.vocab = prepared.vocab;
  switch (e) {
    case Experiment::JustJokes:
      ds.num_categories = 1;
      for (const auto& r : prepared.records) {
        if (r.category == 0) ds.records.push_back(r);
      }
      break;
    case Experiment::ForwardReverse:
      if (prepared.reverse_augmented) return prepared;
      ds.num_categories = 2;
      ds.reverse_augmented = true;
      for (const auto& r : prepared.records) {
        if (r.category == 0) ds.records.push_back(r);
      }
      for (std::size_t i = 0, n = ds.records.size(); i < n; ++i) {
        auto rev = corpus::reverse_record(ds.records[i]);
        rev.category = 1;
        ds.records.push_back(std::move(rev));
      }
      break;
    case Experiment::ThreeCategory:
      if (prepared.num_categories != 3) {
        throw std::invalid_argument("three-category experiment needs a dataset with 3 categories");
      }
      return prepared;
  }
  if (ds.records.empty()) throw std::invalid_argument("experiment dataset has no category-0 records");
  return ds;
}

ExperimentResult run_experiment(Experiment e, const std::filesystem::path& data_dir,
                                const TrainingConfig& cfg, model::ModelConfig mcfg,
                                TrainOptions options) {
  ExperimentResult out;
  out.dataset = experiment_dataset(e, corpus::load_dataset(data_dir));
  mcfg.vocab_size = out.dataset.vocab.size();
  mcfg.num_categories = out.dataset.num_categories;
  out.model_config = mcfg;
  if (options.vocab == nullptr) options.vocab = &out.dataset.vocab;
  const TrainingSet set(out.dataset.records, mcfg.num_categories, mcfg.seq_len);
  out.training = train(set, cfg, mcfg, std::move(options));
  return out;
}

}  // namespace catgen::train
