#include "support.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace catgen::testing {

std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(CATGEN_FIXTURE_DIR) / name;
}

std::vector<corpus::SourceText> read_tsv_sources(const std::filesystem::path& path) {
  std::map<CategoryId, corpus::SourceText> by_cat;
  for (const auto& line : corpus::read_lines(path)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("fixture line without tab: " + line);
    const auto cat = static_cast<CategoryId>(std::stoi(line.substr(0, tab)));
    by_cat[cat].category = cat;
    by_cat[cat].lines.push_back(line.substr(tab + 1));
  }
  std::vector<corpus::SourceText> out;
  for (auto& [c, s] : by_cat) out.push_back(std::move(s));
  return out;
}

corpus::Dataset toy_dataset() {
  return corpus::build_dataset(read_tsv_sources(fixture("toy_corpus.tsv")), {});
}

corpus::Dataset forward_reverse_dataset() {
  corpus::SourceText all;
  for (auto& s : read_tsv_sources(fixture("toy_corpus.tsv"))) {
    all.lines.insert(all.lines.end(), s.lines.begin(), s.lines.end());
  }
  corpus::PrepareOptions opt;
  opt.reverse_augment = true;
  return corpus::build_dataset({all}, opt);
}

corpus::Dataset disjoint_dataset() {
  return corpus::build_dataset(read_tsv_sources(fixture("disjoint_corpus.tsv")), {});
}

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.vocab_size = 12;
  c.glove_dim = 3;
  c.input_embed_dim = 4;
  c.dense1_dim = 4;
  c.lstm1_dim = 6;
  c.lstm2_dim = 4;
  c.dense2_dim = 4;
  c.seq_len = 3;
  c.num_categories = 2;
  c.dropout = 0.2;
  c.l2 = 1e-3;
  return c;
}

model::ModelConfig small_config(const corpus::Dataset& ds) {
  model::ModelConfig c;
  c.vocab_size = ds.vocab.size();
  c.num_categories = ds.num_categories;
  c.glove_dim = 8;
  c.input_embed_dim = 16;
  c.dense1_dim = 32;
  c.lstm1_dim = 32;
  c.lstm2_dim = 16;
  c.dense2_dim = 32;
  c.seq_len = 13;
  c.dropout = 0.0;
  c.l2 = 1e-5;
  return c;
}

train::TrainingConfig small_training(std::size_t epochs, std::uint64_t seed) {
  train::TrainingConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.lr = 5e-3;
  t.rng_seed = seed;
  return t;
}

model::Checkpoint train_checkpoint(const corpus::Dataset& ds, const model::ModelConfig& mcfg,
                                   const train::TrainingConfig& tcfg) {
  const train::TrainingSet set(ds.records, mcfg.num_categories, mcfg.seq_len);
  auto r = train::train(set, tcfg, mcfg);
  return {mcfg, ds.vocab, std::move(r.params), std::move(r.optimizer)};
}

double token_accuracy(const model::Checkpoint& ck,
                      const std::vector<corpus::SentenceRecord>& records) {
  std::size_t correct = 0, total = 0;
  Rng rng(0);
  for (const auto& r : records) {
    const auto examples = corpus::window_examples(r, ck.config.seq_len);
    const auto batch = model::Batch::from_examples(examples);
    const auto fwd = model::forward_sequence(ck.params, ck.config, batch, false, rng);
    correct += fwd.correct;
    total += fwd.predicted;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

model::Batch random_batch(const model::ModelConfig& cfg, std::size_t batch, Rng& rng) {
  std::vector<corpus::TrainingExample> examples(batch);
  for (auto& ex : examples) {
    ex.category = static_cast<CategoryId>(rng.index(cfg.num_categories));
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
      ex.inputs.push_back(static_cast<TokenId>(rng.index(cfg.vocab_size)));
      ex.targets.push_back(static_cast<TokenId>(rng.index(cfg.vocab_size)));
      ex.mask.push_back(rng.uniform() < 0.8 ? 1 : 0);
    }
  }
  examples[0].mask[0] = 1;
  return model::Batch::from_examples(examples);
}

GradCheck gradient_check(const model::ModelParams& params, const model::ModelConfig& cfg,
                         const model::Batch& batch, bool training, std::uint64_t dropout_seed) {
  constexpr double eps = 1e-5;
  auto loss_of = [&](const model::ModelParams& p) {
    Rng rng(dropout_seed);
    return model::forward_sequence(p, cfg, batch, training, rng).loss;
  };
  Rng rng(dropout_seed);
  const auto fwd = model::forward_sequence(params, cfg, batch, training, rng);
  const auto grads = model::backward_sequence(params, cfg, batch, fwd);

  std::vector<const Tensor*> analytic;
  grads.visit([&](std::string_view, const Tensor& t, model::ParamKind) { analytic.push_back(&t); });

  GradCheck out;
  auto probe = params;
  std::size_t index = 0;
  probe.visit([&](std::string_view name, Tensor& t, model::ParamKind kind) {
    const Tensor& g = *analytic[index++];
    if (kind == model::ParamKind::Frozen) {
      for (double v : g.values()) {
        if (v != 0.0) {
          ++out.failures;
          out.worst = std::string(name) + " (frozen) has a gradient";
        }
      }
      return;
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = loss_of(probe);
      t[i] = saved - eps;
      const double down = loss_of(probe);
      t[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = g[i];
      const double diff = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale > 0 ? diff / scale : 0.0;
      ++out.entries;
      if (!(diff <= 1e-4 * scale || diff <= 1e-8)) {
        ++out.failures;
        out.worst = std::string(name) + "[" + std::to_string(i) + "] analytic " +
                    std::to_string(a) + " numeric " + std::to_string(numeric);
      }
      if (scale > 1e-6) out.max_rel_error = std::max(out.max_rel_error, rel);
    }
  });
  return out;
}

}  // namespace catgen::testing
