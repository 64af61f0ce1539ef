#include "catgen/config.hpp"

#include <functional>
#include <stdexcept>

namespace catgen {

namespace {

using Setter = std::function<void(std::string_view)>;

std::map<std::string, Setter, std::less<>> setters(model::ModelConfig& m,
                                                   train::TrainingConfig& t) {
  auto size = [](std::size_t& f, const char* name) {
    return [&f, name](std::string_view v) { f = parse_size(v, name); };
  };
  auto real = [](double& f, const char* name) {
    return [&f, name](std::string_view v) { f = parse_double(v, name); };
  };
  return {
      {"model.vocab_size", size(m.vocab_size, "model.vocab_size")},
      {"model.glove_dim", size(m.glove_dim, "model.glove_dim")},
      {"model.input_embed_dim", size(m.input_embed_dim, "model.input_embed_dim")},
      {"model.dense1_dim", size(m.dense1_dim, "model.dense1_dim")},
      {"model.lstm1_dim", size(m.lstm1_dim, "model.lstm1_dim")},
      {"model.lstm2_dim", size(m.lstm2_dim, "model.lstm2_dim")},
      {"model.dense2_dim", size(m.dense2_dim, "model.dense2_dim")},
      {"model.dropout", real(m.dropout, "model.dropout")},
      {"model.l2", real(m.l2, "model.l2")},
      {"model.seq_len", size(m.seq_len, "model.seq_len")},
      {"model.num_categories", size(m.num_categories, "model.num_categories")},
      {"train.batch_size", size(t.batch_size, "train.batch_size")},
      {"train.epochs", size(t.epochs, "train.epochs")},
      {"train.lr", real(t.lr, "train.lr")},
      {"train.beta1", real(t.beta1, "train.beta1")},
      {"train.beta2", real(t.beta2, "train.beta2")},
      {"train.epsilon", real(t.epsilon, "train.epsilon")},
      {"train.rng_seed", [&t](std::string_view v) { t.rng_seed = parse_u64(v, "train.rng_seed"); }},
      {"train.category_weights",
       [&t](std::string_view v) {
         t.category_weights =
             v.empty() ? std::vector<double>{} : parse_double_list(v, "train.category_weights");
       }},
      {"train.checkpoint_every", size(t.checkpoint_every, "train.checkpoint_every")},
      {"train.clip_norm", real(t.clip_norm, "train.clip_norm")},
  };
}

}  // namespace

void apply_config(const KeyValues& kv, model::ModelConfig& model, train::TrainingConfig& train) {
  const auto table = setters(model, train);
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw std::invalid_argument("unknown config key: " + key);
    it->second(value);
  }
}

KeyValues to_key_values(const model::ModelConfig& m) {
  return {
      {"model.vocab_size", std::to_string(m.vocab_size)},
      {"model.glove_dim", std::to_string(m.glove_dim)},
      {"model.input_embed_dim", std::to_string(m.input_embed_dim)},
      {"model.dense1_dim", std::to_string(m.dense1_dim)},
      {"model.lstm1_dim", std::to_string(m.lstm1_dim)},
      {"model.lstm2_dim", std::to_string(m.lstm2_dim)},
      {"model.dense2_dim", std::to_string(m.dense2_dim)},
      {"model.dropout", format_double(m.dropout)},
      {"model.l2", format_double(m.l2)},
      {"model.seq_len", std::to_string(m.seq_len)},
      {"model.num_categories", std::to_string(m.num_categories)},
  };
}

KeyValues to_key_values(const train::TrainingConfig& t) {
  std::string weights;
  for (std::size_t i = 0; i < t.category_weights.size(); ++i) {
    if (i) weights += ',';
    weights += format_double(t.category_weights[i]);
  }
  return {
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.epochs", std::to_string(t.epochs)},
      {"train.lr", format_double(t.lr)},
      {"train.beta1", format_double(t.beta1)},
      {"train.beta2", format_double(t.beta2)},
      {"train.epsilon", format_double(t.epsilon)},
      {"train.rng_seed", std::to_string(t.rng_seed)},
      {"train.category_weights", weights},
      {"train.checkpoint_every", std::to_string(t.checkpoint_every)},
      {"train.clip_norm", format_double(t.clip_norm)},
  };
}

KeyValues to_key_values(const model::ModelConfig& model, const train::TrainingConfig& train) {
  auto kv = to_key_values(model);
  kv.merge(to_key_values(train));
  return kv;
}

}  // namespace catgen
