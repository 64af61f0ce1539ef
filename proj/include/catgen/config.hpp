#pragma once

// Model and training hyperparameters as flat key=value pairs. Model keys
// are prefixed "model.", training keys "train.".

#include "catgen/keyvalue.hpp"
#include "catgen/model.hpp"
#include "catgen/trainer.hpp"

namespace catgen {

/// Overwrites the fields named in `kv`. Unknown keys throw.
void apply_config(const KeyValues& kv, model::ModelConfig& model, train::TrainingConfig& train);

KeyValues to_key_values(const model::ModelConfig& model);
KeyValues to_key_values(const train::TrainingConfig& train);
KeyValues to_key_values(const model::ModelConfig& model, const train::TrainingConfig& train);

}  // namespace catgen
