#pragma once

#include <string>

#include "tphenotype/encoder.hpp"
#include "tphenotype/predictor.hpp"

namespace tphenotype {

/// Trained model bundle: the composite encoder (per-feature weights plus the
/// static-feature declaration) and the predictor. The on-disk form is a JSON
/// document with flat named weight arrays; doubles round-trip bit-exactly.
struct Checkpoint {
  CompositeEncoder encoders;
  Predictor predictor;
  int dim_y = 0;
  std::string meta_json = "{}";  // training configuration snapshot
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tphenotype
