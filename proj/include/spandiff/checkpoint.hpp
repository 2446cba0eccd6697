#pragma once

#include <string>

#include <json.hpp>

#include "spandiff/model.hpp"

namespace spandiff {

/// Training bookkeeping stored next to the weights.
struct TrainState {
  int iteration = 0;
  int epoch = 0;
  int n_proposals = 0;
  double best_validation = -1.0;  // mAP@Avg, -1 when never validated
  int best_iteration = -1;

  nlohmann::json to_json() const;
  static TrainState from_json(const nlohmann::json& j);
};

struct LoadedCheckpoint {
  GroundingModel model;
  TrainState state;
};

/// Layout: "SPDCKPT\0", u32 version, u64 header size, JSON header (config,
/// feature widths, train state, parameter names and shapes), then every
/// parameter as little-endian float64 in column-major order.
void save_checkpoint(const std::string& path, const GroundingModel& model, const TrainState& state);

/// Rebuilds the model from the stored config; throws CheckpointError on a
/// corrupt file or a parameter layout that does not match the config.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace spandiff
