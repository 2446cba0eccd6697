#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spandiff/diffusion.hpp"

namespace spandiff {

struct DiffusionConfig {
  int T = 1000;
  ScheduleKind schedule = ScheduleKind::kCosine;
  double scale = 2.0;
  double eta = 0.0;
};

struct ModelConfig {
  int dim = 256;
  int max_clips = 75;
  int max_text = 32;
};

struct EncoderConfig {
  int layers = 6;
  int heads = 8;
  int ffn_dim = 1024;
  double dropout = 0.1;
};

struct MomentConfig {
  int N_train_max = 20;
  int N_infer = 20;
  int steps = 5;
  double renewal_threshold = 0.5;
  int decoder_layers = 2;
  int heads = 8;
  int ffn_dim = 1024;
  int dynamic_dim = 0;  // 0 means dim / 4
  bool aux_loss = false;
  bool nms = false;
  double nms_iou = 0.7;
};

struct SaliencyConfig {
  int steps = 5;
  double label_min = 0.0;
  double label_max = 4.0;
  /// Clips whose mean label reaches this value count as positives in
  /// highlight metrics ("Very Good" on the 0..4 scale).
  double positive_threshold = 4.0;
};

struct LossConfig {
  double lambda_l1 = 5.0;
  double lambda_iou = 2.0;
  double lambda_class = 2.0;
  double lambda_saliency = 1.0;
  double margin = 0.2;
  int hinge_pairs = 1;  // 0 means all (pos, neg) pairs
};

struct TrainConfig {
  int epochs = 300;
  std::string optimizer = "adamw";
  double lr = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 32;
  std::uint64_t seed = 2023;
  int N_start = 1;
  /// Fraction of training over which the proposal count ramps from N_start
  /// to moment.N_train_max. 0 disables the ramp.
  double ramp_fraction = 1.0 / 3.0;
  double grad_clip = 0.0;  // 0 disables global-norm clipping
  int max_iterations = 0;  // 0 means epochs * batches
  int eval_every = 0;      // epochs between validation passes, 0 = only at end
  int log_every = 50;
};

struct EvalConfig {
  std::vector<double> r1_thresholds{0.1, 0.3, 0.5, 0.7};
  std::vector<double> map_thresholds{0.5, 0.75};
  int max_predictions = 10;
  std::uint64_t seed = 7;
};

struct Config {
  DiffusionConfig diffusion;
  ModelConfig model;
  EncoderConfig encoder;
  MomentConfig moment;
  SaliencyConfig saliency;
  LossConfig loss;
  TrainConfig train;
  EvalConfig eval;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static Config from_json(const nlohmann::json& j);
  static Config load(const std::string& path);
  void save(const std::string& path) const;

  /// Applies `section.key=value`; value is parsed as JSON when possible.
  void set(const std::string& dotted_key, const std::string& value);

  int dynamic_dim() const { return moment.dynamic_dim > 0 ? moment.dynamic_dim : model.dim / 4; }
  void validate() const;
};

/// Compact model used by tests and the synthetic pipeline.
Config desk_config();

}  // namespace spandiff
