#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spandiff/checkpoint.hpp"
#include "spandiff/data_io.hpp"
#include "spandiff/metrics.hpp"
#include "spandiff/model.hpp"

namespace spandiff {

/// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);
  /// Applies one update from the accumulated gradients (missing gradients are
  /// treated as zero).
  void step(nn::ParamSet& params);
  int steps() const { return t_; }
  double lr() const { return lr_; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  int t_ = 0;
  std::vector<ag::Matrix> m_, v_;
};

/// Training proposal count: linear from `start` to `max` over the first
/// `ramp_fraction` of training, `max` afterwards. `progress` is in [0, 1].
int scheduled_proposals(int start, int max, double ramp_fraction, double progress);

/// Global-norm gradient clipping; returns the norm before clipping.
double clip_gradients(nn::ParamSet& params, double max_norm);

struct TrainLogEntry {
  int iteration = 0;
  int epoch = 0;
  int n_proposals = 0;
  double loss = 0.0;
  double cls = 0.0;
  double span = 0.0;
  double hinge = 0.0;
  double kl = 0.0;
  double seconds = 0.0;
};

struct ValidationPoint {
  int iteration = 0;
  double map_avg = 0.0;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;  // one entry per iteration
  std::vector<ValidationPoint> validation;
  TrainState state;
  double seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainLogEntry&)> on_log;
  std::function<void(const ValidationPoint&)> on_validation;
};

/// Seeded minibatch training. With a validation set the best parameters by
/// mAP@Avg are restored at the end and written to `checkpoint_path` when it
/// is non-empty; otherwise the final parameters are kept and written.
/// Throws NumericalError naming the iteration and example on divergence.
TrainResult train(GroundingModel& model, const Dataset& train_set, const Dataset* validation,
                  const std::string& checkpoint_path = "", const TrainHooks& hooks = {});

struct EvaluationResult {
  MomentMetrics moments;
  HighlightMetrics highlights;
  double saliency_spearman = 0.0;  // mean over videos with labels
  double seconds = 0.0;
  std::vector<InferenceResult> outputs;
};

/// Pure given (model, data, options, seed): example i uses its own rng stream.
EvaluationResult evaluate(const GroundingModel& model, const Dataset& data,
                          const InferenceOptions& opts, std::uint64_t seed,
                          bool keep_outputs = false);

}  // namespace spandiff
