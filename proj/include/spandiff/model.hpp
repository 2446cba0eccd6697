#pragma once

#include <memory>
#include <random>
#include <vector>

#include "spandiff/config.hpp"
#include "spandiff/data_io.hpp"
#include "spandiff/diffusion.hpp"
#include "spandiff/encoder.hpp"
#include "spandiff/matching_loss.hpp"
#include "spandiff/moment_branch.hpp"
#include "spandiff/nn.hpp"
#include "spandiff/saliency_branch.hpp"

namespace spandiff {

struct InferenceOptions {
  int n_proposals = 20;
  int moment_steps = 5;
  int saliency_steps = 5;
  int exit_layer = 0;  // 1-based decoder layer read as x_0; 0 is the last
  SamplerOptions sampler;

  static InferenceOptions from_config(const Config& cfg);
};

struct InferenceResult {
  std::vector<MomentPrediction> moments;  // sorted by score
  Eigen::VectorXd saliency;               // s_gen + s_dis, one per clip
  Eigen::VectorXd s_gen;                  // label units
  Eigen::VectorXd s_dis;
  MomentTrace moment_trace;
  SaliencyTrace saliency_trace;
};

/// Fixed draws for one training forward pass. Sampled from an rng when not
/// supplied, which keeps finite-difference checks reproducible.
struct TrainingNoise {
  int t = 0;
  Eigen::MatrixXd padding;          // (N - #gt) x 2 random spans, working range
  Eigen::MatrixXd span_noise;       // N x 2
  Eigen::VectorXd saliency_noise;   // n_clips
  std::vector<std::pair<int, int>> hinge_pairs;

  static TrainingNoise sample(const Example& ex, int n_proposals, int T, int hinge_pairs,
                              std::mt19937_64& rng);
};

struct TrainingForward {
  LossComponents parts;
  ag::Var total;
  MatchAssignment match;
  int n_proposals = 0;
};

/// Encoder plus the moment and saliency denoisers sharing one parameter set.
class GroundingModel {
 public:
  GroundingModel(const Config& cfg, int video_dim, int text_dim);
  GroundingModel(const GroundingModel&) = delete;
  GroundingModel& operator=(const GroundingModel&) = delete;
  GroundingModel(GroundingModel&&) = default;
  GroundingModel& operator=(GroundingModel&&) = default;

  Memory encode(const Example& ex, const nn::Context& ctx) const;

  /// Loss for one example: ground truth padded to `n_proposals` (raised to
  /// the target count when smaller), corrupted at the noise's step, decoded,
  /// matched and scored.
  TrainingForward training_loss(const Example& ex, const TrainingNoise& noise,
                                const nn::Context& ctx) const;

  /// Deterministic given `rng`.
  InferenceResult infer(const Example& ex, const InferenceOptions& opts, std::mt19937_64& rng,
                        bool keep_trace = false) const;

  const Config& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return sched_; }
  int video_dim() const { return video_dim_; }
  int text_dim() const { return text_dim_; }
  nn::ParamSet& params() { return *params_; }
  const nn::ParamSet& params() const { return *params_; }
  CrossModalEncoder& encoder() { return encoder_; }
  MomentDecoder& moment_decoder() { return moment_; }
  SaliencyDecoder& saliency_decoder() { return saliency_; }
  const MomentDecoder& moment_decoder() const { return moment_; }
  const SaliencyDecoder& saliency_decoder() const { return saliency_; }
  SaliencyRange saliency_range() const;

 private:
  Config cfg_;
  int video_dim_ = 0;
  int text_dim_ = 0;
  NoiseSchedule sched_;
  std::unique_ptr<nn::ParamSet> params_;
  CrossModalEncoder encoder_;
  MomentDecoder moment_;
  SaliencyDecoder saliency_;
  DiscriminativeSaliency discriminative_;
};

/// Memory tokens repackaged as sequences for the saliency decoder.
std::pair<FeatureSequence, FeatureSequence> memory_sequences(const Memory& memory);

}  // namespace spandiff
