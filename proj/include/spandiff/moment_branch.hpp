#pragma once

#include <functional>
#include <random>
#include <vector>

#include "spandiff/config.hpp"
#include "spandiff/diffusion.hpp"
#include "spandiff/encoder.hpp"
#include "spandiff/nn.hpp"
#include "spandiff/span_geometry.hpp"

namespace spandiff {

/// Working state of the moment branch: N spans as (center, width) in the
/// diffusion working range plus per-proposal (foreground, background) logits.
struct ProposalSet {
  Eigen::MatrixXd spans;
  Eigen::MatrixXd confidences;
  int step = 0;

  Eigen::Index size() const { return spans.rows(); }
  Eigen::VectorXd foreground_prob() const;
};

struct MomentPrediction {
  TemporalSpan span;
  double score = 0.0;
};

Eigen::MatrixXd spans_to_working(const SpanSet& spans, double scale);
/// Unscales each row and clamps it to a valid span in [0, 1].
SpanSet working_to_spans(const Eigen::MatrixXd& working, double scale);

/// Pads the ground truth with N(0, 1) draws in the working range to exactly N
/// rows, then corrupts everything to step t. Rows [0, gt.size()) come from the
/// ground truth.
ProposalSet make_noisy_spans(const SpanSet& gt, int N, int t, const NoiseSchedule& sched,
                             double scale, std::mt19937_64& rng);

/// Clip range covered by a normalized span over `n_clips` equal clips, with
/// the nearest clip as fallback for spans that cover none.
std::pair<int, int> span_clip_range(const TemporalSpan& span, int n_clips);

/// Averaging matrix (N x rows): row i holds 1/k on the k clips inside span i.
/// Only the first `n_clips` columns (the unmasked prefix) are ever used.
Eigen::MatrixXd roi_pooling_matrix(const SpanSet& spans, int n_clips, int rows);

/// Average-pooled memory features per span (1-D RoI alignment on clips).
ag::Var roi_extract(const ag::Var& memory_video, const SpanSet& spans, int n_clips);

struct LayerOutput {
  ag::Var spans;     // N x 2 working range, clamped
  ag::Var logits;    // N x 2
  ag::Var features;  // N x D
};

/// Cascading denoiser: every layer pools RoI features for its input spans,
/// mixes proposals with self-attention, applies a per-proposal dynamic
/// interaction and an FFN, conditions on the step, and regresses a residual
/// span update plus a foreground logit pair. Weights are shared across
/// sampling steps.
class MomentDecoder {
 public:
  MomentDecoder() = default;
  MomentDecoder(nn::Initializer& init, const Config& cfg);

  /// Output of every layer, last one is the x_0 prediction.
  std::vector<LayerOutput> decode(const Eigen::MatrixXd& x_t, int t, const Memory& memory,
                                  const nn::Context& ctx) const;

  /// One layer. `features` may be undefined for the first layer, in which case
  /// the pooled RoI features seed the proposal features.
  LayerOutput denoise_layer(int layer, const ag::Var& features, const ag::Var& spans,
                            const ag::Var& time_features, const Memory& memory,
                            const nn::Context& ctx) const;

  ag::Var time_features(int t) const;

  /// Zeroes the final regression layer of every denoise layer.
  void zero_regression_heads();
  void zero_attention();
  int layers() const { return static_cast<int>(layers_.size()); }

 private:
  struct Layer {
    nn::Linear span_embed;
    nn::MultiHeadAttention self_attn;
    nn::LayerNorm norm1;
    nn::Linear dyn_params;
    nn::LayerNorm dyn_norm1;
    nn::LayerNorm dyn_norm2;
    nn::Linear dyn_out;
    nn::LayerNorm norm2;
    nn::Linear ff1;
    nn::Linear ff2;
    nn::LayerNorm norm3;
    nn::Linear time_scale_shift;
    nn::Linear cls_head;
    nn::Mlp reg_head;
  };

  int dim_ = 0;
  int dyn_dim_ = 0;
  double scale_ = 2.0;
  double dropout_ = 0.0;
  nn::Mlp time_mlp_;
  std::vector<Layer> layers_;
};

struct SamplerOptions {
  double scale = 2.0;
  double eta = 0.0;
  double renewal_threshold = 0.5;
  bool nms = false;
  double nms_iou = 0.7;
};

/// Maps a noisy proposal set (x_t, with `step` = t) to an x_0 prediction.
using MomentDenoiser = std::function<ProposalSet(const ProposalSet&)>;

struct MomentTrace {
  std::vector<ProposalSet> inputs;       // x_t fed to each decoder call
  std::vector<ProposalSet> predictions;  // x_0 estimate of each call
};

/// Iterative generation from pure noise: decode, DDIM-step to the next time,
/// re-draw proposals whose foreground probability is below the renewal
/// threshold, repeat. Returns every final proposal sorted by score.
std::vector<MomentPrediction> sample_moments(const MomentDenoiser& denoise, int n_proposals,
                                             int steps, const NoiseSchedule& sched,
                                             const SamplerOptions& opts, std::mt19937_64& rng,
                                             MomentTrace* trace = nullptr);

/// Converts an x_0 proposal set to clamped, score-sorted predictions.
std::vector<MomentPrediction> to_predictions(const ProposalSet& x0, const SamplerOptions& opts);

/// Greedy 1-D non-maximum suppression over score-sorted predictions.
std::vector<MomentPrediction> temporal_nms(const std::vector<MomentPrediction>& sorted,
                                           double iou_threshold);

}  // namespace spandiff
