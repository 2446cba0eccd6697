#pragma once

#include <functional>
#include <random>

#include "spandiff/config.hpp"
#include "spandiff/diffusion.hpp"
#include "spandiff/encoder.hpp"
#include "spandiff/nn.hpp"

namespace spandiff {

enum class SaliencySpace { kLabel, kWorking };

/// One score per clip. Label space is the dataset's score units, working
/// space is the diffusion range [-scale, scale].
struct SaliencyVector {
  Eigen::VectorXd scores;
  SaliencySpace space = SaliencySpace::kLabel;
};

/// Affine map between label range [lo, hi] and the working range.
struct SaliencyRange {
  double lo = 0.0;
  double hi = 4.0;
  double scale = 2.0;

  Eigen::VectorXd to_working(const Eigen::VectorXd& labels) const;
  Eigen::VectorXd to_labels(const Eigen::VectorXd& working) const;
};

/// Generative highlight head: a sentence vector obtained by attentive pooling
/// queries the clips through a cross-attention whose logits are biased by the
/// noisy saliency vector; an MLP maps the reweighted clips to x_0.
class SaliencyDecoder {
 public:
  SaliencyDecoder() = default;
  SaliencyDecoder(nn::Initializer& init, const Config& cfg);

  /// softmax(w . token) weighted sum of the valid tokens, 1 x D.
  ag::Var attentive_pool(const FeatureSequence& text) const;

  /// Clip features reweighted by softmax(q k^T / sqrt(D) + x_t) over valid
  /// clips; row i is weight_i * value_i (N_v x D). Summing the rows gives the
  /// usual single-query cross-attention output.
  ag::Var noised_cross_attention(const ag::Var& sentence, const FeatureSequence& video,
                                 const Eigen::VectorXd& x_t, int t) const;

  /// Attention weights only (1 x N_v), for inspection.
  Eigen::RowVectorXd attention_weights(const ag::Var& sentence, const FeatureSequence& video,
                                       const Eigen::VectorXd& x_t, int t) const;

  /// x_0 prediction in working space, N_v x 1.
  ag::Var decode(const Eigen::VectorXd& x_t, int t, const FeatureSequence& video,
                 const FeatureSequence& text, const nn::Context& ctx) const;

  nn::Linear& query_projection() { return wq_; }
  nn::Linear& key_projection() { return wk_; }
  nn::Linear& value_projection() { return wv_; }
  nn::Linear& pool_projection() { return pool_; }
  nn::Linear& time_projection() { return time_; }

 private:
  ag::Var logits(const ag::Var& sentence, const FeatureSequence& video, const Eigen::VectorXd& x_t,
                 int t, ag::Var* values) const;

  int dim_ = 0;
  nn::Linear pool_;
  nn::Linear time_;
  nn::Linear wq_;
  nn::Linear wk_;
  nn::Linear wv_;
  nn::Mlp head_;
};

/// s_dis = Linear(M_V), N_v x 1.
class DiscriminativeSaliency {
 public:
  DiscriminativeSaliency() = default;
  DiscriminativeSaliency(nn::Initializer& init, const Config& cfg);
  ag::Var operator()(const Memory& memory) const { return linear_(memory.video); }
  nn::Linear& linear() { return linear_; }

 private:
  nn::Linear linear_;
};

/// Elementwise sum; throws ShapeError on a length mismatch.
SaliencyVector fuse_saliency(const SaliencyVector& generated, const SaliencyVector& discriminative);

/// Maps a noisy working-space vector x_t at step t to an x_0 estimate.
using SaliencyDenoiser = std::function<Eigen::VectorXd(const Eigen::VectorXd& x_t, int t)>;

struct SaliencyTrace {
  std::vector<Eigen::VectorXd> predictions;
};

/// Starts from Gaussian noise and alternates decode / DDIM step; the final
/// x_0 estimate is returned in label space.
SaliencyVector sample_saliency(const SaliencyDenoiser& denoise, int n_clips, int steps,
                               const NoiseSchedule& sched, const SaliencyRange& range, double eta,
                               std::mt19937_64& rng, SaliencyTrace* trace = nullptr);

}  // namespace spandiff
