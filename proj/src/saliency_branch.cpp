#include "spandiff/saliency_branch.hpp"

#include <cmath>

#include "spandiff/errors.hpp"

namespace spandiff {

Eigen::VectorXd SaliencyRange::to_working(const Eigen::VectorXd& labels) const {
  return (((labels.array() - lo) / (hi - lo)) * 2.0 - 1.0) * scale;
}

Eigen::VectorXd SaliencyRange::to_labels(const Eigen::VectorXd& working) const {
  return ((working.array() / scale + 1.0) * 0.5) * (hi - lo) + lo;
}

SaliencyDecoder::SaliencyDecoder(nn::Initializer& init, const Config& cfg)
    : dim_(cfg.model.dim),
      pool_(init, "saliency.pool", cfg.model.dim, 1, /*with_bias=*/false),
      time_(init, "saliency.time", cfg.model.dim, cfg.model.dim),
      wq_(init, "saliency.wq", cfg.model.dim, cfg.model.dim, false),
      wk_(init, "saliency.wk", cfg.model.dim, cfg.model.dim, false),
      wv_(init, "saliency.wv", cfg.model.dim, cfg.model.dim, false),
      head_(init, "saliency.head", {cfg.model.dim, cfg.model.dim, cfg.model.dim, 1}) {}

ag::Var SaliencyDecoder::attentive_pool(const FeatureSequence& text) const {
  text.validate();
  ag::Var scores = ag::transpose(pool_(text.tokens));  // 1 x N_q
  const ag::Matrix mask = nn::key_mask_row(text.mask);
  ag::Var weights = ag::softmax_rows(scores, &mask);
  return ag::matmul(weights, text.tokens);
}

ag::Var SaliencyDecoder::logits(const ag::Var& sentence, const FeatureSequence& video,
                                const Eigen::VectorXd& x_t, int t, ag::Var* values) const {
  video.validate();
  if (x_t.size() != video.length()) {
    throw ShapeError("saliency x_t has " + std::to_string(x_t.size()) + " entries for " +
                     std::to_string(video.length()) + " clips");
  }
  ag::Var emb = time_(ag::Var(ag::Matrix(timestep_embedding(t, dim_))));
  ag::Var q = wq_(ag::add(sentence, emb));
  ag::Var clips = ag::add_row(video.tokens, emb);
  ag::Var k = wk_(clips);
  *values = wv_(clips);
  ag::Var sim = ag::scale(ag::matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dim_)));
  return ag::add(sim, ag::Var(ag::Matrix(x_t.transpose())));
}

ag::Var SaliencyDecoder::noised_cross_attention(const ag::Var& sentence,
                                                const FeatureSequence& video,
                                                const Eigen::VectorXd& x_t, int t) const {
  ag::Var values;
  ag::Var lg = logits(sentence, video, x_t, t, &values);
  const ag::Matrix mask = nn::key_mask_row(video.mask);
  ag::Var w = ag::softmax_rows(lg, &mask);  // 1 x N_v
  return ag::mul_col(values, ag::transpose(w));
}

Eigen::RowVectorXd SaliencyDecoder::attention_weights(const ag::Var& sentence,
                                                      const FeatureSequence& video,
                                                      const Eigen::VectorXd& x_t, int t) const {
  ag::NoGradGuard guard;
  ag::Var values;
  ag::Var lg = logits(sentence, video, x_t, t, &values);
  const ag::Matrix mask = nn::key_mask_row(video.mask);
  return ag::softmax_rows(lg, &mask).value().row(0);
}

ag::Var SaliencyDecoder::decode(const Eigen::VectorXd& x_t, int t, const FeatureSequence& video,
                                const FeatureSequence& text, const nn::Context& ctx) const {
  ag::Var sentence = attentive_pool(text);
  ag::Var reweighted = noised_cross_attention(sentence, video, x_t, t);
  // weights average 1/N_v; rescale so the head sees unit-mean weights
  reweighted = ag::scale(reweighted, static_cast<double>(video.valid_count()));
  return head_(ctx.maybe_dropout(reweighted));
}

DiscriminativeSaliency::DiscriminativeSaliency(nn::Initializer& init, const Config& cfg)
    : linear_(init, "saliency.discriminative", cfg.model.dim, 1) {}

SaliencyVector fuse_saliency(const SaliencyVector& generated,
                             const SaliencyVector& discriminative) {
  if (generated.scores.size() != discriminative.scores.size()) {
    throw ShapeError("cannot fuse saliency vectors of length " +
                     std::to_string(generated.scores.size()) + " and " +
                     std::to_string(discriminative.scores.size()));
  }
  return {generated.scores + discriminative.scores, generated.space};
}

SaliencyVector sample_saliency(const SaliencyDenoiser& denoise, int n_clips, int steps,
                               const NoiseSchedule& sched, const SaliencyRange& range, double eta,
                               std::mt19937_64& rng, SaliencyTrace* trace) {
  if (n_clips < 1) throw EmptyInput("no clips to score");
  const std::vector<int> times = sampling_times(sched.max_step(), steps);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(n_clips);
  for (Eigen::Index i = 0; i < n_clips; ++i) x(i) = normal(rng);

  Eigen::VectorXd x0;
  for (size_t k = 0; k + 1 < times.size(); ++k) {
    const int t = times[k];
    const int t_prev = times[k + 1];
    x0 = denoise(x, t);
    if (x0.size() != n_clips) throw ShapeError("saliency denoiser changed the clip count");
    if (!x0.allFinite()) throw NumericalError("non-finite saliency estimate at step " + std::to_string(t));
    if (trace != nullptr) trace->predictions.push_back(x0);
    if (t_prev == 0) break;
    Eigen::MatrixXd eta_noise;
    if (eta > 0.0) {
      eta_noise.resize(n_clips, 1);
      for (Eigen::Index i = 0; i < n_clips; ++i) eta_noise(i) = normal(rng);
    }
    x = ddim_step({x, range.scale}, {x0, range.scale}, t, t_prev, eta, sched,
                  eta > 0.0 ? &eta_noise : nullptr)
            .values.col(0);
  }
  return {range.to_labels(x0), SaliencySpace::kLabel};
}

}  // namespace spandiff
