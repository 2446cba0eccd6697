#include "spandiff/model.hpp"

#include <algorithm>
#include <cmath>

#include "spandiff/errors.hpp"

namespace spandiff {

InferenceOptions InferenceOptions::from_config(const Config& cfg) {
  InferenceOptions o;
  o.n_proposals = cfg.moment.N_infer;
  o.moment_steps = cfg.moment.steps;
  o.saliency_steps = cfg.saliency.steps;
  o.sampler.scale = cfg.diffusion.scale;
  o.sampler.eta = cfg.diffusion.eta;
  o.sampler.renewal_threshold = cfg.moment.renewal_threshold;
  o.sampler.nms = cfg.moment.nms;
  o.sampler.nms_iou = cfg.moment.nms_iou;
  return o;
}

TrainingNoise TrainingNoise::sample(const Example& ex, int n_proposals, int T, int hinge_pairs,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TrainingNoise n;
  n.t = std::uniform_int_distribution<int>(0, T)(rng);
  const int gt = static_cast<int>(ex.spans.size());
  const int N = std::max(n_proposals, gt);
  n.padding.resize(N - gt, 2);
  for (Eigen::Index i = 0; i < n.padding.size(); ++i) n.padding(i) = normal(rng);
  n.span_noise.resize(N, 2);
  for (Eigen::Index i = 0; i < n.span_noise.size(); ++i) n.span_noise(i) = normal(rng);
  if (ex.saliency.size() > 0) {
    n.saliency_noise.resize(ex.saliency.size());
    for (Eigen::Index i = 0; i < n.saliency_noise.size(); ++i) n.saliency_noise(i) = normal(rng);
    const std::vector<bool> valid(static_cast<size_t>(ex.saliency.size()), true);
    n.hinge_pairs = sample_hinge_pairs(ex.saliency, ex.inside, valid, hinge_pairs, rng);
  }
  return n;
}

std::pair<FeatureSequence, FeatureSequence> memory_sequences(const Memory& memory) {
  FeatureSequence v{memory.video, memory.video_mask, Modality::kVideo};
  FeatureSequence q{memory.text, memory.text_mask, Modality::kText};
  return {v, q};
}

GroundingModel::GroundingModel(const Config& cfg, int video_dim, int text_dim)
    : cfg_(cfg),
      video_dim_(video_dim),
      text_dim_(text_dim),
      sched_(NoiseSchedule::build(cfg.diffusion.T, cfg.diffusion.schedule)),
      params_(std::make_unique<nn::ParamSet>()) {
  cfg_.validate();
  std::mt19937_64 rng(cfg.train.seed);
  nn::Initializer init(*params_, rng);
  encoder_ = CrossModalEncoder(init, cfg_, video_dim, text_dim);
  moment_ = MomentDecoder(init, cfg_);
  saliency_ = SaliencyDecoder(init, cfg_);
  discriminative_ = DiscriminativeSaliency(init, cfg_);
}

SaliencyRange GroundingModel::saliency_range() const {
  return {cfg_.saliency.label_min, cfg_.saliency.label_max, cfg_.diffusion.scale};
}

Memory GroundingModel::encode(const Example& ex, const nn::Context& ctx) const {
  const auto [v, q] = encoder_.project_features(FeatureSequence::dense(ex.video, Modality::kVideo),
                                                FeatureSequence::dense(ex.text, Modality::kText));
  return encoder_.encode(v, q, ctx);
}

TrainingForward GroundingModel::training_loss(const Example& ex, const TrainingNoise& noise,
                                              const nn::Context& ctx) const {
  if (ex.spans.empty()) throw NoTargets("example '" + ex.record.qid + "' has no moments");
  const LossWeights& w = cfg_.loss;
  const double scale = cfg_.diffusion.scale;
  const int gt = static_cast<int>(ex.spans.size());
  const int N = gt + static_cast<int>(noise.padding.rows());
  if (noise.span_noise.rows() != N) throw ShapeError("span noise does not cover every proposal");

  const Memory memory = encode(ex, ctx);

  Eigen::MatrixXd x0(N, 2);
  x0.topRows(gt) = spans_to_working(ex.spans, scale);
  x0.bottomRows(N - gt) = noise.padding;
  const Eigen::MatrixXd x_t = q_sample({x0, scale}, noise.t, noise.span_noise, sched_).values;
  const std::vector<LayerOutput> layers = moment_.decode(x_t, noise.t, memory, ctx);

  TrainingForward out;
  out.n_proposals = N;
  const size_t first = cfg_.moment.aux_loss ? 0 : layers.size() - 1;
  for (size_t l = first; l < layers.size(); ++l) {
    const LayerOutput& layer = layers[l];
    // working range -> unit (center, width); matching sees the same values
    ag::Var unit = ag::scale(ag::add_scalar(ag::scale(layer.spans, 1.0 / scale), 1.0), 0.5);
    SpanSet pred(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) pred[static_cast<size_t>(i)] = {unit.value()(i, 0), unit.value()(i, 1)};
    MatchAssignment match = hungarian_match(pred, layer.logits.value(), ex.spans, w);
    ag::Var cls = class_loss(layer.logits, match);
    ag::Var span = span_loss(unit, ex.spans, match, w);
    out.parts.cls = out.parts.cls.defined() ? ag::add(out.parts.cls, cls) : cls;
    out.parts.span = out.parts.span.defined() ? ag::add(out.parts.span, span) : span;
    if (l + 1 == layers.size()) out.match = std::move(match);
  }

  if (ex.saliency.size() > 0) {
    if (ex.saliency.size() != ex.video.rows()) {
      throw SaliencyLengthMismatch("saliency labels do not cover every clip");
    }
    const SaliencyRange range = saliency_range();
    const Eigen::VectorXd x0_sal = range.to_working(ex.saliency);
    const double ab = sched_.alpha_bar(noise.t);
    const Eigen::VectorXd xt_sal =
        std::sqrt(ab) * x0_sal + std::sqrt(1.0 - ab) * noise.saliency_noise;
    const auto [video, text] = memory_sequences(memory);
    ag::Var x0_hat = saliency_.decode(xt_sal, noise.t, video, text, ctx);
    ag::Var s_dis = discriminative_(memory);
    SaliencyLossTerms terms =
        saliency_loss(s_dis, x0_hat, x0_sal, noise.hinge_pairs, memory.video_mask, w);
    out.parts.hinge = terms.hinge;
    out.parts.kl = terms.kl;
  }
  out.total = total_loss(out.parts, w);
  return out;
}

InferenceResult GroundingModel::infer(const Example& ex, const InferenceOptions& opts,
                                      std::mt19937_64& rng, bool keep_trace) const {
  ag::NoGradGuard no_grad;
  const nn::Context ctx{};
  const Memory memory = encode(ex, ctx);
  InferenceResult out;

  const int n_layers = cfg_.moment.decoder_layers;
  if (opts.exit_layer < 0 || opts.exit_layer > n_layers) {
    throw ConfigError("exit_layer must be in [0, " + std::to_string(n_layers) + "]");
  }
  const size_t exit = static_cast<size_t>(opts.exit_layer == 0 ? n_layers : opts.exit_layer) - 1;
  const MomentDenoiser moment_denoiser = [&](const ProposalSet& x) {
    const std::vector<LayerOutput> layers = moment_.decode(x.spans, x.step, memory, ctx);
    ProposalSet x0;
    x0.spans = layers[exit].spans.value();
    x0.confidences = layers[exit].logits.value();
    x0.step = x.step;
    return x0;
  };
  out.moments = sample_moments(moment_denoiser, opts.n_proposals, opts.moment_steps, sched_,
                               opts.sampler, rng, keep_trace ? &out.moment_trace : nullptr);

  const auto [video, text] = memory_sequences(memory);
  const SaliencyDenoiser saliency_denoiser = [&](const Eigen::VectorXd& x_t, int t) {
    return Eigen::VectorXd(saliency_.decode(x_t, t, video, text, ctx).value().col(0));
  };
  const SaliencyVector s_gen =
      sample_saliency(saliency_denoiser, static_cast<int>(memory.video.rows()), opts.saliency_steps, sched_,
                      saliency_range(), opts.sampler.eta, rng,
                      keep_trace ? &out.saliency_trace : nullptr);
  const SaliencyVector s_dis{discriminative_(memory).value().col(0), SaliencySpace::kLabel};
  out.s_gen = s_gen.scores;
  out.s_dis = s_dis.scores;
  out.saliency = fuse_saliency(s_gen, s_dis).scores;
  return out;
}

}  // namespace spandiff
