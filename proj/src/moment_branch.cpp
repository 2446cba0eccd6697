#include "spandiff/moment_branch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spandiff/errors.hpp"

namespace spandiff {

Eigen::VectorXd ProposalSet::foreground_prob() const {
  Eigen::VectorXd p(confidences.rows());
  for (Eigen::Index i = 0; i < confidences.rows(); ++i) {
    const double a = confidences(i, 0);
    const double b = confidences(i, 1);
    p(i) = 1.0 / (1.0 + std::exp(b - a));
  }
  return p;
}

Eigen::MatrixXd spans_to_working(const SpanSet& spans, double scale) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(spans.size()), 2);
  for (size_t i = 0; i < spans.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = spans[i].center;
    m(static_cast<Eigen::Index>(i), 1) = spans[i].width;
  }
  return scale_signal(m, scale).values;
}

SpanSet working_to_spans(const Eigen::MatrixXd& working, double scale) {
  const Eigen::MatrixXd unit = unscale_signal({working, scale});
  SpanSet out;
  out.reserve(static_cast<size_t>(unit.rows()));
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    out.push_back(clamp_span({unit(i, 0), std::max(0.0, unit(i, 1))}));
  }
  return out;
}

ProposalSet make_noisy_spans(const SpanSet& gt, int N, int t, const NoiseSchedule& sched,
                             double scale, std::mt19937_64& rng) {
  if (gt.empty()) throw NoTargets("no ground-truth spans to corrupt");
  if (static_cast<int>(gt.size()) > N) {
    throw TooManyTargets(std::to_string(gt.size()) + " targets exceed " + std::to_string(N) +
                         " proposals");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x0(N, 2);
  x0.topRows(static_cast<Eigen::Index>(gt.size())) = spans_to_working(gt, scale);
  for (Eigen::Index i = static_cast<Eigen::Index>(gt.size()); i < N; ++i) {
    x0(i, 0) = normal(rng);
    x0(i, 1) = normal(rng);
  }
  Eigen::MatrixXd noise(N, 2);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
  ProposalSet out;
  out.spans = q_sample({x0, scale}, t, noise, sched).values;
  out.confidences = Eigen::MatrixXd::Zero(N, 2);
  out.step = t;
  return out;
}

std::pair<int, int> span_clip_range(const TemporalSpan& span, int n_clips) {
  constexpr double kEps = 1e-9;
  const auto [s, e] = cw_to_se(clamp_span(span));
  int first = static_cast<int>(std::floor(s * n_clips + kEps));
  int last = static_cast<int>(std::ceil(e * n_clips - kEps)) - 1;
  first = std::clamp(first, 0, n_clips - 1);
  last = std::clamp(last, 0, n_clips - 1);
  if (last < first || e - s <= 0.0) {
    const int nearest = std::clamp(static_cast<int>(std::floor(span.center * n_clips)), 0,
                                   n_clips - 1);
    return {nearest, nearest};
  }
  return {first, last};
}

Eigen::MatrixXd roi_pooling_matrix(const SpanSet& spans, int n_clips, int rows) {
  if (n_clips < 1 || n_clips > rows) {
    throw ShapeError("roi pooling over " + std::to_string(n_clips) + " clips of " +
                     std::to_string(rows) + " memory rows");
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spans.size()), rows);
  for (size_t i = 0; i < spans.size(); ++i) {
    const auto [first, last] = span_clip_range(spans[i], n_clips);
    const double w = 1.0 / (last - first + 1);
    for (int c = first; c <= last; ++c) P(static_cast<Eigen::Index>(i), c) = w;
  }
  return P;
}

ag::Var roi_extract(const ag::Var& memory_video, const SpanSet& spans, int n_clips) {
  return ag::matmul(
      ag::Var(roi_pooling_matrix(spans, n_clips, static_cast<int>(memory_video.rows()))),
      memory_video);
}

MomentDecoder::MomentDecoder(nn::Initializer& init, const Config& cfg)
    : dim_(cfg.model.dim),
      dyn_dim_(cfg.dynamic_dim()),
      scale_(cfg.diffusion.scale),
      dropout_(cfg.encoder.dropout),
      time_mlp_(init, "moment.time_mlp", {cfg.model.dim, cfg.model.dim, cfg.model.dim}) {
  const int D = dim_;
  for (int l = 0; l < cfg.moment.decoder_layers; ++l) {
    const std::string p = "moment.layers." + std::to_string(l);
    Layer layer{nn::Linear(init, p + ".span_embed", 2, D),
                nn::MultiHeadAttention(init, p + ".self_attn", D, cfg.moment.heads),
                nn::LayerNorm(init, p + ".norm1", D),
                nn::Linear(init, p + ".dyn_params", D, 2 * D * dyn_dim_),
                nn::LayerNorm(init, p + ".dyn_norm1", dyn_dim_),
                nn::LayerNorm(init, p + ".dyn_norm2", D),
                nn::Linear(init, p + ".dyn_out", D, D),
                nn::LayerNorm(init, p + ".norm2", D),
                nn::Linear(init, p + ".ff1", D, cfg.moment.ffn_dim),
                nn::Linear(init, p + ".ff2", cfg.moment.ffn_dim, D),
                nn::LayerNorm(init, p + ".norm3", D),
                nn::Linear(init, p + ".time_scale_shift", D, 2 * D),
                nn::Linear(init, p + ".cls_head", D, 2),
                nn::Mlp(init, p + ".reg_head", {D, D, D, 2})};
    // residual refinement starts at the identity
    layer.reg_head.layers.back().zero();
    layer.time_scale_shift.zero();
    layers_.push_back(std::move(layer));
  }
}

ag::Var MomentDecoder::time_features(int t) const {
  return time_mlp_(ag::Var(ag::Matrix(timestep_embedding(t, dim_))));
}

LayerOutput MomentDecoder::denoise_layer(int index, const ag::Var& features, const ag::Var& spans,
                                         const ag::Var& time_features, const Memory& memory,
                                         const nn::Context& ctx) const {
  const Layer& L = layers_.at(static_cast<size_t>(index));
  const int D = dim_;
  ag::Var S = ag::clamp(spans, -scale_, scale_);
  const SpanSet unit = working_to_spans(S.value(), scale_);
  ag::Var roi = roi_extract(memory.video, unit, memory.valid_clips());
  if (!roi.value().allFinite()) throw NumericalError("non-finite RoI features");

  ag::Var F = features.defined() ? features : roi;
  if (F.rows() != S.rows()) throw ShapeError("features and spans disagree on proposal count");
  if (!F.value().allFinite()) throw NumericalError("non-finite proposal features");
  F = ag::add(F, L.span_embed(S));

  // proposals exchange information
  F = L.norm1(ag::add(F, ctx.maybe_dropout(L.self_attn(F, F, nullptr, ctx))));

  // dynamic interaction: each proposal generates two kernels for its RoI feature
  ag::Var params = L.dyn_params(F);
  ag::Var k1 = ag::slice_cols(params, 0, D * dyn_dim_);
  ag::Var k2 = ag::slice_cols(params, D * dyn_dim_, dyn_dim_ * D);
  ag::Var h = ag::relu(L.dyn_norm1(ag::rowwise_vecmat(roi, k1, dyn_dim_)));
  h = ag::relu(L.dyn_norm2(ag::rowwise_vecmat(h, k2, D)));
  F = L.norm2(ag::add(F, ctx.maybe_dropout(L.dyn_out(h))));

  F = L.norm3(ag::add(F, ctx.maybe_dropout(L.ff2(ag::relu(L.ff1(F))))));

  ag::Var ss = L.time_scale_shift(ag::silu(time_features));
  ag::Var s = ag::add_scalar(ag::slice_cols(ss, 0, D), 1.0);
  ag::Var b = ag::slice_cols(ss, D, D);
  F = ag::add_row(ag::mul_row(F, s), b);

  LayerOutput out;
  out.logits = L.cls_head(F);
  out.spans = ag::clamp(ag::add(S, L.reg_head(F)), -scale_, scale_);
  out.features = F;
  return out;
}

std::vector<LayerOutput> MomentDecoder::decode(const Eigen::MatrixXd& x_t, int t,
                                               const Memory& memory,
                                               const nn::Context& ctx) const {
  if (x_t.cols() != 2 || x_t.rows() < 1) throw ShapeError("x_t must be N x 2 with N >= 1");
  ag::Var time = time_features(t);
  ag::Var spans(x_t);
  ag::Var features;
  std::vector<LayerOutput> outs;
  outs.reserve(layers_.size());
  for (int l = 0; l < layers(); ++l) {
    LayerOutput o = denoise_layer(l, features, spans, time, memory, ctx);
    features = o.features;
    spans = o.spans;
    outs.push_back(std::move(o));
  }
  return outs;
}

void MomentDecoder::zero_regression_heads() {
  for (auto& l : layers_) l.reg_head.layers.back().zero();
}

void MomentDecoder::zero_attention() {
  for (auto& l : layers_) {
    l.self_attn.q.zero();
    l.self_attn.k.zero();
  }
}

std::vector<MomentPrediction> temporal_nms(const std::vector<MomentPrediction>& sorted,
                                           double iou_threshold) {
  std::vector<MomentPrediction> kept;
  for (const auto& p : sorted) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (iou_1d(p.span, k.span) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(p);
  }
  return kept;
}

std::vector<MomentPrediction> to_predictions(const ProposalSet& x0, const SamplerOptions& opts) {
  const SpanSet spans = working_to_spans(x0.spans, opts.scale);
  const Eigen::VectorXd prob = x0.foreground_prob();
  std::vector<MomentPrediction> preds(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    preds[i] = {spans[i], prob(static_cast<Eigen::Index>(i))};
  }
  std::stable_sort(preds.begin(), preds.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  if (opts.nms) preds = temporal_nms(preds, opts.nms_iou);
  return preds;
}

std::vector<MomentPrediction> sample_moments(const MomentDenoiser& denoise, int n_proposals,
                                             int steps, const NoiseSchedule& sched,
                                             const SamplerOptions& opts, std::mt19937_64& rng,
                                             MomentTrace* trace) {
  if (n_proposals < 1) throw ShapeError("need at least one proposal");
  const std::vector<int> times = sampling_times(sched.max_step(), steps);
  std::normal_distribution<double> normal(0.0, 1.0);

  ProposalSet x;
  x.spans.resize(n_proposals, 2);
  for (Eigen::Index i = 0; i < x.spans.size(); ++i) x.spans(i) = normal(rng);
  x.confidences = Eigen::MatrixXd::Zero(n_proposals, 2);

  ProposalSet x0;
  for (size_t k = 0; k + 1 < times.size(); ++k) {
    const int t = times[k];
    const int t_prev = times[k + 1];
    x.step = t;
    x0 = denoise(x);
    if (x0.spans.rows() != n_proposals || x0.confidences.rows() != n_proposals) {
      throw ShapeError("denoiser changed the proposal count");
    }
    if (!x0.spans.allFinite() || !x0.confidences.allFinite()) {
      throw NumericalError("denoiser produced non-finite proposals at step " + std::to_string(t));
    }
    if (trace != nullptr) {
      trace->inputs.push_back(x);
      trace->predictions.push_back(x0);
    }
    if (t_prev == 0) break;

    Eigen::MatrixXd eta_noise;
    if (opts.eta > 0.0) {
      eta_noise.resize(n_proposals, 2);
      for (Eigen::Index i = 0; i < eta_noise.size(); ++i) eta_noise(i) = normal(rng);
    }
    x.spans = ddim_step({x.spans, opts.scale}, {x0.spans, opts.scale}, t, t_prev, opts.eta, sched,
                        opts.eta > 0.0 ? &eta_noise : nullptr)
                  .values;
    // renewal: low-confidence proposals restart from noise
    const Eigen::VectorXd prob = x0.foreground_prob();
    for (Eigen::Index i = 0; i < n_proposals; ++i) {
      if (prob(i) < opts.renewal_threshold) {
        x.spans(i, 0) = normal(rng);
        x.spans(i, 1) = normal(rng);
      }
    }
    x.confidences = x0.confidences;
  }
  return to_predictions(x0, opts);
}

}  // namespace spandiff
