#include "spandiff/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "spandiff/errors.hpp"

namespace spandiff {

namespace {

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer so neighbouring indices get unrelated streams
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double value_or_zero(const ag::Var& v) { return v.defined() ? v.item() : 0.0; }

}  // namespace

AdamW::AdamW(double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
}

void AdamW::step(nn::ParamSet& params) {
  auto& list = params.params();
  if (m_.empty()) {
    for (const auto& p : list) {
      m_.push_back(ag::Matrix::Zero(p.var.rows(), p.var.cols()));
      v_.push_back(ag::Matrix::Zero(p.var.rows(), p.var.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, t_);
  const double c2 = 1.0 - std::pow(b2_, t_);
  for (size_t i = 0; i < list.size(); ++i) {
    ag::Matrix& w = list[i].var.mutable_value();
    w *= 1.0 - lr_ * wd_;
    const ag::Matrix& g = list[i].var.grad();
    if (g.size() == 0) {
      m_[i] *= b1_;
      v_[i] *= b2_;
    } else {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * g.cwiseAbs2();
    }
    w.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

int scheduled_proposals(int start, int max, double ramp_fraction, double progress) {
  if (start > max) throw ConfigError("proposal schedule must be non-decreasing");
  if (ramp_fraction <= 0.0) return max;
  const double f = std::clamp(progress / ramp_fraction, 0.0, 1.0);
  return start + static_cast<int>(std::floor(f * (max - start) + 1e-9));
}

double clip_gradients(nn::ParamSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params.params()) {
    if (p.var.grad().size() > 0) sq += p.var.grad().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& p : params.params()) {
      if (p.var.grad().size() > 0) p.var.node()->grad *= f;
    }
  }
  return norm;
}

TrainResult train(GroundingModel& model, const Dataset& train_set, const Dataset* validation,
                  const std::string& checkpoint_path, const TrainHooks& hooks) {
  if (train_set.empty()) throw EmptyInput("training set is empty");
  const Config& cfg = model.config();
  const TrainConfig& tc = cfg.train;
  if (tc.optimizer != "adamw") throw ConfigError("unsupported optimizer '" + tc.optimizer + "'");
  const auto start = std::chrono::steady_clock::now();

  const int n = static_cast<int>(train_set.size());
  const int batch = std::max(1, std::min(tc.batch_size, n));
  const int per_epoch = (n + batch - 1) / batch;
  const int total = tc.max_iterations > 0 ? tc.max_iterations : tc.epochs * per_epoch;
  const int eval_interval = tc.eval_every > 0 ? tc.eval_every * per_epoch : total;

  std::mt19937_64 rng(tc.seed);
  AdamW opt(tc.lr, tc.weight_decay);
  TrainResult result;
  std::vector<ag::Matrix> best;
  const InferenceOptions eval_opts = InferenceOptions::from_config(cfg);

  auto snapshot = [&] {
    best.clear();
    for (const auto& p : model.params().params()) best.push_back(p.var.value());
  };

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();
  int epoch = -1;
  for (int it = 0; it < total; ++it) {
    const double progress = static_cast<double>(it) / static_cast<double>(total);
    const int N = scheduled_proposals(tc.N_start, cfg.moment.N_train_max, tc.ramp_fraction,
                                      progress);
    model.params().zero_grad();
    TrainLogEntry entry;
    entry.iteration = it;
    entry.n_proposals = N;
    for (int b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
        ++epoch;
      }
      const Example& ex = train_set.examples[static_cast<size_t>(order[cursor++])];
      const TrainingNoise noise =
          TrainingNoise::sample(ex, N, cfg.diffusion.T, cfg.loss.hinge_pairs, rng);
      const nn::Context ctx{true, cfg.encoder.dropout, &rng};
      TrainingForward fwd;
      try {
        fwd = model.training_loss(ex, noise, ctx);
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at iteration " + std::to_string(it) +
                             " on example '" + ex.record.qid + "': " + e.detail());
      }
      ag::scale(fwd.total, 1.0 / batch).backward();
      entry.loss += fwd.total.item() / batch;
      entry.cls += value_or_zero(fwd.parts.cls) / batch;
      entry.span += value_or_zero(fwd.parts.span) / batch;
      entry.hinge += value_or_zero(fwd.parts.hinge) / batch;
      entry.kl += value_or_zero(fwd.parts.kl) / batch;
    }
    const double norm = clip_gradients(model.params(), tc.grad_clip);
    if (!std::isfinite(norm)) {
      throw NumericalError("non-finite gradient norm at iteration " + std::to_string(it));
    }
    opt.step(model.params());
    entry.epoch = epoch;
    entry.seconds = elapsed_since(start);
    result.log.push_back(entry);
    if (hooks.on_log && (tc.log_every > 0 && (it % tc.log_every == 0 || it + 1 == total))) {
      hooks.on_log(entry);
    }
    result.state.iteration = it + 1;
    result.state.epoch = epoch;
    result.state.n_proposals = N;

    const bool last = it + 1 == total;
    if (validation != nullptr && !validation->empty() && ((it + 1) % eval_interval == 0 || last)) {
      const EvaluationResult ev = evaluate(model, *validation, eval_opts, cfg.eval.seed);
      const ValidationPoint point{it + 1, ev.moments.map_avg};
      result.validation.push_back(point);
      if (hooks.on_validation) hooks.on_validation(point);
      if (point.map_avg > result.state.best_validation) {
        result.state.best_validation = point.map_avg;
        result.state.best_iteration = it + 1;
        snapshot();
      }
    }
  }
  if (!best.empty()) {
    auto& params = model.params().params();
    for (size_t i = 0; i < params.size(); ++i) params[i].var.mutable_value() = best[i];
  }
  if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, model, result.state);
  result.seconds = elapsed_since(start);
  return result;
}

EvaluationResult evaluate(const GroundingModel& model, const Dataset& data,
                          const InferenceOptions& opts, std::uint64_t seed, bool keep_outputs) {
  if (data.empty()) throw EmptyInput("evaluation set is empty");
  const auto start = std::chrono::steady_clock::now();
  const Config& cfg = model.config();
  EvaluationResult out;
  std::vector<std::vector<MomentPrediction>> predictions;
  std::vector<SpanSet> truths;
  std::vector<Eigen::VectorXd> scores, labels;
  std::vector<std::string> domains;
  bool any_domain = false;
  double rho = 0.0;
  int rho_count = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    const Example& ex = data.examples[i];
    std::mt19937_64 rng(stream_seed(seed, i));
    InferenceResult r = model.infer(ex, opts, rng, keep_outputs);
    predictions.push_back(r.moments);
    truths.push_back(ex.spans);
    if (ex.saliency.size() > 0) {
      scores.push_back(r.saliency);
      labels.push_back(ex.saliency);
      domains.push_back(ex.record.domain);
      any_domain = any_domain || !ex.record.domain.empty();
      rho += spearman_correlation(r.saliency, ex.saliency);
      ++rho_count;
    }
    if (keep_outputs) out.outputs.push_back(std::move(r));
  }
  out.moments = evaluate_moments(predictions, truths, cfg.eval);
  if (!scores.empty()) {
    out.highlights = evaluate_highlights(scores, labels, cfg.saliency.positive_threshold,
                                         any_domain ? domains : std::vector<std::string>{});
    out.saliency_spearman = rho / rho_count;
  }
  out.seconds = elapsed_since(start);
  return out;
}

}  // namespace spandiff
