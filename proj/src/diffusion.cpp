#include "spandiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spandiff/errors.hpp"

namespace spandiff {

namespace {

constexpr double kMaxBeta = 0.999;

std::vector<double> cosine_betas(int T) {
  // squared-cosine cumulative profile with a small offset so beta_1 is not 0
  constexpr double s = 0.008;
  auto f = [&](double t) {
    const double x = (t / T + s) / (1.0 + s) * std::numbers::pi / 2.0;
    return std::cos(x) * std::cos(x);
  };
  std::vector<double> betas(T);
  for (int t = 1; t <= T; ++t) {
    betas[t - 1] = std::min(1.0 - f(t) / f(t - 1), kMaxBeta);
  }
  return betas;
}

std::vector<double> linear_betas(int T) {
  // the standard 1e-4..2e-2 ramp, rescaled so short chains still end near noise
  const double ratio = 1000.0 / T;
  const double lo = std::min(1e-4 * ratio, kMaxBeta);
  const double hi = std::min(2e-2 * ratio, kMaxBeta);
  std::vector<double> betas(T);
  for (int t = 1; t <= T; ++t) {
    betas[t - 1] = T == 1 ? hi : lo + (hi - lo) * (t - 1) / (T - 1);
  }
  return betas;
}

void check_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "cosine") return ScheduleKind::kCosine;
  if (name == "linear") return ScheduleKind::kLinear;
  throw InvalidSchedule("unknown schedule '" + name + "'");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kCosine ? "cosine" : "linear";
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, std::vector<double> beta)
    : kind_(kind), beta_(std::move(beta)) {
  alpha_bar_.resize(beta_.size() + 1);
  alpha_bar_[0] = 1.0;
  for (size_t t = 1; t < alpha_bar_.size(); ++t) {
    alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t - 1]);
  }
}

NoiseSchedule NoiseSchedule::build(int T, ScheduleKind kind) {
  if (T < 1) throw InvalidSchedule("T must be >= 1, got " + std::to_string(T));
  return NoiseSchedule(kind, kind == ScheduleKind::kCosine ? cosine_betas(T) : linear_betas(T));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > max_step()) {
    throw InvalidSchedule("step " + std::to_string(t) + " outside [0, " +
                          std::to_string(max_step()) + "]");
  }
  return alpha_bar_[t];
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > max_step()) {
    throw InvalidSchedule("beta index " + std::to_string(t) + " outside [1, T]");
  }
  return beta_[t - 1];
}

ScaledSignal scale_signal(const Eigen::MatrixXd& x, double scale) {
  return {((x.array() * 2.0 - 1.0) * scale).matrix(), scale};
}

Eigen::MatrixXd unscale_signal(const ScaledSignal& s) {
  return ((s.values.array() / s.scale + 1.0) * 0.5).matrix();
}

ScaledSignal q_sample(const ScaledSignal& x0, int t, const Eigen::MatrixXd& noise,
                      const NoiseSchedule& sched) {
  check_shape(x0.values, noise, "q_sample noise");
  const double ab = sched.alpha_bar(t);
  return {std::sqrt(ab) * x0.values + std::sqrt(1.0 - ab) * noise, x0.scale};
}

Eigen::MatrixXd ddim_update(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& x0_hat,
                            double alpha_bar_t, double alpha_bar_prev, double eta,
                            const Eigen::MatrixXd* noise) {
  check_shape(x_t, x0_hat, "ddim x0_hat");
  // noise implied by the current sample and the prediction
  const Eigen::MatrixXd eps =
      (x_t - std::sqrt(alpha_bar_t) * x0_hat) / std::sqrt(1.0 - alpha_bar_t);
  double sigma = 0.0;
  if (eta > 0.0) {
    sigma = eta * std::sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar_t)) *
            std::sqrt(std::max(0.0, 1.0 - alpha_bar_t / alpha_bar_prev));
  }
  const double c = std::sqrt(std::max(0.0, 1.0 - alpha_bar_prev - sigma * sigma));
  Eigen::MatrixXd out = std::sqrt(alpha_bar_prev) * x0_hat + c * eps;
  if (sigma > 0.0) {
    if (noise == nullptr) throw ShapeError("ddim with eta > 0 needs a noise array");
    check_shape(x_t, *noise, "ddim noise");
    out += sigma * *noise;
  }
  return out;
}

ScaledSignal ddim_step(const ScaledSignal& x_t, const ScaledSignal& x0_hat, int t,
                       int t_prev, double eta, const NoiseSchedule& sched,
                       const Eigen::MatrixXd* noise) {
  if (t_prev >= t || t_prev < 0) {
    throw InvalidStepOrder("need 0 <= t_prev < t, got t=" + std::to_string(t) +
                           " t_prev=" + std::to_string(t_prev));
  }
  const double s = x_t.scale;
  const Eigen::MatrixXd x0c = x0_hat.values.cwiseMax(-s).cwiseMin(s);
  return {ddim_update(x_t.values, x0c, sched.alpha_bar(t), sched.alpha_bar(t_prev), eta, noise),
          s};
}

std::vector<int> sampling_times(int T, int steps) {
  if (steps < 1) throw InvalidStepOrder("need at least one sampling step");
  std::vector<int> times;
  times.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    times.push_back(static_cast<int>(std::llround(
        static_cast<double>(T) * (steps - i) / static_cast<double>(steps))));
  }
  // collapse duplicates when steps > T
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

Eigen::RowVectorXd timestep_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw InvalidDimension("embedding dim must be positive and even, got " +
                           std::to_string(dim));
  }
  if (t < 0) throw InvalidDimension("negative diffusion step");
  const int half = dim / 2;
  Eigen::RowVectorXd out(dim);
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    out(k) = std::sin(t * freq);
    out(k + half) = std::cos(t * freq);
  }
  return out;
}

}  // namespace spandiff
