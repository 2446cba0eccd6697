#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace spandiff {

enum class ScheduleKind { kCosine, kLinear };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

/// Cumulative noise table. alpha_bar has T+1 entries with alpha_bar[0] == 1
/// and is strictly decreasing; beta has T entries (beta[t-1] is the variance
/// added going from step t-1 to t).
class NoiseSchedule {
 public:
  static NoiseSchedule build(int T, ScheduleKind kind);

  int max_step() const { return static_cast<int>(beta_.size()); }
  double alpha_bar(int t) const;
  double beta(int t) const;  // 1-based, t in [1, T]
  const std::vector<double>& alpha_bar_table() const { return alpha_bar_; }
  ScheduleKind kind() const { return kind_; }

 private:
  NoiseSchedule(ScheduleKind kind, std::vector<double> beta);

  ScheduleKind kind_;
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

/// A signal mapped from [0, 1] into the diffusion working range
/// [-scale, +scale]. Spans are flattened as an N x 2 matrix, saliency vectors
/// as N_v x 1.
struct ScaledSignal {
  Eigen::MatrixXd values;
  double scale = 2.0;
};

ScaledSignal scale_signal(const Eigen::MatrixXd& x, double scale);
Eigen::MatrixXd unscale_signal(const ScaledSignal& s);

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) noise
ScaledSignal q_sample(const ScaledSignal& x0, int t, const Eigen::MatrixXd& noise,
                      const NoiseSchedule& sched);

/// Reverse update toward a predicted x_0 between two explicit noise levels.
/// `noise` is only read when eta > 0 and must then match x_t's shape.
Eigen::MatrixXd ddim_update(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& x0_hat,
                            double alpha_bar_t, double alpha_bar_prev, double eta,
                            const Eigen::MatrixXd* noise = nullptr);

/// Skip-capable DDIM step from t to t_prev (t_prev < t). x0_hat is clamped to
/// the working range before the update.
ScaledSignal ddim_step(const ScaledSignal& x_t, const ScaledSignal& x0_hat, int t,
                       int t_prev, double eta, const NoiseSchedule& sched,
                       const Eigen::MatrixXd* noise = nullptr);

/// Uniformly spaced sampling times from T down to 0 for `steps` decoder calls,
/// e.g. steps=5, T=1000 -> {1000, 800, 600, 400, 200, 0}.
std::vector<int> sampling_times(int T, int steps);

/// Sinusoidal step features: first D/2 entries sin(t w_k), last D/2 cos(t w_k),
/// w_k = 10000^(-k / (D/2)).
Eigen::RowVectorXd timestep_embedding(int t, int dim);

}  // namespace spandiff
