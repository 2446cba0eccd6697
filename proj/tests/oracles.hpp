#pragma once

// Independent reference implementations used to check the library. They are
// deliberately naive (enumeration, direct formulas) and share no code with
// src/ beyond the public data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "spandiff/autograd.hpp"
#include "spandiff/moment_branch.hpp"
#include "spandiff/span_geometry.hpp"

namespace oracle {

inline double interval_iou(double s1, double e1, double s2, double e2) {
  const double inter = std::max(0.0, std::min(e1, e2) - std::max(s1, s2));
  const double uni = (e1 - s1) + (e2 - s2) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline double span_iou(const spandiff::TemporalSpan& a, const spandiff::TemporalSpan& b) {
  return interval_iou(a.center - a.width / 2, a.center + a.width / 2, b.center - b.width / 2,
                      b.center + b.width / 2);
}

/// Minimum over all injections rows -> columns by recursive enumeration.
inline double brute_force_assignment(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  std::vector<bool> used(static_cast<size_t>(cols), false);
  std::function<double(int)> rec = [&](int r) -> double {
    if (r == rows) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) {
      if (used[static_cast<size_t>(c)]) continue;
      used[static_cast<size_t>(c)] = true;
      best = std::min(best, cost(r, c) + rec(r + 1));
      used[static_cast<size_t>(c)] = false;
    }
    return best;
  };
  return rec(0);
}

/// R1@thr: share of queries whose first prediction overlaps any GT by >= thr.
inline double recall_at_1(const std::vector<std::vector<spandiff::MomentPrediction>>& preds,
                          const std::vector<spandiff::SpanSet>& gts, double thr) {
  int hits = 0;
  for (size_t q = 0; q < preds.size(); ++q) {
    if (preds[q].empty()) continue;
    bool hit = false;
    for (const auto& g : gts[q]) hit = hit || span_iou(preds[q][0].span, g) >= thr;
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

/// AP by the textbook definition: greedy matching in rank order (each
/// prediction takes the highest-IoU unmatched GT at or above thr), then the
/// area under the precision envelope p_interp(r) = max_{r' >= r} p(r'),
/// integrated as a step function over recall.
inline double average_precision(const std::vector<spandiff::MomentPrediction>& ranked,
                                const spandiff::SpanSet& gt, double thr, int max_preds) {
  if (gt.empty()) return 0.0;
  const size_t n = std::min(ranked.size(), static_cast<size_t>(max_preds));
  std::vector<bool> taken(gt.size(), false);
  std::vector<double> prec, rec;
  double tp = 0.0;
  for (size_t i = 0; i < n; ++i) {
    int best = -1;
    double best_iou = -1.0;
    for (size_t g = 0; g < gt.size(); ++g) {
      const double v = span_iou(ranked[i].span, gt[g]);
      if (!taken[g] && v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      taken[static_cast<size_t>(best)] = true;
      tp += 1.0;
    }
    prec.push_back(tp / static_cast<double>(i + 1));
    rec.push_back(tp / static_cast<double>(gt.size()));
  }
  double ap = 0.0;
  double prev_r = 0.0;
  for (size_t i = 0; i < rec.size(); ++i) {
    if (rec[i] <= prev_r) continue;
    double envelope = 0.0;
    for (size_t j = i; j < prec.size(); ++j) envelope = std::max(envelope, prec[j]);
    ap += (rec[i] - prev_r) * envelope;
    prev_r = rec[i];
  }
  return ap;
}

/// Mean AP over every distinct ordering of tied scores (exhaustive; keep the
/// clip count small).
inline double tie_averaged_ap(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const double total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0.0) return 0.0;
  double sum = 0.0;
  int count = 0;
  do {
    bool sorted = true;
    for (int i = 0; i + 1 < n && sorted; ++i) sorted = scores(perm[i]) >= scores(perm[i + 1]);
    if (!sorted) continue;
    double hits = 0.0, ap = 0.0;
    for (int i = 0; i < n; ++i) {
      if (positive[static_cast<size_t>(perm[i])]) {
        hits += 1.0;
        ap += hits / (i + 1);
      }
    }
    sum += ap / total_pos;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / count;
}

/// Share of positives among the clips tied for the top score.
inline double tie_averaged_hit1(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  const double top = scores.maxCoeff();
  double tied = 0.0, pos = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores(i) == top) {
      tied += 1.0;
      pos += positive[static_cast<size_t>(i)] ? 1.0 : 0.0;
    }
  }
  return pos / tied;
}

struct GradCheckStats {
  long checked = 0;
  long passed = 0;
  double worst = 0.0;
  double pass_rate() const { return checked > 0 ? static_cast<double>(passed) / checked : 0.0; }
};

/// Central differences against reverse mode on every entry of `params`.
/// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps entries
/// whose true gradient is ~0 from dividing rounding noise by ~0.
inline GradCheckStats grad_check(const std::function<spandiff::ag::Var()>& loss,
                                 std::vector<spandiff::ag::Var> params, double tol,
                                 double h = 1e-5, double floor = 1e-6) {
  for (auto& p : params) p.zero_grad();
  loss().backward();
  std::vector<Eigen::MatrixXd> analytic;
  for (auto& p : params) {
    analytic.push_back(p.grad().size() ? p.grad()
                                       : Eigen::MatrixXd::Zero(p.rows(), p.cols()).eval());
  }
  GradCheckStats stats;
  for (size_t k = 0; k < params.size(); ++k) {
    Eigen::MatrixXd& w = params[k].mutable_value();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w(i);
      w(i) = orig + h;
      const double up = loss().item();
      w(i) = orig - h;
      const double down = loss().item();
      w(i) = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k](i);
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++stats.checked;
      if (err <= tol) ++stats.passed;
      stats.worst = std::max(stats.worst, err);
    }
  }
  return stats;
}

}  // namespace oracle
