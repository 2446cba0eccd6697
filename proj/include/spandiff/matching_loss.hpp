#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spandiff/autograd.hpp"
#include "spandiff/config.hpp"
#include "spandiff/span_geometry.hpp"

namespace spandiff {

using LossWeights = LossConfig;

/// Optimal one-to-one assignment of ground truths to predictions.
struct MatchAssignment {
  std::vector<std::pair<int, int>> pairs;  // (prediction, ground truth), sorted by gt
  std::vector<int> unmatched;              // background predictions, ascending
  double total_cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column of a
/// rows <= cols cost matrix (shortest augmenting paths with potentials).
/// Returns the column chosen for each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Matching cost, rows = ground truth, cols = predictions:
/// -p_fg + lambda_l1 * L1 + lambda_iou * (1 - gIoU).
Eigen::MatrixXd matching_cost(const SpanSet& pred_spans, const Eigen::VectorXd& fg_prob,
                              const SpanSet& gt, const LossWeights& w);

/// `pred_conf` holds (foreground, background) logits per prediction.
MatchAssignment hungarian_match(const SpanSet& pred_spans, const Eigen::MatrixXd& pred_conf,
                                const SpanSet& gt, const LossWeights& w);

/// lambda_l1 * |pred - gt|_1 + lambda_iou * (1 - gIoU) on normalized (c, w).
double span_loss(const TemporalSpan& pred, const TemporalSpan& gt, const LossWeights& w);

/// Differentiable span loss averaged over matched pairs. `pred_unit` is N x 2
/// (center, width) in [0, 1].
ag::Var span_loss(const ag::Var& pred_unit, const SpanSet& gt, const MatchAssignment& match,
                  const LossWeights& w);

/// Mean cross-entropy over all predictions; matched ones are foreground
/// (column 0), the rest background (column 1).
ag::Var class_loss(const ag::Var& logits, const MatchAssignment& match);

/// max(0, margin + s[low] - s[high]) averaged over pairs. Returns an undefined
/// Var when there are no pairs.
ag::Var hinge_loss(const ag::Var& s_dis, const std::vector<std::pair<int, int>>& high_low,
                   double margin);

/// KL(softmax(x0) || softmax(x0_hat)) over the valid clips.
ag::Var saliency_kl(const ag::Var& x0_hat, const Eigen::VectorXd& x0,
                    const std::vector<bool>& valid);

/// Hinge pairs (high, low): `pairs` random draws (0 means every pair) of a
/// clip inside a ground-truth window and one outside it, keeping only pairs
/// whose labels are strictly ordered.
std::vector<std::pair<int, int>> sample_hinge_pairs(const Eigen::VectorXd& labels,
                                                    const std::vector<bool>& inside,
                                                    const std::vector<bool>& valid, int pairs,
                                                    std::mt19937_64& rng);

struct SaliencyLossTerms {
  ag::Var hinge;  // may be undefined (no valid pair)
  ag::Var kl;
};

SaliencyLossTerms saliency_loss(const ag::Var& s_dis, const ag::Var& x0_hat,
                                const Eigen::VectorXd& x0,
                                const std::vector<std::pair<int, int>>& high_low,
                                const std::vector<bool>& valid, const LossWeights& w);

struct LossComponents {
  ag::Var cls;
  ag::Var span;
  ag::Var hinge;  // undefined terms are skipped
  ag::Var kl;
};

/// lambda_class * cls + span + lambda_saliency * (hinge + kl). Throws
/// NumericalError naming the first non-finite component.
ag::Var total_loss(const LossComponents& parts, const LossWeights& w);

}  // namespace spandiff
