#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spandiff/config.hpp"
#include "spandiff/moment_branch.hpp"
#include "spandiff/span_geometry.hpp"

namespace spandiff {

struct ThresholdValue {
  double threshold = 0.0;
  double value = 0.0;
};

/// All values are fractions in [0, 1].
struct MomentMetrics {
  std::vector<ThresholdValue> r1;
  std::vector<ThresholdValue> map;
  std::vector<ThresholdValue> map_grid;  // every threshold averaged into map_avg
  double map_avg = 0.0;
  int queries = 0;
};

struct HighlightMetrics {
  double map = 0.0;       // mean AP over videos with at least one positive
  double hit1 = 0.0;
  double top5_map = 0.0;
  std::map<std::string, double> domain_top5_map;
  int videos = 0;
  int videos_with_positive = 0;
};

/// IoU thresholds 0.5, 0.55, ..., 0.95.
std::vector<double> map_threshold_grid();

/// Interpolated AP of one query's ranked predictions (first `max_predictions`
/// kept). A prediction is a true positive when its best still-unmatched
/// ground truth reaches `threshold`.
double moment_average_precision(const std::vector<MomentPrediction>& ranked, const SpanSet& gt,
                                double threshold, int max_predictions);

/// `predictions[q]` is sorted by score, descending. Queries without
/// predictions count as misses.
MomentMetrics evaluate_moments(const std::vector<std::vector<MomentPrediction>>& predictions,
                               const std::vector<SpanSet>& ground_truths, const EvalConfig& cfg);

/// Expected AP of a score ranking over binary relevance when tied scores are
/// ordered uniformly at random. Returns 0 when there are no positives.
double expected_average_precision(const Eigen::VectorXd& scores, const std::vector<bool>& positive);

/// Expected relevance of the top-ranked clip under random tie-breaking.
double expected_hit_at_1(const Eigen::VectorXd& scores, const std::vector<bool>& positive);

/// AP restricted to the five best-scored clips, normalized by
/// min(5, #positives). Ties keep clip order.
double top5_average_precision(const Eigen::VectorXd& scores, const std::vector<bool>& positive);

/// Clips whose label reaches `positive_threshold` are positives. Videos
/// without positives are excluded from every average.
HighlightMetrics evaluate_highlights(const std::vector<Eigen::VectorXd>& scores,
                                     const std::vector<Eigen::VectorXd>& labels,
                                     double positive_threshold,
                                     const std::vector<std::string>& domains = {});

/// Spearman rank correlation with average ranks for ties; 0 when either side
/// is constant.
double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace spandiff
