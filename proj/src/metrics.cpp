#include "spandiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spandiff/errors.hpp"

namespace spandiff {

std::vector<double> map_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(0.5 + 0.05 * i);
  return grid;
}

double moment_average_precision(const std::vector<MomentPrediction>& ranked, const SpanSet& gt,
                                double threshold, int max_predictions) {
  if (gt.empty()) return 0.0;
  const size_t n = std::min(ranked.size(), static_cast<size_t>(std::max(max_predictions, 0)));
  if (n == 0) return 0.0;
  std::vector<bool> used(gt.size(), false);
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, size_t>> ious;
    for (size_t g = 0; g < gt.size(); ++g) ious.emplace_back(iou_1d(ranked[i].span, gt[g]), g);
    std::stable_sort(ious.begin(), ious.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [iou, g] : ious) {
      if (iou < threshold) break;
      if (used[g]) continue;
      used[g] = true;
      ++tp;
      break;
    }
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt.size());
  }
  // all-point interpolation over the monotone precision envelope
  std::vector<double> mprec{0.0}, mrec{0.0};
  mprec.insert(mprec.end(), precision.begin(), precision.end());
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mprec.push_back(0.0);
  mrec.push_back(1.0);
  for (size_t i = mprec.size() - 1; i-- > 0;) mprec[i] = std::max(mprec[i], mprec[i + 1]);
  double ap = 0.0;
  for (size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mprec[i];
  }
  return ap;
}

MomentMetrics evaluate_moments(const std::vector<std::vector<MomentPrediction>>& predictions,
                               const std::vector<SpanSet>& ground_truths, const EvalConfig& cfg) {
  if (predictions.size() != ground_truths.size()) {
    throw ShapeError(std::to_string(predictions.size()) + " prediction lists for " +
                     std::to_string(ground_truths.size()) + " queries");
  }
  MomentMetrics m;
  m.queries = static_cast<int>(predictions.size());
  if (m.queries == 0) throw EmptyInput("no queries to evaluate");
  const double q = static_cast<double>(m.queries);

  std::vector<double> top_iou(predictions.size(), 0.0);
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].empty()) continue;
    for (const auto& g : ground_truths[i]) {
      top_iou[i] = std::max(top_iou[i], iou_1d(predictions[i].front().span, g));
    }
  }
  for (double thr : cfg.r1_thresholds) {
    double hits = 0.0;
    for (double v : top_iou) hits += v >= thr ? 1.0 : 0.0;
    m.r1.push_back({thr, hits / q});
  }
  auto mean_ap = [&](double thr) {
    double s = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
      s += moment_average_precision(predictions[i], ground_truths[i], thr, cfg.max_predictions);
    }
    return s / q;
  };
  for (double thr : cfg.map_thresholds) m.map.push_back({thr, mean_ap(thr)});
  double total = 0.0;
  for (double thr : map_threshold_grid()) {
    m.map_grid.push_back({thr, mean_ap(thr)});
    total += m.map_grid.back().value;
  }
  m.map_avg = total / static_cast<double>(m.map_grid.size());
  return m;
}

namespace {

void check_aligned(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  if (static_cast<size_t>(scores.size()) != positive.size()) {
    throw ShapeError("scores and labels disagree in length");
  }
}

/// Indices sorted by score descending, grouped into runs of equal score.
std::vector<std::vector<int>> tie_groups(const Eigen::VectorXd& scores) {
  std::vector<int> order(static_cast<size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  std::vector<std::vector<int>> groups;
  for (int idx : order) {
    if (groups.empty() || scores(groups.back().front()) != scores(idx)) groups.emplace_back();
    groups.back().push_back(idx);
  }
  return groups;
}

}  // namespace

double expected_average_precision(const Eigen::VectorXd& scores,
                                  const std::vector<bool>& positive) {
  check_aligned(scores, positive);
  const double total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0.0) return 0.0;
  double sum = 0.0;
  double seen_pos = 0.0;
  double seen = 0.0;
  for (const auto& group : tie_groups(scores)) {
    const double n = static_cast<double>(group.size());
    double r = 0.0;
    for (int idx : group) r += positive[static_cast<size_t>(idx)] ? 1.0 : 0.0;
    if (r > 0.0) {
      // expected precision at each slot of the group times P(slot is positive)
      for (int i = 1; i <= static_cast<int>(group.size()); ++i) {
        const double before = n > 1.0 ? (i - 1) * (r - 1.0) / (n - 1.0) : 0.0;
        sum += (r / n) * (seen_pos + 1.0 + before) / (seen + i);
      }
    }
    seen_pos += r;
    seen += n;
  }
  return sum / total_pos;
}

double expected_hit_at_1(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  check_aligned(scores, positive);
  if (scores.size() == 0) return 0.0;
  const auto groups = tie_groups(scores);
  double r = 0.0;
  for (int idx : groups.front()) r += positive[static_cast<size_t>(idx)] ? 1.0 : 0.0;
  return r / static_cast<double>(groups.front().size());
}

double top5_average_precision(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  check_aligned(scores, positive);
  const int total_pos = static_cast<int>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0) return 0.0;
  std::vector<int> order(static_cast<size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  double sum = 0.0;
  int hits = 0;
  for (size_t k = 0; k < order.size() && k < 5; ++k) {
    if (positive[static_cast<size_t>(order[k])]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(std::min(5, total_pos));
}

HighlightMetrics evaluate_highlights(const std::vector<Eigen::VectorXd>& scores,
                                     const std::vector<Eigen::VectorXd>& labels,
                                     double positive_threshold,
                                     const std::vector<std::string>& domains) {
  if (scores.size() != labels.size()) throw ShapeError("score and label lists disagree");
  if (!domains.empty() && domains.size() != scores.size()) {
    throw ShapeError("domain list disagrees with the video count");
  }
  HighlightMetrics m;
  m.videos = static_cast<int>(scores.size());
  std::map<std::string, std::pair<double, int>> per_domain;
  for (size_t v = 0; v < scores.size(); ++v) {
    if (scores[v].size() != labels[v].size()) {
      throw ShapeError("video " + std::to_string(v) + " has " + std::to_string(scores[v].size()) +
                       " scores for " + std::to_string(labels[v].size()) + " labels");
    }
    std::vector<bool> pos(static_cast<size_t>(labels[v].size()));
    for (Eigen::Index i = 0; i < labels[v].size(); ++i) {
      pos[static_cast<size_t>(i)] = labels[v](i) >= positive_threshold;
    }
    if (std::find(pos.begin(), pos.end(), true) == pos.end()) continue;
    ++m.videos_with_positive;
    m.map += expected_average_precision(scores[v], pos);
    m.hit1 += expected_hit_at_1(scores[v], pos);
    const double t5 = top5_average_precision(scores[v], pos);
    m.top5_map += t5;
    if (!domains.empty()) {
      auto& d = per_domain[domains[v]];
      d.first += t5;
      d.second += 1;
    }
  }
  if (m.videos_with_positive > 0) {
    const double n = static_cast<double>(m.videos_with_positive);
    m.map /= n;
    m.hit1 /= n;
    m.top5_map /= n;
  }
  for (const auto& [name, acc] : per_domain) {
    m.domain_top5_map[name] = acc.first / static_cast<double>(acc.second);
  }
  return m;
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  std::vector<int> order(static_cast<size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x(a) < x(b); });
  Eigen::VectorXd ranks(x.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && x(order[j + 1]) == x(order[i])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks(order[k]) = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeError("correlation operands disagree in length");
  if (a.size() < 2) return 0.0;
  const Eigen::VectorXd ra = average_ranks(a).array() - average_ranks(a).mean();
  const Eigen::VectorXd rb = average_ranks(b).array() - average_ranks(b).mean();
  const double denom = std::sqrt(ra.squaredNorm() * rb.squaredNorm());
  return denom > 0.0 ? ra.dot(rb) / denom : 0.0;
}

}  // namespace spandiff
