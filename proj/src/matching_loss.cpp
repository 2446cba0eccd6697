#include "spandiff/matching_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spandiff/errors.hpp"

namespace spandiff {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) throw TooManyTargets("assignment needs rows <= cols");
  if (!cost.allFinite()) throw NumericalError("non-finite matching cost");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> owner(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = owner[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const int j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
  }
  return row_to_col;
}

namespace {

double safe_giou(const TemporalSpan& a, const TemporalSpan& b) {
  if (a.width <= 0.0 && b.width <= 0.0) return a == b ? 1.0 : 0.0;
  return generalized_iou_1d(a, b);
}

}  // namespace

Eigen::MatrixXd matching_cost(const SpanSet& pred_spans, const Eigen::VectorXd& fg_prob,
                              const SpanSet& gt, const LossWeights& w) {
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(gt.size()),
                       static_cast<Eigen::Index>(pred_spans.size()));
  for (size_t g = 0; g < gt.size(); ++g) {
    for (size_t p = 0; p < pred_spans.size(); ++p) {
      const double l1 = std::abs(pred_spans[p].center - gt[g].center) +
                        std::abs(pred_spans[p].width - gt[g].width);
      const double liou = 1.0 - safe_giou(pred_spans[p], gt[g]);
      cost(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p)) =
          -fg_prob(static_cast<Eigen::Index>(p)) + w.lambda_l1 * l1 + w.lambda_iou * liou;
    }
  }
  return cost;
}

MatchAssignment hungarian_match(const SpanSet& pred_spans, const Eigen::MatrixXd& pred_conf,
                                const SpanSet& gt, const LossWeights& w) {
  if (gt.size() > pred_spans.size()) {
    throw TooManyTargets(std::to_string(gt.size()) + " targets for " +
                         std::to_string(pred_spans.size()) + " predictions");
  }
  if (pred_conf.rows() != static_cast<Eigen::Index>(pred_spans.size()) || pred_conf.cols() != 2) {
    throw ShapeError("confidences must be N x 2");
  }
  Eigen::VectorXd fg(pred_conf.rows());
  for (Eigen::Index i = 0; i < pred_conf.rows(); ++i) {
    fg(i) = 1.0 / (1.0 + std::exp(pred_conf(i, 1) - pred_conf(i, 0)));
  }
  const Eigen::MatrixXd cost = matching_cost(pred_spans, fg, gt, w);
  const std::vector<int> cols = solve_assignment(cost);
  MatchAssignment out;
  std::vector<bool> taken(pred_spans.size(), false);
  for (size_t g = 0; g < cols.size(); ++g) {
    out.pairs.emplace_back(cols[g], static_cast<int>(g));
    out.total_cost += cost(static_cast<Eigen::Index>(g), cols[g]);
    taken[static_cast<size_t>(cols[g])] = true;
  }
  for (size_t p = 0; p < taken.size(); ++p) {
    if (!taken[p]) out.unmatched.push_back(static_cast<int>(p));
  }
  return out;
}

double span_loss(const TemporalSpan& pred, const TemporalSpan& gt, const LossWeights& w) {
  const double l1 = std::abs(pred.center - gt.center) + std::abs(pred.width - gt.width);
  return w.lambda_l1 * l1 + w.lambda_iou * (1.0 - generalized_iou_1d(pred, gt));
}

ag::Var span_loss(const ag::Var& pred_unit, const SpanSet& gt, const MatchAssignment& match,
                  const LossWeights& w) {
  if (match.pairs.empty()) return ag::Var::scalar(0.0);
  std::vector<int> rows;
  ag::Matrix target(static_cast<Eigen::Index>(match.pairs.size()), 2);
  for (size_t k = 0; k < match.pairs.size(); ++k) {
    rows.push_back(match.pairs[k].first);
    const auto& g = gt.at(static_cast<size_t>(match.pairs[k].second));
    target(static_cast<Eigen::Index>(k), 0) = g.center;
    target(static_cast<Eigen::Index>(k), 1) = g.width;
  }
  const double k = static_cast<double>(match.pairs.size());
  ag::Var pred = ag::gather_rows(pred_unit, rows);
  ag::Var tgt(target);
  ag::Var l1 = ag::sum(ag::abs(ag::sub(pred, tgt)));

  ag::Var pc = ag::slice_cols(pred, 0, 1);
  ag::Var pw = ag::slice_cols(pred, 1, 1);
  ag::Var tc = ag::slice_cols(tgt, 0, 1);
  ag::Var tw = ag::slice_cols(tgt, 1, 1);
  ag::Var ps = ag::sub(pc, ag::scale(pw, 0.5));
  ag::Var pe = ag::add(pc, ag::scale(pw, 0.5));
  ag::Var ts = ag::sub(tc, ag::scale(tw, 0.5));
  ag::Var te = ag::add(tc, ag::scale(tw, 0.5));
  ag::Var inter = ag::relu(ag::sub(ag::minimum(pe, te), ag::maximum(ps, ts)));
  ag::Var uni = ag::sub(ag::add(pw, tw), inter);
  ag::Var hull = ag::sub(ag::maximum(pe, te), ag::minimum(ps, ts));
  // guard only matters for zero-width ground truth against a zero-width prediction
  constexpr double kEps = 1e-9;
  uni = ag::add_scalar(uni, kEps);
  hull = ag::add_scalar(hull, kEps);
  ag::Var giou = ag::sub(ag::div(inter, uni), ag::div(ag::sub(hull, uni), hull));
  ag::Var liou = ag::sum(ag::add_scalar(ag::neg(giou), 1.0));
  return ag::scale(ag::add(ag::scale(l1, w.lambda_l1), ag::scale(liou, w.lambda_iou)), 1.0 / k);
}

ag::Var class_loss(const ag::Var& logits, const MatchAssignment& match) {
  const Eigen::Index n = logits.rows();
  if (logits.cols() != 2) throw ShapeError("class logits must be N x 2");
  ag::Matrix onehot = ag::Matrix::Zero(n, 2);
  onehot.col(1).setOnes();
  for (const auto& [p, g] : match.pairs) {
    if (p < 0 || p >= n) throw ShapeError("assignment refers to a missing prediction");
    onehot(p, 0) = 1.0;
    onehot(p, 1) = 0.0;
  }
  ag::Var logp = ag::log_softmax_rows(logits);
  return ag::scale(ag::sum(ag::mul(logp, ag::Var(onehot))), -1.0 / static_cast<double>(n));
}

ag::Var hinge_loss(const ag::Var& s_dis, const std::vector<std::pair<int, int>>& high_low,
                   double margin) {
  if (high_low.empty()) return {};
  std::vector<int> hi, lo;
  for (const auto& [h, l] : high_low) {
    hi.push_back(h);
    lo.push_back(l);
  }
  ag::Var diff = ag::sub(ag::gather_rows(s_dis, lo), ag::gather_rows(s_dis, hi));
  return ag::mean(ag::relu(ag::add_scalar(diff, margin)));
}

ag::Var saliency_kl(const ag::Var& x0_hat, const Eigen::VectorXd& x0,
                    const std::vector<bool>& valid) {
  if (x0_hat.rows() != x0.size() || x0_hat.cols() != 1 ||
      static_cast<Eigen::Index>(valid.size()) != x0.size()) {
    throw ShapeError("saliency KL operands disagree in length");
  }
  std::vector<int> rows;
  for (size_t i = 0; i < valid.size(); ++i) {
    if (valid[i]) rows.push_back(static_cast<int>(i));
  }
  if (rows.empty()) throw EmptyInput("no valid clips for the saliency KL term");
  Eigen::RowVectorXd target(static_cast<Eigen::Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) target(static_cast<Eigen::Index>(k)) = x0(rows[k]);
  const double m = target.maxCoeff();
  Eigen::RowVectorXd p = (target.array() - m).exp();
  p /= p.sum();
  const Eigen::RowVectorXd logp = p.array().log();
  ag::Var logq = ag::log_softmax_rows(ag::transpose(ag::gather_rows(x0_hat, rows)));
  // sum p (log p - log q)
  const double neg_entropy = (p.array() * logp.array()).sum();
  ag::Var cross = ag::sum(ag::mul(logq, ag::Var(ag::Matrix(p))));
  return ag::add_scalar(ag::neg(cross), neg_entropy);
}

std::vector<std::pair<int, int>> sample_hinge_pairs(const Eigen::VectorXd& labels,
                                                    const std::vector<bool>& inside,
                                                    const std::vector<bool>& valid, int pairs,
                                                    std::mt19937_64& rng) {
  std::vector<int> pos, neg;
  for (size_t i = 0; i < inside.size(); ++i) {
    if (!valid[i]) continue;
    (inside[i] ? pos : neg).push_back(static_cast<int>(i));
  }
  std::vector<std::pair<int, int>> out;
  if (pos.empty() || neg.empty()) return out;
  auto ordered = [&](int h, int l) { return labels(h) > labels(l); };
  if (pairs <= 0) {
    for (int h : pos) {
      for (int l : neg) {
        if (ordered(h, l)) out.emplace_back(h, l);
      }
    }
    return out;
  }
  std::uniform_int_distribution<size_t> pick_pos(0, pos.size() - 1);
  std::uniform_int_distribution<size_t> pick_neg(0, neg.size() - 1);
  for (int k = 0; k < pairs; ++k) {
    const int h = pos[pick_pos(rng)];
    const int l = neg[pick_neg(rng)];
    if (ordered(h, l)) out.emplace_back(h, l);
  }
  return out;
}

SaliencyLossTerms saliency_loss(const ag::Var& s_dis, const ag::Var& x0_hat,
                                const Eigen::VectorXd& x0,
                                const std::vector<std::pair<int, int>>& high_low,
                                const std::vector<bool>& valid, const LossWeights& w) {
  return {hinge_loss(s_dis, high_low, w.margin), saliency_kl(x0_hat, x0, valid)};
}

ag::Var total_loss(const LossComponents& parts, const LossWeights& w) {
  auto check = [](const ag::Var& v, const char* name) {
    if (v.defined() && !std::isfinite(v.item())) {
      throw NumericalError(std::string("loss component '") + name + "' is not finite");
    }
  };
  check(parts.cls, "class");
  check(parts.span, "span");
  check(parts.hinge, "hinge");
  check(parts.kl, "kl");
  ag::Var total = ag::Var::scalar(0.0);
  if (parts.cls.defined()) total = ag::add(total, ag::scale(parts.cls, w.lambda_class));
  if (parts.span.defined()) total = ag::add(total, parts.span);
  ag::Var sal = ag::Var::scalar(0.0);
  if (parts.hinge.defined()) sal = ag::add(sal, parts.hinge);
  if (parts.kl.defined()) sal = ag::add(sal, parts.kl);
  return ag::add(total, ag::scale(sal, w.lambda_saliency));
}

}  // namespace spandiff
