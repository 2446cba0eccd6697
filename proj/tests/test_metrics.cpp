#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "spandiff/errors.hpp"
#include "spandiff/metrics.hpp"

using namespace spandiff;

namespace {

TemporalSpan random_span(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = u(rng), b = u(rng);
  return se_to_cw(std::min(a, b), std::max(a, b));
}

// Scores drawn from a few levels so ties are common.
Eigen::VectorXd tied_scores(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> level(0, 3);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = 0.25 * level(rng);
  return s;
}

}  // namespace

TEST_CASE("R1 threshold straddle") {
  const SpanSet gt{se_to_cw(0.0, 0.6)};
  const std::vector<MomentPrediction> pred{{se_to_cw(0.0, 0.36), 0.9}};
  REQUIRE(iou_1d(pred[0].span, gt[0]) == doctest::Approx(0.6));
  const MomentMetrics m = evaluate_moments({pred}, {gt}, EvalConfig{});
  CHECK(m.r1[2].threshold == 0.5);
  CHECK(m.r1[2].value == 1.0);
  CHECK(m.r1[3].threshold == 0.7);
  CHECK(m.r1[3].value == 0.0);
}

TEST_CASE("perfect predictions score one everywhere") {
  std::mt19937_64 rng(1);
  std::vector<std::vector<MomentPrediction>> preds;
  std::vector<SpanSet> gts;
  for (int q = 0; q < 10; ++q) {
    SpanSet gt{random_span(rng)};
    preds.push_back({{gt[0], 0.9}});
    gts.push_back(gt);
  }
  const MomentMetrics m = evaluate_moments(preds, gts, EvalConfig{});
  for (const auto& r : m.r1) CHECK(r.value == 1.0);
  for (const auto& r : m.map) CHECK(r.value == 1.0);
  CHECK(m.map_avg == doctest::Approx(1.0));
  CHECK(m.queries == 10);
}

TEST_CASE("empty prediction lists count as misses") {
  const SpanSet gt{{0.5, 0.2}};
  const MomentMetrics m = evaluate_moments({{}, {{gt[0], 1.0}}}, {gt, gt}, EvalConfig{});
  CHECK(m.r1[0].value == 0.5);
  CHECK(m.map_avg == doctest::Approx(0.5));
  CHECK_THROWS_AS(evaluate_moments({{}}, {gt, gt}, EvalConfig{}), ShapeError);
}

TEST_CASE("moment metrics equal the reference implementation") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> npred(0, 50), ngt(1, 3);
  const EvalConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<MomentPrediction>> preds;
    std::vector<SpanSet> gts;
    for (int q = 0; q < 20; ++q) {
      SpanSet gt;
      const int k = ngt(rng);
      for (int i = 0; i < k; ++i) gt.push_back(random_span(rng));
      std::vector<MomentPrediction> p;
      const int n = npred(rng);
      for (int i = 0; i < n; ++i) {
        // mix near-copies of the truth with random spans
        TemporalSpan s = random_span(rng);
        if (i % 3 == 0) {
          const TemporalSpan& g = gt[static_cast<size_t>(i) % gt.size()];
          s = clamp_span({g.center + 0.02 * (i % 5), g.width * (0.9 + 0.05 * (i % 4))});
        }
        p.push_back({s, 1.0 - 0.01 * i});
      }
      preds.push_back(p);
      gts.push_back(gt);
    }
    const MomentMetrics m = evaluate_moments(preds, gts, cfg);
    for (const auto& r : m.r1) CHECK(r.value == oracle::recall_at_1(preds, gts, r.threshold));
    double grid_sum = 0.0;
    for (const auto& t : m.map_grid) {
      double ref = 0.0;
      for (size_t q = 0; q < preds.size(); ++q) {
        ref += oracle::average_precision(preds[q], gts[q], t.threshold, cfg.max_predictions);
      }
      CHECK(t.value == doctest::Approx(ref / 20.0).epsilon(1e-12));
      grid_sum += t.value;
    }
    CHECK(m.map_avg == doctest::Approx(grid_sum / 10.0).epsilon(1e-12));
  }
}

TEST_CASE("single-query AP hand cases") {
  const SpanSet gt{se_to_cw(0.0, 0.2), se_to_cw(0.5, 0.7)};
  const std::vector<MomentPrediction> ranked{
      {se_to_cw(0.5, 0.7), 0.9}, {se_to_cw(0.8, 0.9), 0.8}, {se_to_cw(0.0, 0.2), 0.7}};
  // precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1 -> 0.5 * 1 + 0.5 * 2/3
  CHECK(moment_average_precision(ranked, gt, 0.5, 10) == doctest::Approx(0.5 + 1.0 / 3.0));
  CHECK(moment_average_precision(ranked, gt, 0.5, 1) == doctest::Approx(0.5));
  // a duplicate of a matched prediction is a false positive
  const std::vector<MomentPrediction> dup{{gt[0], 0.9}, {gt[0], 0.8}};
  CHECK(moment_average_precision(dup, gt, 0.5, 10) == doctest::Approx(0.5));
}

TEST_CASE("threshold grid") {
  const auto g = map_threshold_grid();
  REQUIRE(g.size() == 10);
  CHECK(g.front() == 0.5);
  CHECK(g.back() == doctest::Approx(0.95));
}

TEST_CASE("highlight metrics on perfect and tied rankings") {
  Eigen::VectorXd labels(6);
  labels << 4, 1, 0, 4, 2, 0;
  const HighlightMetrics perfect = evaluate_highlights({labels}, {labels}, 4.0);
  CHECK(perfect.map == 1.0);
  CHECK(perfect.hit1 == 1.0);
  CHECK(perfect.top5_map == 1.0);

  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(10, 0.3);
  std::vector<bool> one(10, false);
  one[4] = true;
  double harmonic = 0.0;
  for (int k = 1; k <= 10; ++k) harmonic += 1.0 / k;
  CHECK(expected_average_precision(flat, one) == doctest::Approx(harmonic / 10.0).epsilon(1e-12));
  CHECK(expected_average_precision(flat, one) ==
        doctest::Approx(oracle::tie_averaged_ap(flat, one)).epsilon(1e-9));  // 10! summands
  CHECK(expected_hit_at_1(flat, one) == doctest::Approx(0.1));
}

TEST_CASE("HIT@1 is the top clip's relevance") {
  Eigen::VectorXd s(4);
  s << 0.1, 0.9, 0.3, 0.2;
  CHECK(expected_hit_at_1(s, {false, true, false, false}) == 1.0);
  CHECK(expected_hit_at_1(s, {true, false, true, true}) == 0.0);
}

TEST_CASE("tie-aware highlight metrics equal brute force over orderings") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.35);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const Eigen::VectorXd s = tied_scores(n, rng);
    std::vector<bool> pos(static_cast<size_t>(n));
    for (auto&& p : pos) p = coin(rng);
    if (std::find(pos.begin(), pos.end(), true) == pos.end()) pos[0] = true;
    CHECK(expected_average_precision(s, pos) ==
          doctest::Approx(oracle::tie_averaged_ap(s, pos)).epsilon(1e-12));
    CHECK(expected_hit_at_1(s, pos) ==
          doctest::Approx(oracle::tie_averaged_hit1(s, pos)).epsilon(1e-12));
  }
}

TEST_CASE("ranking metrics ignore a constant shift") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd s(12), labels(12);
    for (int i = 0; i < 12; ++i) {
      s(i) = n(rng);
      labels(i) = std::round(2.0 + 1.5 * n(rng));
    }
    labels(0) = 4.0;
    const Eigen::VectorXd shifted = (s.array() + 3.0).matrix();
    const HighlightMetrics a = evaluate_highlights({s}, {labels}, 4.0);
    const HighlightMetrics b = evaluate_highlights({shifted}, {labels}, 4.0);
    CHECK(a.map == b.map);
    CHECK(a.hit1 == b.hit1);
    CHECK(a.top5_map == b.top5_map);
  }
}

TEST_CASE("top-5 AP normalization and domains") {
  Eigen::VectorXd s(8);
  s << 8, 7, 6, 5, 4, 3, 2, 1;
  // positives at ranks 1, 3, 7 -> (1 + 2/3) / min(5, 3)
  const std::vector<bool> pos{true, false, true, false, false, false, true, false};
  CHECK(top5_average_precision(s, pos) == doctest::Approx((1.0 + 2.0 / 3.0) / 3.0));

  Eigen::VectorXd labels(8);
  labels << 4, 0, 4, 0, 0, 0, 4, 0;
  const Eigen::VectorXd none = Eigen::VectorXd::Zero(8);
  const HighlightMetrics m =
      evaluate_highlights({s, s, s}, {labels, none, labels}, 4.0, {"news", "vlog", "vlog"});
  CHECK(m.videos == 3);
  CHECK(m.videos_with_positive == 2);
  CHECK(m.domain_top5_map.size() == 2);
  CHECK(m.domain_top5_map.at("vlog") == doctest::Approx((1.0 + 2.0 / 3.0) / 3.0));
  CHECK(m.domain_top5_map.count("news") == 1);
  CHECK_THROWS_AS(evaluate_highlights({s}, {none.head(3)}, 4.0), ShapeError);
}

TEST_CASE("spearman correlation") {
  Eigen::VectorXd a(5), b(5);
  a << 1, 2, 3, 4, 5;
  b << 10, 20, 30, 40, 50;
  CHECK(spearman_correlation(a, b) == doctest::Approx(1.0));
  CHECK(spearman_correlation(a, -b) == doctest::Approx(-1.0));
  b << 1, 1, 2, 2, 3;
  // average ranks 1.5 1.5 3.5 3.5 5 against 1..5
  const double expected = 9.0 / std::sqrt(10.0 * 9.0);
  CHECK(spearman_correlation(a, b) == doctest::Approx(expected));
  CHECK(spearman_correlation(a, Eigen::VectorXd::Ones(5)) == 0.0);
}
