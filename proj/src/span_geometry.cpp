#include "spandiff/span_geometry.hpp"

#include <algorithm>
#include <string>

#include "spandiff/errors.hpp"

namespace spandiff {

std::pair<double, double> cw_to_se(const TemporalSpan& span) {
  return {span.center - 0.5 * span.width, span.center + 0.5 * span.width};
}

TemporalSpan se_to_cw(double start, double end) {
  if (start > end) {
    throw InvalidInterval("start " + std::to_string(start) + " > end " +
                          std::to_string(end));
  }
  return {0.5 * (start + end), end - start};
}

double iou_1d(const TemporalSpan& a, const TemporalSpan& b) {
  const auto [as, ae] = cw_to_se(a);
  const auto [bs, be] = cw_to_se(b);
  const double inter = std::max(0.0, std::min(ae, be) - std::max(as, bs));
  const double uni = (ae - as) + (be - bs) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double generalized_iou_1d(const TemporalSpan& a, const TemporalSpan& b) {
  const auto [as, ae] = cw_to_se(a);
  const auto [bs, be] = cw_to_se(b);
  const double inter = std::max(0.0, std::min(ae, be) - std::max(as, bs));
  const double uni = (ae - as) + (be - bs) - inter;
  const double hull = std::max(ae, be) - std::min(as, bs);
  if (a.width <= 0.0 && b.width <= 0.0) {
    throw DegenerateSpans("generalized IoU of two zero-width spans");
  }
  // rounding can leave uni a hair above hull; the penalty is never negative
  return std::clamp(inter / uni, 0.0, 1.0) - std::max(0.0, hull - uni) / hull;
}

TemporalSpan clamp_span(const TemporalSpan& span) {
  const auto [s, e] = cw_to_se(span);
  const double cs = std::clamp(s, 0.0, 1.0);
  const double ce = std::clamp(e, 0.0, 1.0);
  // clipping keeps order unless the span had negative width to begin with
  const double lo = std::min(cs, ce);
  const double hi = std::max(cs, ce);
  return {0.5 * (lo + hi), hi - lo};
}

}  // namespace spandiff
