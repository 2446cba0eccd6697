#pragma once

#include <utility>
#include <vector>

namespace spandiff {

/// A temporal interval in normalized video time, stored as (center, width).
/// All spans live in [0, 1]; conversion to clip indices or seconds happens at
/// the metric/report boundary only.
struct TemporalSpan {
  double center = 0.0;
  double width = 0.0;

  double start() const { return center - 0.5 * width; }
  double end() const { return center + 0.5 * width; }

  friend bool operator==(const TemporalSpan&, const TemporalSpan&) = default;
};

using SpanSet = std::vector<TemporalSpan>;

std::pair<double, double> cw_to_se(const TemporalSpan& span);

/// Throws InvalidInterval when start > end.
TemporalSpan se_to_cw(double start, double end);

/// Plain temporal IoU in [0, 1]. Two zero-width spans give 0 rather than NaN.
double iou_1d(const TemporalSpan& a, const TemporalSpan& b);

/// IoU minus the fraction of the enclosing hull not covered by the union.
/// Range (-1, 1]. Throws DegenerateSpans when both widths are zero.
double generalized_iou_1d(const TemporalSpan& a, const TemporalSpan& b);

/// Clips start/end to [0, 1] and re-derives (center, width).
TemporalSpan clamp_span(const TemporalSpan& span);

}  // namespace spandiff
