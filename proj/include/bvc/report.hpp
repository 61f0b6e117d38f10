#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bvc {

enum class PointFlag { ok, underflow, unresolved, quadrature_failure };

const char* to_string(PointFlag flag);

/// One evaluation of a kernel-type quantity against its claimed bound.
struct KernelPoint {
  int n = 1;
  double x_mag = 0.0;
  double t = 1.0;
  double eta = 0.0;
  double value = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  PointFlag flag = PointFlag::ok;
};

/// Ratio sweep of value/bound over a grid. empirical_C is the largest ratio
/// over unflagged points, reduced in point order.
struct BoundSweepReport {
  std::string bound_name;
  std::vector<KernelPoint> points;
  double empirical_C = 0.0;
  bool stabilized = false;

  int flagged_count() const;
};

/// Fills ratio for every unflagged point (|value|/bound, or flags a
/// non-positive/denormal bound as underflow) and recomputes empirical_C.
void finalize_ratios(BoundSweepReport& report);

/// Tail rule: the maximum over points with eta <= head_fraction * max eta
/// must be within rel_tol of the maximum over all points.
bool tail_stabilized(const BoundSweepReport& report, double head_fraction = 2.0 / 3.0,
                     double rel_tol = 0.01);

/// CSV with header n,x_mag,t,eta,value,bound,ratio,flag.
void write_csv(std::ostream& out, const BoundSweepReport& report);

}  // namespace bvc
