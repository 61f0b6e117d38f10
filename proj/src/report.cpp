#include "bvc/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "bvc/output.hpp"

namespace bvc {

const char* to_string(PointFlag flag) {
  switch (flag) {
    case PointFlag::ok: return "ok";
    case PointFlag::underflow: return "underflow";
    case PointFlag::unresolved: return "unresolved";
    case PointFlag::quadrature_failure: return "quadrature_failure";
  }
  return "unknown";
}

int BoundSweepReport::flagged_count() const {
  return static_cast<int>(std::count_if(points.begin(), points.end(),
                                        [](const KernelPoint& p) { return p.flag != PointFlag::ok; }));
}

void finalize_ratios(BoundSweepReport& report) {
  double best = 0.0;
  for (auto& p : report.points) {
    if (p.flag == PointFlag::ok && !(p.bound >= std::numeric_limits<double>::min())) p.flag = PointFlag::underflow;
    if (p.flag != PointFlag::ok) {
      p.ratio = 0.0;
      continue;
    }
    p.ratio = std::abs(p.value) / p.bound;
    best = std::max(best, p.ratio);
  }
  report.empirical_C = best;
}

bool tail_stabilized(const BoundSweepReport& report, double head_fraction, double rel_tol) {
  double eta_max = 0.0;
  for (const auto& p : report.points)
    if (p.flag == PointFlag::ok) eta_max = std::max(eta_max, p.eta);
  double head = 0.0, all = 0.0;
  for (const auto& p : report.points) {
    if (p.flag != PointFlag::ok) continue;
    all = std::max(all, p.ratio);
    if (p.eta <= head_fraction * eta_max) head = std::max(head, p.ratio);
  }
  if (!std::isfinite(all)) return false;
  if (all == 0.0) return true;
  return all <= (1.0 + rel_tol) * head;
}

void write_csv(std::ostream& out, const BoundSweepReport& report) {
  out << "n,x_mag,t,eta,value,bound,ratio,flag\n";
  for (const auto& p : report.points) {
    out << p.n << ',' << format_real(p.x_mag) << ',' << format_real(p.t) << ',' << format_real(p.eta) << ','
        << format_real(p.value) << ',' << format_real(p.bound) << ',' << format_real(p.ratio) << ','
        << to_string(p.flag) << '\n';
  }
}

}  // namespace bvc
