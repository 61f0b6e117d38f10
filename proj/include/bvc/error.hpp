#pragma once

#include <stdexcept>
#include <string>

namespace bvc {

/// Raised when an adaptive quadrature stops refining without meeting its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate)
      : std::runtime_error(what + " (achieved error estimate " + std::to_string(estimate) + ")"),
        estimate_(estimate) {}

  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

}  // namespace bvc
